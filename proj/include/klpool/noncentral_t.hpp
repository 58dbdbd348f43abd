#pragma once

namespace klpool {

/// Relative error target for the adaptive Gauss-Kronrod quadrature.
inline constexpr double kDensityQuadratureTolerance = 1e-12;

/// Density of T = (Z + ncp) / sqrt(V / df) at t, with Z standard normal and
/// V chi-squared on df degrees of freedom, integrated over the scale of the
/// denominator. Throws DomainError for df < 1 and ConvergenceError when the
/// quadrature misses its tolerance.
double noncentral_t_signed_pdf(double t, double df, double ncp,
                               double rel_tol = kDensityQuadratureTolerance);

/// Density of |T| at t >= 0: the signed density at t plus the one at -t.
double noncentral_t_pdf(double t, double df, double ncp,
                        double rel_tol = kDensityQuadratureTolerance);

}  // namespace klpool
