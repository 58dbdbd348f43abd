#include "klpool/noncentral_t.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "klpool/errors.hpp"

namespace klpool {

double noncentral_t_signed_pdf(double t, double df, double ncp, double rel_tol) {
  if (!(df >= 1.0)) throw DomainError("noncentral t: degrees of freedom must be >= 1");
  if (!std::isfinite(t) || !std::isfinite(ncp)) throw DomainError("noncentral t: non-finite argument");

  // S = sqrt(V / df) has log density
  //   log 2 + (df/2) log(df/2) - lgamma(df/2) + (df-1) log s - df s^2 / 2,
  // and T = (Z + ncp) / S, so f(t) = E[S phi(t S - ncp)].
  const double log_norm = std::log(2.0) + 0.5 * df * std::log(0.5 * df) - std::lgamma(0.5 * df) -
                          0.5 * std::log(2.0 * std::numbers::pi);
  auto integrand = [&](double s) {
    if (s <= 0.0) return 0.0;
    const double r = t * s - ncp;
    return std::exp(log_norm + df * std::log(s) - 0.5 * df * s * s - 0.5 * r * r);
  };

  // Split where the integrand peaks roughly, so neither half hides the mass.
  const double split = 1.0;
  double err_lo = 0.0;
  double err_hi = 0.0;
  using Quadrature = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double lo = Quadrature::integrate(integrand, 0.0, split, 15, rel_tol, &err_lo);
  const double hi = Quadrature::integrate(integrand, split, std::numeric_limits<double>::infinity(),
                                          15, rel_tol, &err_hi);
  const double value = lo + hi;
  const double attained = (err_lo + err_hi) / std::max(value, 1e-300);
  if (value > 1e-250 && attained > std::max(rel_tol * 1e3, 1e-8)) {
    std::ostringstream msg;
    msg << "noncentral t quadrature reached relative error " << attained << " at t=" << t
        << " df=" << df << " ncp=" << ncp;
    throw ConvergenceError(msg.str(), attained);
  }
  return value;
}

double noncentral_t_pdf(double t, double df, double ncp, double rel_tol) {
  if (t < 0.0) return 0.0;
  if (t == 0.0) return 2.0 * noncentral_t_signed_pdf(0.0, df, ncp, rel_tol);
  return noncentral_t_signed_pdf(t, df, ncp, rel_tol) + noncentral_t_signed_pdf(-t, df, ncp, rel_tol);
}

}  // namespace klpool
