#pragma once

// Weighting distribution induced by a finite family of distributions and the
// family's centroid, the mixture that minimizes the worst-case divergence
// from the members. The two are linked by the redundancy-capacity theorem:
// the centroid is the mixture under the capacity-achieving weights.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "klpool/distribution.hpp"

namespace klpool {

struct SolverOptions {
  /// Stop once the certified optimality gap (nats) is at most this.
  double tol = 1e-10;
  std::size_t max_iter = 100000;
  /// Keep the gap of every capacity iteration in CentroidResult::gap_trace.
  bool record_trace = false;
};

template <class Dist>
struct CentroidResult {
  Dist centroid;
  WeightVector weights;
  /// Weighted mean divergence of the members from the centroid, in nats.
  double value = 0.0;
  std::size_t iterations = 0;
  /// max_i D(P_i || centroid) - value; bounds the distance to the optimum.
  double gap = 0.0;
  std::vector<double> gap_trace;
};

/// Maximizes sum_i w_i D(P_i || sum_j w_j P_j) over the simplex by the
/// alternating capacity iteration started from uniform weights (for products
/// of n Bernoulli laws the exponent is scaled by 1/n). Members equal
/// within 1e-12 are merged: the first occurrence carries the merged weight
/// and later copies report 0.
///
/// Once the iteration certifies the gap, the result is polished on its
/// support: a two-member support is solved exactly as a one-dimensional root
/// of D(P_a||M) = D(P_b||M), larger supports continue the iteration with the
/// inactive members fixed at zero. The polished weights are kept only when
/// their gap over the whole family is within tolerance.
///
/// Throws DimensionError on an empty or ragged family and ConvergenceError
/// when max_iter is exhausted.
template <class Dist>
CentroidResult<Dist> induced_weighting(std::span<const Dist> family,
                                       const SolverOptions& options = {});

/// Brute-force maximization of the same objective on a simplex grid, zooming
/// in by factors of ten around the incumbent until the lattice spacing equals
/// `step`. For verification only; limited to four members.
template <class Dist>
CentroidResult<Dist> grid_oracle_weighting(std::span<const Dist> family, double step);

inline constexpr std::size_t kMaxGridOracleMembers = 4;

struct EquidistanceReport {
  bool ok = true;
  std::vector<double> divergences;
  /// Indices that failed their condition.
  std::vector<std::size_t> violations;
  double worst_excess = 0.0;

  std::string describe() const;
};

/// Capacity KKT conditions: members with weight > tol sit at divergence
/// `value` from the centroid (within tol); the rest are no further than
/// value + tol.
template <class Dist>
EquidistanceReport equidistance_check(const CentroidResult<Dist>& result,
                                      std::span<const Dist> family, double tol);

}  // namespace klpool
