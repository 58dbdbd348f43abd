#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "klpool/distribution.hpp"

namespace klpool {

/// Coordinates at or below this infinity-norm distance from the hull of the
/// other points count as inside it.
inline constexpr double kHullResidualTolerance = 1e-9;

/// Tuple representations of a family: one coordinate vector per member, all
/// of the same dimension, entries in [0,1].
class PointSet {
 public:
  explicit PointSet(std::vector<std::vector<double>> points);

  template <class Dist>
  static PointSet from_family(std::span<const Dist> family) {
    std::vector<std::vector<double>> pts;
    pts.reserve(family.size());
    for (const Dist& p : family) {
      auto x = coordinates(p);
      pts.emplace_back(x.begin(), x.end());
    }
    return PointSet(std::move(pts));
  }

  std::size_t size() const noexcept { return points_.size(); }
  std::size_t dimension() const noexcept { return points_.front().size(); }
  std::span<const double> operator[](std::size_t i) const { return points_[i]; }

 private:
  std::vector<std::vector<double>> points_;
};

struct HullMembership {
  bool inside = false;
  /// Infinity norm of sum_k lambda_k x_k - x_i at the nearest hull point.
  double residual = 0.0;
  /// Convex weights over all points; lambda[i] is 0 for the tested point.
  std::vector<double> lambda;
};

/// Nearest point to ps[i] in the convex hull of the other points, found with
/// Wolfe's minimum-norm-point method.
HullMembership hull_membership(const PointSet& ps, std::size_t i);

/// Indices (ascending) of the extreme points of the convex hull of ps. Points
/// within 1e-12 of an earlier point are treated as copies of it and dropped.
std::vector<std::size_t> extreme_subset(const PointSet& ps);

/// For one-dimensional data the extreme subset is {argmin, argmax}; ties go
/// to the lowest index. Throws DomainError on an empty list.
std::pair<std::size_t, std::size_t> binary_extremes(std::span<const double> probs);

}  // namespace klpool
