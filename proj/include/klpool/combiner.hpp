#pragma once

// Combination of conflicting distributions: keep the members that satisfy the
// plausibility constraints, reduce them to the extreme points of their hull,
// and return the centroid of what remains.

#include <array>
#include <compare>
#include <cstddef>
#include <span>
#include <vector>

#include "klpool/centroid.hpp"
#include "klpool/distribution.hpp"

namespace klpool {

/// Slack applied to the box bounds when testing membership.
inline constexpr double kBoxSlack = 1e-12;

/// Closed per-coordinate bounds. For a BernoulliProduct coordinate j bounds
/// P(xi_j = 0); for a FiniteDistribution coordinate k bounds P({k}).
class PlausibleBox {
 public:
  PlausibleBox(std::vector<double> lower, std::vector<double> upper);

  /// [0,1]^n: every distribution is plausible.
  static PlausibleBox unit(std::size_t n);
  /// [lower_j, 1] for each j.
  static PlausibleBox lower_bounded(std::vector<double> lower);

  std::size_t size() const noexcept { return lower_.size(); }
  std::span<const double> lower() const noexcept { return lower_; }
  std::span<const double> upper() const noexcept { return upper_; }

  bool contains(std::span<const double> x) const;
  /// Coordinates of x that fall outside the box.
  std::vector<std::size_t> violations(std::span<const double> x) const;

 private:
  std::vector<double> lower_;
  std::vector<double> upper_;
};

template <class Dist>
struct CombinationResult {
  /// Indices into the combining list that satisfy the box.
  std::vector<std::size_t> surviving;
  /// Subset of `surviving` on the hull of the survivors; carries the weights.
  std::vector<std::size_t> extreme;
  WeightVector weights;
  Dist combined;
  /// Worst-case divergence from the combination over the survivors, in nats.
  double value = 0.0;
  double gap = 0.0;
  std::size_t iterations = 0;
};

/// Throws EmptyIntersectionError when no member satisfies the box, with the
/// violated coordinates of each member in the message.
template <class Dist>
CombinationResult<Dist> combine(std::span<const Dist> combining, const PlausibleBox& box,
                                const SolverOptions& options = {});

/// Independent-hypotheses case: members are products of Bernoulli variables
/// and the divergence decomposes over coordinates.
inline CombinationResult<BernoulliProduct> combine_independent(
    std::span<const BernoulliProduct> combining, const PlausibleBox& box,
    const SolverOptions& options = {}) {
  return combine(combining, box, options);
}

struct Interval {
  double lo = 0.0;
  double hi = 1.0;

  bool contains(double p) const { return p >= lo - kBoxSlack && p <= hi + kBoxSlack; }
};

struct BinaryCombination {
  double lo = 0.0;      ///< smallest plausible probability
  double hi = 0.0;      ///< largest plausible probability
  double w_plus = 1.0;  ///< weight on lo
  double p_plus = 0.0;  ///< w_plus * lo + (1 - w_plus) * hi
  double value = 0.0;   ///< minimax divergence in nats
  std::vector<std::size_t> plausible;
};

/// Combines probabilities of a single event. Only the lowest and highest
/// plausible values matter; their mixing weight equalizes the divergences of
/// the two from the combination. When lo == hi the weight is 1.
BinaryCombination combine_binary(std::span<const double> probs, Interval plausible = {});

/// Lexicographically ordered utility with two or three components.
class Utility {
 public:
  Utility(double first, double second);
  Utility(double first, double second, double third);

  std::span<const double> components() const noexcept { return {components_.data(), arity_}; }
  std::size_t arity() const noexcept { return arity_; }

 private:
  std::array<double, 3> components_{};
  std::size_t arity_ = 0;
};

/// Throws DimensionError on arity mismatch and DomainError on NaN components.
std::weak_ordering lex_compare(const Utility& u, const Utility& v);

/// Rows are outcomes, columns are actions.
using LossMatrix = std::vector<std::vector<double>>;

/// Action minimizing expected loss under p; ties go to the lowest index.
std::size_t optimal_action(const FiniteDistribution& p, const LossMatrix& loss);

inline std::size_t optimal_action(const CombinationResult<FiniteDistribution>& combined,
                                  const LossMatrix& loss) {
  return optimal_action(combined.combined, loss);
}

}  // namespace klpool
