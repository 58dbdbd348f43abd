#pragma once

// Finite probability distributions, products of independent Bernoulli
// variables, and the information divergence between them. All logarithms are
// natural, so divergences are in nats.

#include <compare>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace klpool {

/// Sums within this distance of 1 are renormalized; anything further is
/// rejected.
inline constexpr double kNormalizationSlack = 1e-9;

/// Probability vector over the outcomes {0, ..., size-1}.
class FiniteDistribution {
 public:
  /// Throws DomainError on fewer than two outcomes, entries outside [0,1], or
  /// a sum further than kNormalizationSlack from 1.
  explicit FiniteDistribution(std::vector<double> probs);

  /// Two-outcome distribution with P({0}) = p0.
  static FiniteDistribution bernoulli(double p0);

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const noexcept { return probs_; }

  friend bool operator==(const FiniteDistribution&,
                         const FiniteDistribution&) = default;

 private:
  std::vector<double> probs_;
};

/// Joint law of N independent Bernoulli variables xi_1..xi_N, stored as the
/// marginals P(xi_j = 0).
class BernoulliProduct {
 public:
  explicit BernoulliProduct(std::vector<double> null_probs);

  std::size_t size() const noexcept { return null_probs_.size(); }
  double operator[](std::size_t j) const { return null_probs_[j]; }
  std::span<const double> null_probs() const noexcept { return null_probs_; }

  /// The 2^N-outcome joint distribution. Outcome index bit j set means
  /// xi_j = 1. Limited to N <= kMaxExpandedVariables.
  FiniteDistribution expand() const;

  friend bool operator==(const BernoulliProduct&,
                         const BernoulliProduct&) = default;

 private:
  std::vector<double> null_probs_;
};

inline constexpr std::size_t kMaxExpandedVariables = 20;

/// Information divergence in nats. May be +infinity.
struct Divergence {
  double nats = 0.0;

  bool finite() const noexcept { return nats < std::numeric_limits<double>::infinity(); }
  double bits() const noexcept;

  auto operator<=>(const Divergence&) const = default;
};

/// Point on the probability simplex.
class WeightVector {
 public:
  /// Entries must lie in [0,1] and sum to 1 within kNormalizationSlack.
  explicit WeightVector(std::vector<double> weights);

  std::size_t size() const noexcept { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  std::span<const double> values() const noexcept { return weights_; }

 private:
  std::vector<double> weights_;
};

Divergence kl_divergence(const FiniteDistribution& p, const FiniteDistribution& q);

/// Sum of per-coordinate binary divergences (chain rule for independent
/// coordinates).
Divergence kl_divergence(const BernoulliProduct& p, const BernoulliProduct& q);

/// D(p_true || p_ref) - D(p_true || q). Throws DomainError when either
/// divergence is infinite.
double information_gain(const FiniteDistribution& p_true,
                        const FiniteDistribution& p_ref,
                        const FiniteDistribution& q);

FiniteDistribution mixture(std::span<const FiniteDistribution> family,
                           const WeightVector& w);
BernoulliProduct mixture(std::span<const BernoulliProduct> family,
                         const WeightVector& w);

/// Binary divergence D(Bern(p) || Bern(q)) with the 0 log 0 = 0 convention.
double binary_divergence(double p, double q) noexcept;

/// Coordinates used for hull computations: the probability tuple of a finite
/// distribution, or the null marginals of a product.
inline std::span<const double> coordinates(const FiniteDistribution& p) { return p.probs(); }
inline std::span<const double> coordinates(const BernoulliProduct& p) { return p.null_probs(); }

/// Largest absolute coordinate difference, or +infinity on size mismatch.
template <class Dist>
double max_abs_difference(const Dist& a, const Dist& b) {
  auto x = coordinates(a);
  auto y = coordinates(b);
  if (x.size() != y.size()) return std::numeric_limits<double>::infinity();
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double e = x[i] > y[i] ? x[i] - y[i] : y[i] - x[i];
    if (e > d) d = e;
  }
  return d;
}

}  // namespace klpool
