#include "klpool/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "klpool/errors.hpp"

namespace klpool {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_unit_interval(std::span<const double> v, const char* what) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] >= 0.0 && v[i] <= 1.0)) {
      throw DomainError(std::string(what) + ": entry " + std::to_string(i) + " = " +
                        std::to_string(v[i]) + " is outside [0,1]");
    }
  }
}

void normalize(std::vector<double>& v, const char* what) {
  double total = std::accumulate(v.begin(), v.end(), 0.0);
  if (std::abs(total - 1.0) > kNormalizationSlack) {
    throw DomainError(std::string(what) + ": entries sum to " + std::to_string(total));
  }
  for (double& x : v) x /= total;
}

// p log(p/q) with 0 log(0/q) = 0.
double xlogx_over(double p, double q) noexcept {
  if (p == 0.0) return 0.0;
  if (q == 0.0) return kInf;
  return p * std::log(p / q);
}

}  // namespace

FiniteDistribution::FiniteDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.size() < 2) throw DomainError("FiniteDistribution needs at least two outcomes");
  check_unit_interval(probs_, "FiniteDistribution");
  normalize(probs_, "FiniteDistribution");
}

FiniteDistribution FiniteDistribution::bernoulli(double p0) {
  return FiniteDistribution({p0, 1.0 - p0});
}

BernoulliProduct::BernoulliProduct(std::vector<double> null_probs)
    : null_probs_(std::move(null_probs)) {
  if (null_probs_.empty()) throw DomainError("BernoulliProduct needs at least one variable");
  check_unit_interval(null_probs_, "BernoulliProduct");
}

FiniteDistribution BernoulliProduct::expand() const {
  const std::size_t n = null_probs_.size();
  if (n > kMaxExpandedVariables) {
    throw DomainError("joint expansion limited to " + std::to_string(kMaxExpandedVariables) +
                      " variables");
  }
  std::vector<double> joint(std::size_t{1} << n);
  for (std::size_t outcome = 0; outcome < joint.size(); ++outcome) {
    double prob = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      prob *= (outcome >> j) & 1U ? 1.0 - null_probs_[j] : null_probs_[j];
    }
    joint[outcome] = prob;
  }
  return FiniteDistribution(std::move(joint));
}

double Divergence::bits() const noexcept { return nats / std::log(2.0); }

WeightVector::WeightVector(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw DomainError("WeightVector is empty");
  check_unit_interval(weights_, "WeightVector");
  normalize(weights_, "WeightVector");
}

double binary_divergence(double p, double q) noexcept {
  double d = xlogx_over(p, q) + xlogx_over(1.0 - p, 1.0 - q);
  return d < 0.0 ? 0.0 : d;  // rounding can dip below zero; NaN passes through
}

Divergence kl_divergence(const FiniteDistribution& p, const FiniteDistribution& q) {
  if (p.size() != q.size()) {
    throw DimensionError("kl_divergence: sample spaces of size " + std::to_string(p.size()) +
                         " and " + std::to_string(q.size()));
  }
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) d += xlogx_over(p[i], q[i]);
  return Divergence{d < 0.0 ? 0.0 : d};
}

Divergence kl_divergence(const BernoulliProduct& p, const BernoulliProduct& q) {
  if (p.size() != q.size()) {
    throw DimensionError("kl_divergence: products of " + std::to_string(p.size()) + " and " +
                         std::to_string(q.size()) + " variables");
  }
  double d = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) d += binary_divergence(p[j], q[j]);
  return Divergence{d};
}

double information_gain(const FiniteDistribution& p_true, const FiniteDistribution& p_ref,
                        const FiniteDistribution& q) {
  Divergence before = kl_divergence(p_true, p_ref);
  Divergence after = kl_divergence(p_true, q);
  if (!before.finite() || !after.finite()) {
    throw DomainError("information_gain undefined: infinite divergence");
  }
  return before.nats - after.nats;
}

namespace {

std::vector<double> mix_coordinates(std::size_t family_size, std::size_t dim,
                                    const WeightVector& w, auto&& coord) {
  if (family_size != w.size()) {
    throw DimensionError("mixture: " + std::to_string(family_size) + " members but " +
                         std::to_string(w.size()) + " weights");
  }
  std::vector<double> out(dim, 0.0);
  for (std::size_t i = 0; i < family_size; ++i) {
    auto x = coord(i);
    if (x.size() != dim) throw DimensionError("mixture: members have different dimensions");
    for (std::size_t k = 0; k < dim; ++k) out[k] += w[i] * x[k];
  }
  for (double& v : out) v = std::clamp(v, 0.0, 1.0);
  return out;
}

}  // namespace

FiniteDistribution mixture(std::span<const FiniteDistribution> family, const WeightVector& w) {
  if (family.empty()) throw DimensionError("mixture of an empty family");
  return FiniteDistribution(mix_coordinates(family.size(), family[0].size(), w,
                                            [&](std::size_t i) { return family[i].probs(); }));
}

BernoulliProduct mixture(std::span<const BernoulliProduct> family, const WeightVector& w) {
  if (family.empty()) throw DimensionError("mixture of an empty family");
  return BernoulliProduct(mix_coordinates(family.size(), family[0].size(), w,
                                          [&](std::size_t i) { return family[i].null_probs(); }));
}

}  // namespace klpool
