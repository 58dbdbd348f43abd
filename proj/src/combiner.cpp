#include "klpool/combiner.hpp"

#include <cmath>
#include <sstream>

#include "klpool/errors.hpp"
#include "klpool/extreme.hpp"

namespace klpool {

PlausibleBox::PlausibleBox(std::vector<double> lower, std::vector<double> upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size()) throw DimensionError("PlausibleBox bounds differ in length");
  if (lower_.empty()) throw DomainError("PlausibleBox is empty");
  for (std::size_t j = 0; j < lower_.size(); ++j) {
    if (!(0.0 <= lower_[j] && lower_[j] <= upper_[j] && upper_[j] <= 1.0)) {
      std::ostringstream msg;
      msg << "PlausibleBox coordinate " << j << " has bounds [" << lower_[j] << ", " << upper_[j]
          << "]";
      throw DomainError(msg.str());
    }
  }
}

PlausibleBox PlausibleBox::unit(std::size_t n) {
  return PlausibleBox(std::vector<double>(n, 0.0), std::vector<double>(n, 1.0));
}

PlausibleBox PlausibleBox::lower_bounded(std::vector<double> lower) {
  std::vector<double> upper(lower.size(), 1.0);
  return PlausibleBox(std::move(lower), std::move(upper));
}

bool PlausibleBox::contains(std::span<const double> x) const {
  if (x.size() != size()) throw DimensionError("PlausibleBox dimension mismatch");
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j] < lower_[j] - kBoxSlack || x[j] > upper_[j] + kBoxSlack) return false;
  }
  return true;
}

std::vector<std::size_t> PlausibleBox::violations(std::span<const double> x) const {
  if (x.size() != size()) throw DimensionError("PlausibleBox dimension mismatch");
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j] < lower_[j] - kBoxSlack || x[j] > upper_[j] + kBoxSlack) out.push_back(j);
  }
  return out;
}

template <class Dist>
CombinationResult<Dist> combine(std::span<const Dist> combining, const PlausibleBox& box,
                                const SolverOptions& options) {
  if (combining.empty()) throw DomainError("combine: no combining distributions");
  std::vector<std::size_t> surviving;
  std::ostringstream report;
  for (std::size_t i = 0; i < combining.size(); ++i) {
    auto bad = box.violations(coordinates(combining[i]));
    if (bad.empty()) {
      surviving.push_back(i);
      continue;
    }
    report << "\n  member " << i << " violates " << bad.size() << " bound(s), first at coordinate "
           << bad.front() << ": value " << coordinates(combining[i])[bad.front()] << " outside ["
           << box.lower()[bad.front()] << ", " << box.upper()[bad.front()] << "]";
  }
  if (surviving.empty()) {
    throw EmptyIntersectionError("no plausible combining distribution:" + report.str());
  }

  std::vector<Dist> survivors;
  for (std::size_t i : surviving) survivors.push_back(combining[i]);
  std::vector<std::size_t> hull = extreme_subset(PointSet::from_family<Dist>(survivors));

  std::vector<Dist> extreme_members;
  std::vector<std::size_t> extreme;
  for (std::size_t k : hull) {
    extreme.push_back(surviving[k]);
    extreme_members.push_back(survivors[k]);
  }
  CentroidResult<Dist> centroid = induced_weighting<Dist>(extreme_members, options);
  return CombinationResult<Dist>{std::move(surviving), std::move(extreme), centroid.weights,
                                 centroid.centroid,    centroid.value,     centroid.gap,
                                 centroid.iterations};
}

template CombinationResult<FiniteDistribution> combine(std::span<const FiniteDistribution>,
                                                       const PlausibleBox&, const SolverOptions&);
template CombinationResult<BernoulliProduct> combine(std::span<const BernoulliProduct>,
                                                     const PlausibleBox&, const SolverOptions&);

BinaryCombination combine_binary(std::span<const double> probs, Interval plausible) {
  if (!(0.0 <= plausible.lo && plausible.lo <= plausible.hi && plausible.hi <= 1.0)) {
    throw DomainError("plausible interval must satisfy 0 <= lo <= hi <= 1");
  }
  BinaryCombination out;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!(probs[i] >= 0.0 && probs[i] <= 1.0)) throw DomainError("probability outside [0,1]");
    if (plausible.contains(probs[i])) out.plausible.push_back(i);
  }
  if (out.plausible.empty()) {
    std::ostringstream msg;
    msg << "no plausible combining distribution: none of " << probs.size()
        << " probabilities lies in [" << plausible.lo << ", " << plausible.hi << "]";
    throw EmptyIntersectionError(msg.str());
  }
  out.lo = out.hi = probs[out.plausible.front()];
  for (std::size_t i : out.plausible) {
    out.lo = std::min(out.lo, probs[i]);
    out.hi = std::max(out.hi, probs[i]);
  }
  if (out.lo == out.hi) {
    out.w_plus = 1.0;
    out.p_plus = out.lo;
    out.value = 0.0;
    return out;
  }
  const std::vector<FiniteDistribution> pair{FiniteDistribution::bernoulli(out.lo),
                                             FiniteDistribution::bernoulli(out.hi)};
  CentroidResult<FiniteDistribution> c = induced_weighting<FiniteDistribution>(pair);
  out.w_plus = c.weights[0];
  out.p_plus = out.w_plus * out.lo + (1.0 - out.w_plus) * out.hi;
  out.value = c.value;
  return out;
}

Utility::Utility(double first, double second) : components_{first, second, 0.0}, arity_(2) {}

Utility::Utility(double first, double second, double third)
    : components_{first, second, third}, arity_(3) {}

std::weak_ordering lex_compare(const Utility& u, const Utility& v) {
  if (u.arity() != v.arity()) throw DimensionError("lex_compare: utilities differ in arity");
  for (std::size_t k = 0; k < u.arity(); ++k) {
    double a = u.components()[k];
    double b = v.components()[k];
    if (std::isnan(a) || std::isnan(b)) throw DomainError("lex_compare: NaN utility component");
    if (a < b) return std::weak_ordering::less;
    if (a > b) return std::weak_ordering::greater;
  }
  return std::weak_ordering::equivalent;
}

std::size_t optimal_action(const FiniteDistribution& p, const LossMatrix& loss) {
  if (loss.size() != p.size()) {
    throw DimensionError("loss matrix has " + std::to_string(loss.size()) + " rows for " +
                         std::to_string(p.size()) + " outcomes");
  }
  const std::size_t actions = loss.front().size();
  if (actions == 0) throw DomainError("optimal_action: empty action set");
  std::size_t best = 0;
  double best_loss = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < actions; ++a) {
    double expected = 0.0;
    for (std::size_t x = 0; x < p.size(); ++x) {
      if (loss[x].size() != actions) throw DimensionError("loss matrix rows differ in length");
      if (!std::isfinite(loss[x][a])) throw DomainError("loss matrix entries must be finite");
      expected += loss[x][a] * p[x];
    }
    if (expected < best_loss) {
      best_loss = expected;
      best = a;
    }
  }
  return best;
}

}  // namespace klpool
