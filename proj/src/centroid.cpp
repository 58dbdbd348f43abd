#include "klpool/centroid.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include "klpool/errors.hpp"

namespace klpool {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDuplicateTolerance = 1e-12;

using Point = std::vector<double>;

template <class Dist>
struct Kernel;

template <>
struct Kernel<FiniteDistribution> {
  static double divergence(std::span<const double> p, std::span<const double> m) {
    double d = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (p[k] == 0.0) continue;
      if (m[k] == 0.0) return kInf;
      d += p[k] * std::log(p[k] / m[k]);
    }
    return std::max(d, 0.0);
  }
  static FiniteDistribution make(Point v) { return FiniteDistribution(std::move(v)); }
  static double step(std::size_t) { return 1.0; }
};

template <>
struct Kernel<BernoulliProduct> {
  static double divergence(std::span<const double> p, std::span<const double> m) {
    double d = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) d += binary_divergence(p[j], m[j]);
    return d;
  }
  static BernoulliProduct make(Point v) { return BernoulliProduct(std::move(v)); }
  // The objective is a sum of n one-variable capacity terms; alternating
  // maximization of the summed bound scales the exponent by 1/n.
  static double step(std::size_t n) { return 1.0 / static_cast<double>(n); }
};

// Distinct members of a family plus the map back to the caller's indices.
template <class Dist>
struct Reduced {
  std::vector<Point> members;
  std::vector<std::size_t> first_index;  // unique -> first original index
  std::size_t original_size = 0;
  std::size_t dim = 0;
};

template <class Dist>
Reduced<Dist> reduce(std::span<const Dist> family) {
  if (family.empty()) throw DimensionError("centroid of an empty family");
  Reduced<Dist> r;
  r.original_size = family.size();
  r.dim = coordinates(family[0]).size();
  for (std::size_t i = 0; i < family.size(); ++i) {
    auto x = coordinates(family[i]);
    if (x.size() != r.dim) throw DimensionError("family members have different dimensions");
    bool duplicate = false;
    for (std::size_t u = 0; u < r.members.size() && !duplicate; ++u) {
      double diff = 0.0;
      for (std::size_t k = 0; k < r.dim; ++k) diff = std::max(diff, std::abs(x[k] - r.members[u][k]));
      duplicate = diff <= kDuplicateTolerance;
    }
    if (!duplicate) {
      r.members.emplace_back(x.begin(), x.end());
      r.first_index.push_back(i);
    }
  }
  return r;
}

Point mix(const std::vector<Point>& members, std::span<const double> w) {
  Point m(members.front().size(), 0.0);
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (w[i] == 0.0) continue;
    for (std::size_t k = 0; k < m.size(); ++k) m[k] += w[i] * members[i][k];
  }
  for (double& v : m) v = std::clamp(v, 0.0, 1.0);
  return m;
}

template <class Dist>
std::vector<double> divergences(const std::vector<Point>& members, const Point& m) {
  std::vector<double> d(members.size());
  for (std::size_t i = 0; i < members.size(); ++i) d[i] = Kernel<Dist>::divergence(members[i], m);
  return d;
}

struct Evaluation {
  std::vector<double> divergences;
  double lower = 0.0;  // sum_i w_i D_i
  double upper = 0.0;  // max_i D_i
};

template <class Dist>
Evaluation evaluate(const std::vector<Point>& members, std::span<const double> w) {
  Evaluation e;
  e.divergences = divergences<Dist>(members, mix(members, w));
  e.upper = -kInf;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] > 0.0) e.lower += w[i] * e.divergences[i];
    e.upper = std::max(e.upper, e.divergences[i]);
  }
  return e;
}

struct IterationOutcome {
  std::vector<double> weights;
  std::size_t iterations = 0;
  double gap = kInf;
  bool converged = false;
};

// Alternating capacity iteration restricted to members with active[i]; the
// others keep weight zero. The gap is the best upper bound seen so far minus
// the current lower bound, both of which move monotonically.
template <class Dist>
IterationOutcome capacity_iteration(const std::vector<Point>& members, std::vector<double> w,
                                    const std::vector<bool>& active, double tol,
                                    std::size_t max_iter, std::vector<double>* trace) {
  IterationOutcome out;
  const double eta = Kernel<Dist>::step(members.front().size());
  double best_upper = kInf;
  for (std::size_t it = 0; it < max_iter; ++it) {
    Point m = mix(members, w);
    std::vector<double> d = divergences<Dist>(members, m);
    double lower = 0.0;
    double upper = -kInf;
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (!active[i]) continue;
      lower += w[i] * d[i];
      upper = std::max(upper, d[i]);
    }
    best_upper = std::min(best_upper, upper);
    out.gap = std::max(best_upper - lower, 0.0);
    out.iterations = it + 1;
    if (trace) trace->push_back(out.gap);
    if (out.gap <= tol) {
      out.converged = true;
      break;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < members.size(); ++i) {
      w[i] = active[i] ? w[i] * std::exp(eta * (d[i] - upper)) : 0.0;
      total += w[i];
    }
    for (double& x : w) x /= total;
  }
  out.weights = std::move(w);
  return out;
}

// Weight t on member a, 1 - t on member b, with D(a||M_t) = D(b||M_t).
// The difference is strictly decreasing in t, so bisection brackets the root
// to machine precision.
template <class Dist>
std::pair<double, std::size_t> edge_root(const Point& a, const Point& b) {
  Point m(a.size());
  auto difference = [&](double t) {
    for (std::size_t k = 0; k < a.size(); ++k) m[k] = std::clamp(t * a[k] + (1.0 - t) * b[k], 0.0, 1.0);
    return Kernel<Dist>::divergence(a, m) - Kernel<Dist>::divergence(b, m);
  };
  double lo = 0.0;
  double hi = 1.0;
  std::size_t steps = 0;
  while (steps < 200) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    ++steps;
    double g = difference(mid);
    if (g > 0.0) {
      lo = mid;
    } else if (g < 0.0) {
      hi = mid;
    } else {
      lo = hi = mid;
    }
  }
  return {0.5 * (lo + hi), steps};
}

template <class Dist>
CentroidResult<Dist> assemble(const Reduced<Dist>& r, const std::vector<double>& w_unique,
                              std::size_t iterations, std::vector<double> trace) {
  Evaluation e = evaluate<Dist>(r.members, w_unique);
  std::vector<double> w(r.original_size, 0.0);
  for (std::size_t u = 0; u < r.members.size(); ++u) w[r.first_index[u]] = w_unique[u];
  CentroidResult<Dist> result{Kernel<Dist>::make(mix(r.members, w_unique)), WeightVector(std::move(w)),
                              0.0, 0, 0.0, {}};
  result.value = e.lower;
  result.gap = std::max(e.upper - e.lower, 0.0);
  result.iterations = iterations;
  result.gap_trace = std::move(trace);
  return result;
}

}  // namespace

template <class Dist>
CentroidResult<Dist> induced_weighting(std::span<const Dist> family, const SolverOptions& options) {
  if (!(options.tol > 0.0)) throw DomainError("solver tolerance must be positive");
  Reduced<Dist> r = reduce(family);
  const std::size_t nu = r.members.size();

  if (nu == 1) return assemble(r, {1.0}, 0, {});
  if (nu == 2) {
    auto [t, steps] = edge_root<Dist>(r.members[0], r.members[1]);
    return assemble(r, {t, 1.0 - t}, steps, {});
  }

  std::vector<double> trace;
  IterationOutcome coarse =
      capacity_iteration<Dist>(r.members, std::vector<double>(nu, 1.0 / nu), std::vector<bool>(nu, true),
                               options.tol, options.max_iter, options.record_trace ? &trace : nullptr);
  if (!coarse.converged) {
    std::ostringstream msg;
    msg << "capacity iteration did not converge in " << options.max_iter
        << " iterations; last gap " << coarse.gap << " nats";
    throw ConvergenceError(msg.str(), coarse.gap);
  }
  CentroidResult<Dist> result = assemble(r, coarse.weights, coarse.iterations, std::move(trace));

  // Polish on the support.
  const double floor = std::sqrt(options.tol);
  std::vector<std::size_t> support;
  for (std::size_t i = 0; i < nu; ++i) {
    if (coarse.weights[i] > floor) support.push_back(i);
  }
  if (support.size() < 2) return result;

  std::vector<double> polished(nu, 0.0);
  std::size_t extra = 0;
  if (support.size() == 2) {
    auto [t, steps] = edge_root<Dist>(r.members[support[0]], r.members[support[1]]);
    polished[support[0]] = t;
    polished[support[1]] = 1.0 - t;
    extra = steps;
  } else {
    std::vector<bool> active(nu, false);
    double total = 0.0;
    for (std::size_t i : support) {
      active[i] = true;
      polished[i] = coarse.weights[i];
      total += polished[i];
    }
    for (double& x : polished) x /= total;
    IterationOutcome fine = capacity_iteration<Dist>(r.members, std::move(polished), active,
                                                     options.tol * 1e-3, options.max_iter, nullptr);
    polished = std::move(fine.weights);
    extra = fine.iterations;
  }
  CentroidResult<Dist> candidate =
      assemble(r, polished, result.iterations + extra, std::move(result.gap_trace));
  if (candidate.gap <= options.tol) return candidate;
  result.gap_trace = std::move(candidate.gap_trace);
  return result;
}

template <class Dist>
CentroidResult<Dist> grid_oracle_weighting(std::span<const Dist> family, double step) {
  if (!(step > 0.0 && step <= 0.5)) throw DomainError("grid step must lie in (0, 0.5]");
  if (family.empty()) throw DimensionError("centroid of an empty family");
  if (family.size() > kMaxGridOracleMembers) {
    throw DomainError("grid oracle supports at most " + std::to_string(kMaxGridOracleMembers) +
                      " members");
  }
  std::vector<Point> members;
  for (const Dist& p : family) {
    auto x = coordinates(p);
    members.emplace_back(x.begin(), x.end());
    if (members.back().size() != members.front().size()) {
      throw DimensionError("family members have different dimensions");
    }
  }
  const std::size_t nu = members.size();
  std::vector<double> best(nu, 0.0);
  best[0] = 1.0;
  std::size_t evaluations = 0;
  if (nu == 1) return assemble(reduce(family), {1.0}, 0, {});

  auto objective = [&](const std::vector<double>& w) {
    ++evaluations;
    return evaluate<Dist>(members, w).lower;
  };

  // Coarse spacing keeps each sweep to roughly 1e6 points or fewer.
  const double coarse[] = {0.0, 0.0, 1e-6, 1e-3, 1e-2};
  double h = std::max(step, coarse[nu]);
  std::vector<double> lo(nu - 1, 0.0);
  std::vector<double> hi(nu - 1, 1.0);
  double best_value = -kInf;

  while (true) {
    std::vector<double> w(nu);
    std::vector<long> counts(nu - 1);
    for (std::size_t k = 0; k + 1 < nu; ++k) counts[k] = std::lround((hi[k] - lo[k]) / h);
    std::function<void(std::size_t, double)> sweep = [&](std::size_t k, double used) {
      if (k + 1 == nu) {
        double last = 1.0 - used;
        if (last < -1e-12) return;
        w[k] = std::max(last, 0.0);
        double v = objective(w);
        if (v > best_value) {
          best_value = v;
          best = w;
        }
        return;
      }
      for (long c = 0; c <= counts[k]; ++c) {
        double x = std::min(lo[k] + static_cast<double>(c) * h, 1.0);
        if (used + x > 1.0 + 1e-12) break;
        w[k] = x;
        sweep(k + 1, used + x);
      }
    };
    sweep(0, 0.0);
    if (h <= step) break;
    for (std::size_t k = 0; k + 1 < nu; ++k) {
      lo[k] = std::max(best[k] - 2.0 * h, 0.0);
      hi[k] = std::min(best[k] + 2.0 * h, 1.0);
    }
    h = std::max(step, h / 10.0);
  }
  double total = std::accumulate(best.begin(), best.end(), 0.0);
  for (double& x : best) x /= total;

  Reduced<Dist> r;
  r.members = members;
  r.original_size = nu;
  r.dim = members.front().size();
  r.first_index.resize(nu);
  std::iota(r.first_index.begin(), r.first_index.end(), std::size_t{0});
  return assemble(r, best, evaluations, {});
}

template <class Dist>
EquidistanceReport equidistance_check(const CentroidResult<Dist>& result,
                                      std::span<const Dist> family, double tol) {
  if (family.size() != result.weights.size()) {
    throw DimensionError("equidistance_check: weights do not match the family");
  }
  EquidistanceReport report;
  for (std::size_t i = 0; i < family.size(); ++i) {
    double d = kl_divergence(family[i], result.centroid).nats;
    report.divergences.push_back(d);
    double excess = result.weights[i] > tol ? std::abs(d - result.value) : d - result.value;
    if (excess > tol) {
      report.ok = false;
      report.violations.push_back(i);
    }
    report.worst_excess = std::max(report.worst_excess, excess);
  }
  return report;
}

std::string EquidistanceReport::describe() const {
  std::ostringstream out;
  out << (ok ? "equidistant" : "not equidistant") << "; worst excess " << worst_excess << " nats";
  if (!violations.empty()) {
    out << "; violating members:";
    for (std::size_t i : violations) out << ' ' << i;
  }
  return out.str();
}

template CentroidResult<FiniteDistribution> induced_weighting(std::span<const FiniteDistribution>,
                                                              const SolverOptions&);
template CentroidResult<BernoulliProduct> induced_weighting(std::span<const BernoulliProduct>,
                                                            const SolverOptions&);
template CentroidResult<FiniteDistribution> grid_oracle_weighting(std::span<const FiniteDistribution>,
                                                                  double);
template CentroidResult<BernoulliProduct> grid_oracle_weighting(std::span<const BernoulliProduct>,
                                                                double);
template EquidistanceReport equidistance_check(const CentroidResult<FiniteDistribution>&,
                                               std::span<const FiniteDistribution>, double);
template EquidistanceReport equidistance_check(const CentroidResult<BernoulliProduct>&,
                                               std::span<const BernoulliProduct>, double);

}  // namespace klpool
