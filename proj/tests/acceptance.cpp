// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "json.hpp"
#include "klpool/centroid.hpp"
#include "klpool/cli.hpp"
#include "klpool/combiner.hpp"
#include "klpool/ebayes.hpp"
#include "klpool/noncentral_t.hpp"
#include "test_support.hpp"

namespace {

using namespace klpool;
using nlohmann::json;

struct Outcome {
  bool pass = true;
  std::string detail;
};

void fail(Outcome& o, const std::string& msg) {
  if (o.pass) o.detail = msg;
  o.pass = false;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// Shared by criteria 1 and 2.
std::vector<std::vector<BernoulliProduct>> shulman_families() {
  std::mt19937_64 rng(20240501);
  std::vector<std::vector<BernoulliProduct>> out;
  for (int k = 0; k < 1000; ++k) out.push_back(testing::random_extreme_family(rng, 2 + k % 3, 3));
  return out;
}

Outcome shulman_bound() {
  Outcome o;
  double worst = 0.0;
  for (const auto& fam : shulman_families()) {
    auto r = induced_weighting<BernoulliProduct>(fam);
    for (std::size_t i = 0; i < fam.size(); ++i) worst = std::max(worst, r.weights[i]);
  }
  if (worst > 0.632121 + 1e-6) fail(o, fmt("max weight %.9f", worst));
  o.detail = fmt("1000 families, max weight %.9f", worst) + (o.pass ? "" : " " + o.detail);
  return o;
}

Outcome equidistance() {
  Outcome o;
  std::size_t bad = 0;
  double worst = 0.0;
  for (const auto& fam : shulman_families()) {
    auto r = induced_weighting<BernoulliProduct>(fam);
    auto rep = equidistance_check<BernoulliProduct>(r, fam, 1e-8);
    worst = std::max(worst, rep.worst_excess);
    if (!rep.ok) ++bad;
  }
  if (bad > 0) fail(o, "");
  o.detail = fmt("%.0f of 1000 families violate; worst spread %.3g nats", double(bad), worst);
  return o;
}

Outcome grid_oracle() {
  Outcome o;
  std::mt19937_64 rng(77);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    std::size_t nu = 2 + k % 3;
    std::vector<FiniteDistribution> fam;
    for (std::size_t i = 0; i < nu; ++i) fam.emplace_back(testing::random_simplex(rng, 4));
    auto fast = induced_weighting<FiniteDistribution>(fam);
    // Lattice of spacing 1e-4, zoomed down to 1e-6 around the incumbent.
    auto grid = grid_oracle_weighting<FiniteDistribution>(fam, 1e-6);
    worst = std::max(worst, std::abs(fast.value - grid.value));
  }
  if (worst > 1e-4) fail(o, "");
  o.detail = fmt("50 families, max |value difference| %.3g nats", worst);
  return o;
}

// Minimizes max_i D(Bern(p_i) || Bern(q)) over q on a zooming grid.
double nested_minimax(const std::vector<double>& ps) {
  double lo = 0.0, hi = 1.0, best = 0.5;
  for (double step = 1e-2; step >= 1e-9; step /= 10) {
    double best_val = std::numeric_limits<double>::infinity();
    const long count = std::lround((hi - lo) / step);
    for (long k = 0; k <= count; ++k) {
      const double q = std::min(hi, lo + k * step);
      double worst = 0.0;
      for (double p : ps) worst = std::max(worst, binary_divergence(p, q));
      if (worst < best_val) {
        best_val = worst;
        best = q;
      }
    }
    lo = std::max(0.0, best - 2 * step);
    hi = std::min(1.0, best + 2 * step);
  }
  return best;
}

Outcome minimax_point() {
  Outcome o;
  std::mt19937_64 rng(1357);
  std::uniform_real_distribution<double> u(0.001, 0.999);
  double worst = 0.0;
  int evaluated = 0;
  for (int k = 0; k < 25; ++k) {
    std::vector<double> ps{u(rng), u(rng), u(rng), u(rng)};
    double lower = 0.5 * *std::min_element(ps.begin(), ps.end()) +
                   0.5 * *std::max_element(ps.begin(), ps.end()) * u(rng) * 0.5;
    std::vector<FiniteDistribution> fam;
    std::vector<double> plausible;
    for (double p : ps) {
      fam.push_back(FiniteDistribution::bernoulli(p));
      if (p >= lower) plausible.push_back(p);
    }
    if (plausible.empty()) continue;
    ++evaluated;
    auto r = combine<FiniteDistribution>(fam, PlausibleBox({lower, 0.0}, {1.0, 1.0}));
    double q = nested_minimax(plausible);
    worst = std::max({worst, std::abs(r.combined[0] - q), std::abs(r.combined[1] - (1 - q))});
  }
  if (worst > 1e-4 || evaluated != 25) fail(o, "");
  o.detail = fmt("%.0f instances, max coordinate difference %.3g", evaluated, worst);
  return o;
}

json run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  args.insert(args.begin(), "klpool");
  int code = cli::run(args, out, err);
  if (code != 0) throw std::runtime_error("cli exit " + std::to_string(code) + ": " + err.str());
  return json::parse(out.str());
}

Outcome weight_surface() {
  Outcome o;
  json rows = run_cli({"figure-weight-surface", "--grid-step", "0.01", "--format", "json"});
  double sym = 0.0, lo = 1.0, hi = 0.0;
  for (const auto& row : rows) {
    double a = row["p_min"], b = row["p_max"], w = row["w_plus"];
    lo = std::min(lo, w);
    hi = std::max(hi, w);
    if (std::abs(a + b - 1.0) < 1e-9) sym = std::max(sym, std::abs(w - 0.5));
  }
  if (sym > 1e-9 || lo < 0.3679 || hi > 0.6321) fail(o, "");
  o.detail = fmt("%.0f cells, w+ in [%.6f, %.6f]", double(rows.size()), lo, hi) +
             fmt(", max |w+ - 0.5| on p+q=1: %.3g", sym);
  return o;
}

Outcome means_figure() {
  Outcome o;
  json rows = run_cli({"figure-means", "--format", "json"});
  double worst = -1.0;
  bool ordered = true;
  for (const auto& row : rows) {
    double p1 = row["p1"], p2 = row["p2"];
    double a = row["arithmetic"], g = row["geometric"], h = row["harmonic"], game = row["game"];
    double band = (0.6321 - 0.5) * std::abs(p2 - p1);
    worst = std::max(worst, std::abs(game - a) - band);
    if (!(a >= g * (1 - 1e-15) && g >= h * (1 - 1e-15))) ordered = false;
  }
  if (worst > 0.0 || !ordered) fail(o, "");
  o.detail = fmt("%.0f abscissae, max excess over band %.3g, means ordered: ", double(rows.size()), worst) +
             (ordered ? "yes" : "no");
  return o;
}

Outcome lfdr_pipeline() {
  using namespace klpool::ebayes;
  Outcome o;
  auto start = std::chrono::steady_clock::now();
  SimulationConfig cfg;  // 6103 genes, 6 replicates, pi0 0.85
  auto data = simulate_dataset(cfg);
  auto tests = t_test(data.matrix);
  std::vector<double> signs = tests.t_stat;
  std::vector<LfdrVector> est{lfdr_theoretical(tests.p_value, signs),
                              lfdr_empirical(tests.p_value, signs), q_values(tests.p_value)};
  auto bound = lfdr_lower_bound(data.matrix, 0.8);
  std::vector<LfdrMethod> violators;
  for (const auto& e : est) {
    for (std::size_t j = 0; j < e.values.size(); ++j) {
      if (e.values[j] < bound.values[j] - 1e-12) {
        violators.push_back(e.method);
        break;
      }
    }
  }
  std::string names;
  for (auto m : violators) names += std::string(names.empty() ? "" : ",") + std::string(to_string(m));
  if (violators.size() == est.size()) {
    fail(o, "every method violates the bound (excluded: " + names + ")");
    return o;
  }
  auto combo = combine_lfdr(est, bound);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (combo.excluded != violators) fail(o, "(a) excluded set differs");
  double total = 0.0;
  for (std::size_t s = 0; s < combo.weights.size(); ++s) {
    const double w = combo.weights[s];
    total += w;
    if (combo.weights.size() > 1 && (w < 0.3679 || w > 0.6321)) {
      fail(o, "(b) " + std::string(to_string(combo.surviving[s])) + fmt(" weight %.4g outside [0.3679, 0.6321]", w));
    }
  }
  if (std::abs(total - 1.0) > 1e-9) fail(o, "(b) weights do not sum to 1");
  for (std::size_t j = 0; j < combo.combined.size(); ++j) {
    double lo = 1.0, hi = 0.0;
    for (const auto& e : est) {
      if (std::find(combo.surviving.begin(), combo.surviving.end(), e.method) == combo.surviving.end()) continue;
      lo = std::min(lo, e.values[j]);
      hi = std::max(hi, e.values[j]);
    }
    if (combo.combined[j] < lo - 1e-12 || combo.combined[j] > hi + 1e-12) {
      fail(o, "(c) combined outside survivor range");
      break;
    }
  }
  if (secs > 120.0) fail(o, "(d) too slow");
  std::string weights;
  for (std::size_t s = 0; s < combo.surviving.size(); ++s) {
    weights += std::string(weights.empty() ? "" : ", ") + std::string(to_string(combo.surviving[s])) + "=" +
               fmt("%.4f", combo.weights[s]);
  }
  std::string msg = "excluded {" + names + "}, weights {" + weights + "}, " + fmt("%.1f s", secs);
  o.detail = o.pass ? msg : o.detail + "; " + msg;
  return o;
}

// sum_i w_i D(joint_i || expanded product of per-variable mixtures),
// maximized over w on a simplex grid that zooms from 1e-2 down to 1e-7.
double joint_space_oracle(const std::vector<BernoulliProduct>& members,
                          const std::vector<FiniteDistribution>& joint) {
  const std::size_t nu = members.size();
  const std::size_t n = members.front().size();
  auto objective = [&](const std::vector<double>& w) {
    std::vector<double> m(n, 0.0);
    for (std::size_t i = 0; i < nu; ++i)
      for (std::size_t j = 0; j < n; ++j) m[j] += w[i] * members[i][j];
    for (double& x : m) x = std::clamp(x, 0.0, 1.0);
    FiniteDistribution centroid = BernoulliProduct(m).expand();
    double f = 0.0;
    for (std::size_t i = 0; i < nu; ++i) f += w[i] * kl_divergence(joint[i], centroid).nats;
    return f;
  };
  std::vector<double> center(nu, 1.0 / nu);
  double radius = 1.0, best_val = -1.0;
  for (double step = 1e-2; step >= 1e-7; step /= 10) {
    std::vector<double> best = center;
    const long span = std::lround(radius / step);
    // Free coordinates are the first nu - 1 weights; the last one closes the simplex.
    std::vector<long> k(nu - 1, -span);
    while (true) {
      std::vector<double> w(nu);
      double rest = 1.0;
      bool ok = true;
      for (std::size_t i = 0; i + 1 < nu; ++i) {
        w[i] = center[i] + k[i] * step;
        if (w[i] < -1e-15 || w[i] > 1 + 1e-15) ok = false;
        w[i] = std::clamp(w[i], 0.0, 1.0);
        rest -= w[i];
      }
      if (ok && rest >= -1e-12) {
        w[nu - 1] = std::max(rest, 0.0);
        double f = objective(w);
        if (f > best_val) {
          best_val = f;
          best = w;
        }
      }
      std::size_t pos = 0;
      while (pos < k.size() && ++k[pos] > span) k[pos++] = -span;
      if (pos == k.size()) break;
    }
    center = best;
    radius = 2 * step;
  }
  return best_val;
}

Outcome discrete_consistency() {
  Outcome o;
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_binary = 0.0;
  for (int k = 0; k < 100; ++k) {
    std::vector<double> ps{u(rng), u(rng), u(rng)};
    std::vector<BernoulliProduct> members;
    for (double p : ps) members.push_back(BernoulliProduct({p}));
    auto b = combine_binary(ps);
    auto r = combine_independent(members, PlausibleBox::unit(1));
    worst_binary = std::max(worst_binary, std::abs(r.combined[0] - b.p_plus));
  }
  double worst_joint = 0.0;
  for (int k = 0; k < 30; ++k) {
    std::size_t n = 1 + k % 6;
    std::size_t nu = 2 + k % 3;
    std::vector<BernoulliProduct> members;
    std::vector<FiniteDistribution> joint;
    for (std::size_t i = 0; i < nu; ++i) {
      members.push_back(testing::random_product(rng, n));
      joint.push_back(members.back().expand());
    }
    auto a = induced_weighting<BernoulliProduct>(members);
    worst_joint = std::max(worst_joint, std::abs(a.value - joint_space_oracle(members, joint)));
  }
  if (worst_binary > 1e-10 || worst_joint > 1e-8) fail(o, "");
  o.detail = fmt("N=1 max |dp| %.3g over 100; N<=6 max |dvalue| vs joint-space oracle %.3g nats over 30", worst_binary, worst_joint);
  return o;
}

// Maximizer over w of w D(a||M) + (1-w) D(b||M), M = w a + (1-w) b.
double weight_oracle(double a, double b) {
  auto f = [&](double w) {
    double m = w * a + (1 - w) * b;
    return w * binary_divergence(a, m) + (1 - w) * binary_divergence(b, m);
  };
  double lo = 0.0, hi = 1.0, best = 0.5;
  for (double step = 1e-3; step >= 1e-10; step /= 10) {
    double best_val = -1.0;
    const long count = std::lround((hi - lo) / step);
    for (long k = 0; k <= count; ++k) {
      const double w = std::min(hi, lo + k * step);
      if (f(w) > best_val) {
        best_val = f(w);
        best = w;
      }
    }
    lo = std::max(0.0, best - 2 * step);
    hi = std::min(1.0, best + 2 * step);
  }
  return best;
}

Outcome three_case_rule() {
  using ebayes::combine_p_pair;
  Outcome o;
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double h = 1e-12;
  double jump_p2 = 0.0, jump_p1 = 0.0, worst_case3 = 0.0;
  for (int k = 0; k < 50; ++k) {
    double bound = 0.005 + 0.2 * u(rng);
    // p2 crossing the bound with p1 below it.
    double p1 = bound * u(rng);
    jump_p2 = std::max(jump_p2, std::abs(combine_p_pair(p1, bound - h, bound) - combine_p_pair(p1, bound, bound)));
    // p1 crossing the bound with p2 above it.
    double p2 = bound + (1 - bound) * u(rng);
    jump_p1 = std::max(jump_p1, std::abs(combine_p_pair(bound - h, p2, bound) - combine_p_pair(bound, p2, bound)));
    // Case 3 against the weight oracle.
    double a = bound + (1 - bound) * u(rng), b = bound + (1 - bound) * u(rng);
    if (a > b) std::swap(a, b);
    double w = weight_oracle(a, b);
    worst_case3 = std::max(worst_case3, std::abs(combine_p_pair(a, b, bound) - (w * a + (1 - w) * b)));
  }
  if (jump_p2 > 1e-9) fail(o, "");
  if (jump_p1 > 1e-9) fail(o, "");
  if (worst_case3 > 1e-6) fail(o, "");
  o.detail = fmt("jump at p2=bound %.3g, jump at p1=bound %.3g, case-3 max error %.3g", jump_p2, jump_p1,
                 worst_case3);
  return o;
}

Outcome noncentral_t() {
  Outcome o;
  double central = 0.0;
  for (double df : {1.0, 2.0, 5.0, 10.0, 30.0}) {
    boost::math::students_t_distribution<double> st(df);
    for (int k = 0; k <= 10; ++k) {
      double t = 0.5 * k;
      central = std::max(central, std::abs(noncentral_t_pdf(t, df, 0.0) - 2.0 * boost::math::pdf(st, t)));
    }
  }
  boost::math::quadrature::tanh_sinh<double> integrator;
  double mass_err = 0.0;
  for (double df : {2.0, 5.0, 10.0}) {
    for (double ncp : {0.0, 1.0, 3.0, 6.0}) {
      double mass = integrator.integrate([&](double t) { return noncentral_t_pdf(t, df, ncp); }, 0.0,
                                         std::numeric_limits<double>::infinity());
      mass_err = std::max(mass_err, std::abs(mass - 1.0));
    }
  }
  if (central > 1e-8 || mass_err > 1e-6) fail(o, "");
  o.detail = fmt("central max error %.3g, normalization max error %.3g", central, mass_err);
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria{
      {"weight bound 1 - 1/e", shulman_bound},
      {"equidistance of the centroid", equidistance},
      {"capacity iteration vs simplex grid", grid_oracle},
      {"combination equals minimax point", minimax_point},
      {"weight surface structure", weight_surface},
      {"classical means vs game combination", means_figure},
      {"LFDR pipeline on simulated data", lfdr_pipeline},
      {"independent-variable consistency", discrete_consistency},
      {"p-value pair rule", three_case_rule},
      {"noncentral t density", noncentral_t},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failures;
    std::printf("%s %2zu %-38s [%6.2f s] %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].name, secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
