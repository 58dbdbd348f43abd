#include "klpool/ebayes.hpp"

#include <algorithm>
#include <array>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "klpool/errors.hpp"
#include "klpool/noncentral_t.hpp"

namespace klpool::ebayes {
namespace {

constexpr double kClampReportThreshold = 1e-6;
// |z| for p-values that underflow to 0.
constexpr double kMaxAbsZ = 38.0;

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }
double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

void require_density_size(std::size_t n) {
  if (n < kMinGenesForDensity) {
    throw DomainError("density estimation needs at least " + std::to_string(kMinGenesForDensity) +
                      " p-values, got " + std::to_string(n));
  }
}

void check_p_values(std::span<const double> p) {
  for (double x : p) {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("p-value outside [0,1]");
  }
}

}  // namespace

ExpressionMatrix::ExpressionMatrix(std::vector<std::string> gene_ids,
                                   std::vector<std::string> replicate_names,
                                   std::vector<double> values)
    : gene_ids_(std::move(gene_ids)),
      replicate_names_(std::move(replicate_names)),
      values_(std::move(values)) {
  if (replicate_names_.size() < 2) throw DomainError("expression matrix needs at least 2 replicates");
  if (gene_ids_.empty()) throw DomainError("expression matrix has no genes");
  if (values_.size() != gene_ids_.size() * replicate_names_.size()) {
    throw DimensionError("expression matrix has " + std::to_string(values_.size()) +
                         " values for " + std::to_string(gene_ids_.size()) + " genes x " +
                         std::to_string(replicate_names_.size()) + " replicates");
  }
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!std::isfinite(values_[k])) {
      throw DomainError("missing or non-finite value for gene " +
                        gene_ids_[k / replicate_names_.size()]);
    }
  }
}

TestResult t_test(const ExpressionMatrix& x) {
  const std::size_t n = x.replicates();
  TestResult out;
  out.df = n - 1;
  out.t_stat.resize(x.genes());
  out.p_value.resize(x.genes());
  boost::math::students_t dist(static_cast<double>(out.df));
  std::vector<std::string> degenerate;
  for (std::size_t j = 0; j < x.genes(); ++j) {
    auto row = x.row(j);
    const double mean = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : row) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (sd == 0.0) {
      if (mean != 0.0) degenerate.push_back(x.gene_ids()[j]);
      out.t_stat[j] = 0.0;
      out.p_value[j] = 1.0;
      continue;
    }
    const double t = mean / (sd / std::sqrt(static_cast<double>(n)));
    out.t_stat[j] = t;
    out.p_value[j] = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
  }
  if (!degenerate.empty()) {
    std::ostringstream msg;
    msg << "zero variance with nonzero mean for " << degenerate.size() << " gene(s):";
    for (const auto& id : degenerate) msg << ' ' << id;
    throw DomainError(msg.str());
  }
  return out;
}

std::string_view to_string(LfdrMethod method) {
  switch (method) {
    case LfdrMethod::theoretical_null: return "theoretical_null";
    case LfdrMethod::empirical_null: return "empirical_null";
    case LfdrMethod::q_value: return "q_value";
    case LfdrMethod::lower_bound: return "lower_bound";
    case LfdrMethod::combined: return "combined";
  }
  return "unknown";
}

std::vector<double> z_values(std::span<const double> p, std::span<const double> signs) {
  if (!signs.empty() && signs.size() != p.size()) throw DimensionError("z_values: signs length");
  check_p_values(p);
  boost::math::normal standard;
  std::vector<double> z(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) {
    double magnitude = p[j] >= 1.0 ? 0.0
                       : p[j] <= 0.0
                           ? kMaxAbsZ
                           : std::min(kMaxAbsZ, boost::math::quantile(boost::math::complement(standard, 0.5 * p[j])));
    z[j] = !signs.empty() && signs[j] < 0.0 ? -magnitude : magnitude;
  }
  return z;
}

double storey_pi0(std::span<const double> p, double lambda) {
  if (!(lambda >= 0.0 && lambda < 1.0)) throw DomainError("Storey lambda must lie in [0,1)");
  if (p.empty()) throw DomainError("Storey pi0 of no p-values");
  const auto above = std::count_if(p.begin(), p.end(), [&](double x) { return x > lambda; });
  return std::min(1.0, static_cast<double>(above) / (static_cast<double>(p.size()) * (1.0 - lambda)));
}

HistogramDensity::HistogramDensity(std::span<const double> z, std::size_t bins) {
  if (bins == 0) throw DomainError("histogram needs at least one bin");
  if (z.empty()) throw DomainError("histogram of no values");
  auto [mn, mx] = std::minmax_element(z.begin(), z.end());
  lo_ = *mn;
  width_ = *mx > *mn ? (*mx - *mn) / static_cast<double>(bins) : 1.0;
  std::vector<std::size_t> counts(bins, 0);
  for (double v : z) {
    auto k = static_cast<std::size_t>((v - lo_) / width_);
    ++counts[std::min(k, bins - 1)];
  }
  density_.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    density_[k] = static_cast<double>(counts[k]) / (static_cast<double>(z.size()) * width_);
  }
}

double HistogramDensity::operator()(double z) const {
  const double u = (z - lo_) / width_ - 0.5;
  if (u <= 0.0) return density_.front();
  const double last = static_cast<double>(density_.size() - 1);
  if (u >= last) return density_.back();
  const auto k = static_cast<std::size_t>(u);
  const double frac = u - static_cast<double>(k);
  return (1.0 - frac) * density_[k] + frac * density_[k + 1];
}

std::vector<double> lfdr_from_densities(std::span<const double> null_density,
                                        std::span<const double> marginal_density, double pi0,
                                        std::vector<std::string>* diagnostics) {
  if (null_density.size() != marginal_density.size()) throw DimensionError("density lengths differ");
  std::vector<double> out(null_density.size());
  std::size_t clamped = 0;
  double worst = 0.0;
  for (std::size_t j = 0; j < out.size(); ++j) {
    double raw = marginal_density[j] > 0.0 ? pi0 * null_density[j] / marginal_density[j] : 1.0;
    double value = std::clamp(raw, 0.0, 1.0);
    if (std::abs(raw - value) > kClampReportThreshold) {
      ++clamped;
      worst = std::max(worst, std::abs(raw - value));
    }
    out[j] = value;
  }
  if (diagnostics && clamped > 0) {
    std::ostringstream msg;
    msg << clamped << " value(s) clamped to [0,1]; largest excursion " << worst;
    diagnostics->push_back(msg.str());
  }
  return out;
}

// Without signs every z is nonnegative; the values are then mirrored about 0
// so that densities are estimated on the same scale as the signed null.
static std::vector<double> density_sample(const std::vector<double>& z, bool signed_values) {
  if (signed_values) return z;
  std::vector<double> both(z);
  for (double v : z) both.push_back(-v);
  return both;
}

LfdrVector lfdr_theoretical(std::span<const double> p, std::span<const double> signs,
                            const HistogramOptions& options) {
  require_density_size(p.size());
  std::vector<double> z = z_values(p, signs);
  HistogramDensity marginal(density_sample(z, !signs.empty()), options.bins);
  const double pi0 = storey_pi0(p, options.lambda);
  std::vector<double> f0(z.size());
  std::vector<double> f(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) {
    f0[j] = normal_pdf(z[j]);
    f[j] = marginal(z[j]);
  }
  LfdrVector out{LfdrMethod::theoretical_null, {}, {}};
  out.values = lfdr_from_densities(f0, f, pi0, &out.diagnostics);
  return out;
}

NullFit fit_empirical_null(std::span<const double> z, double central_fraction) {
  if (!(central_fraction > 0.0 && central_fraction <= 1.0)) {
    throw DomainError("central fraction must lie in (0,1]");
  }
  require_density_size(z.size());
  std::vector<double> sorted(z.begin(), z.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n_all = sorted.size();
  const double tail = 0.5 * (1.0 - central_fraction);
  const auto k_lo = static_cast<std::size_t>(std::floor(tail * static_cast<double>(n_all)));
  const auto k_hi = std::min(
      n_all - 1,
      static_cast<std::size_t>(std::ceil((1.0 - tail) * static_cast<double>(n_all))) - 1);

  NullFit fit;
  fit.lower = sorted[k_lo];
  fit.upper = sorted[k_hi];
  if (!(fit.upper > fit.lower)) throw DomainError("empirical null window is degenerate");
  std::vector<double> window;
  for (double v : sorted) {
    if (v >= fit.lower && v <= fit.upper) window.push_back(v);
  }
  const double n_w = static_cast<double>(window.size());
  const double a = fit.lower;
  const double b = fit.upper;

  // Mean log-likelihood of the truncated normal in (mu, log sigma).
  auto loglik = [&](double mu, double eta) {
    const double sigma = std::exp(eta);
    const double mass = normal_cdf((b - mu) / sigma) - normal_cdf((a - mu) / sigma);
    if (!(mass > 0.0)) return -std::numeric_limits<double>::infinity();
    double s = 0.0;
    for (double v : window) {
      const double u = (v - mu) / sigma;
      s += -0.5 * u * u;
    }
    return s / n_w - eta - std::log(mass);
  };
  auto gradient = [&](double mu, double eta) {
    const double sigma = std::exp(eta);
    const double alpha = (a - mu) / sigma;
    const double beta = (b - mu) / sigma;
    const double mass = normal_cdf(beta) - normal_cdf(alpha);
    double su = 0.0;
    double su2 = 0.0;
    for (double v : window) {
      const double u = (v - mu) / sigma;
      su += u;
      su2 += u * u;
    }
    su /= n_w;
    su2 /= n_w;
    const double g_mu = su / sigma - (normal_pdf(alpha) - normal_pdf(beta)) / (sigma * mass);
    const double g_eta = su2 - 1.0 + (beta * normal_pdf(beta) - alpha * normal_pdf(alpha)) / mass;
    return std::array<double, 2>{g_mu, g_eta};
  };

  double mu = sorted[n_all / 2];
  boost::math::normal standard;
  const double half_width = boost::math::quantile(standard, 1.0 - tail);
  double eta = std::log((b - a) / (2.0 * half_width));
  std::array<double, 2> g = gradient(mu, eta);
  const double h = 1e-6;
  std::size_t it = 0;
  for (; it < 200; ++it) {
    const double norm = std::hypot(g[0], g[1]);
    if (norm <= 1e-10) break;
    auto gm = gradient(mu + h, eta);
    auto ge = gradient(mu, eta + h);
    double h11 = (gm[0] - g[0]) / h;
    double h22 = (ge[1] - g[1]) / h;
    double h12 = 0.5 * ((gm[1] - g[1]) / h + (ge[0] - g[0]) / h);
    double det = h11 * h22 - h12 * h12;
    double d_mu = g[0];
    double d_eta = g[1];
    if (h11 < 0.0 && det > 0.0) {
      // Newton direction -H^{-1} g.
      d_mu = -(h22 * g[0] - h12 * g[1]) / det;
      d_eta = -(-h12 * g[0] + h11 * g[1]) / det;
    }
    const double current = loglik(mu, eta);
    // Near the optimum the likelihood changes at the rounding level; a step
    // that ties within rounding is taken if it shrinks the gradient.
    const double rounding = 1e-13 * std::max(1.0, std::abs(current));
    double step = 1.0;
    bool moved = false;
    for (int k = 0; k < 60; ++k, step *= 0.5) {
      const double trial = loglik(mu + step * d_mu, eta + step * d_eta);
      const bool tie = trial >= current - rounding &&
                       [&] {
                         auto gt = gradient(mu + step * d_mu, eta + step * d_eta);
                         return std::hypot(gt[0], gt[1]) < norm;
                       }();
      if (trial > current || tie) {
        mu += step * d_mu;
        eta += step * d_eta;
        moved = true;
        break;
      }
    }
    g = gradient(mu, eta);
    if (!moved) break;
  }
  fit.gradient_norm = std::hypot(g[0], g[1]);
  fit.iterations = it;
  if (!(fit.gradient_norm <= 1e-6) || !std::isfinite(mu) || !std::isfinite(eta)) {
    std::ostringstream msg;
    msg << "truncated-normal null fit did not converge; gradient norm " << fit.gradient_norm;
    double mean = 0.0;
    double var = 0.0;
    for (double v : window) mean += v / n_w;
    for (double v : window) var += (v - mean) * (v - mean) / n_w;
    if (var >= (b - a) * (b - a) / 12.0) {
      msg << " (the central z-values are spread at least as evenly as a uniform law, so the"
             " likelihood keeps rising as the null sd grows)";
    }
    throw ConvergenceError(msg.str(), fit.gradient_norm);
  }
  fit.mean = mu;
  fit.sd = std::exp(eta);
  const double mass = normal_cdf((b - mu) / fit.sd) - normal_cdf((a - mu) / fit.sd);
  fit.pi0 = std::clamp(n_w / static_cast<double>(n_all) / mass, 0.0, 1.0);
  return fit;
}

LfdrVector lfdr_empirical(std::span<const double> p, std::span<const double> signs,
                          const HistogramOptions& options, NullFit* fit_out) {
  require_density_size(p.size());
  std::vector<double> z = z_values(p, signs);
  const std::vector<double> sample = density_sample(z, !signs.empty());
  NullFit fit = fit_empirical_null(sample);
  HistogramDensity marginal(sample, options.bins);
  std::vector<double> f0(z.size());
  std::vector<double> f(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) {
    f0[j] = normal_pdf((z[j] - fit.mean) / fit.sd) / fit.sd;
    f[j] = marginal(z[j]);
  }
  LfdrVector out{LfdrMethod::empirical_null, {}, {}};
  out.values = lfdr_from_densities(f0, f, fit.pi0, &out.diagnostics);
  if (fit_out) *fit_out = fit;
  return out;
}

LfdrVector q_values(std::span<const double> p) {
  check_p_values(p);
  const std::size_t n = p.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  LfdrVector out{LfdrMethod::q_value, std::vector<double>(n), {}};
  double running = 1.0;
  for (std::size_t k = n; k-- > 0;) {
    const double adjusted = static_cast<double>(n) * p[order[k]] / static_cast<double>(k + 1);
    running = std::min(running, adjusted);
    out.values[order[k]] = std::min(running, 1.0);
  }
  return out;
}

double bayes_factor_lower_bound(double t, std::size_t n) {
  if (n < 2) throw DomainError("Bayes factor bound needs n >= 2");
  const double df = static_cast<double>(n - 1);
  const double root_n = std::sqrt(static_cast<double>(n));
  const double tt = std::abs(t);
  const double quad_tol = 1e-10;
  auto likelihood = [&](double theta) { return noncentral_t_pdf(tt, df, root_n * theta, quad_tol); };

  const double at_null = likelihood(0.0);
  double lo = 0.0;
  double hi = 10.0 * tt / root_n + 5.0;
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - ratio * (hi - lo);
  double x2 = lo + ratio * (hi - lo);
  double f1 = likelihood(x1);
  double f2 = likelihood(x2);
  while (hi - lo > 1e-8) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + ratio * (hi - lo);
      f2 = likelihood(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - ratio * (hi - lo);
      f1 = likelihood(x1);
    }
  }
  const double best = std::max({at_null, f1, f2, likelihood(0.5 * (lo + hi))});
  if (!(best > 0.0)) throw DomainError("likelihood vanished while bounding the Bayes factor");
  return std::min(1.0, at_null / best);
}

LfdrVector lfdr_lower_bound(std::span<const double> t_stat, std::size_t n, double pi0_lower) {
  if (!(pi0_lower > 0.0 && pi0_lower < 1.0)) throw DomainError("pi0_lower must lie in (0,1)");
  const double prior_odds = pi0_lower / (1.0 - pi0_lower);
  LfdrVector out{LfdrMethod::lower_bound, std::vector<double>(t_stat.size(), 0.0), {}};
  for (std::size_t j = 0; j < t_stat.size(); ++j) {
    try {
      const double odds = prior_odds * bayes_factor_lower_bound(t_stat[j], n);
      out.values[j] = std::clamp(odds / (1.0 + odds), 0.0, 1.0);
    } catch (const Error& e) {
      out.values[j] = 0.0;
      out.diagnostics.push_back("gene " + std::to_string(j) + ": bound set to 0: " + e.what());
    }
  }
  return out;
}

LfdrVector lfdr_lower_bound(const ExpressionMatrix& x, double pi0_lower) {
  return lfdr_lower_bound(t_test(x).t_stat, x.replicates(), pi0_lower);
}

double pvalue_plausible_lower_bound(double p, double pi_prior_lower) {
  const double limit = std::exp(-1.0);
  if (!(p > 0.0 && p <= limit * (1.0 + 1e-12))) {
    throw DomainError("p-value bound requires 0 < p <= 1/e");
  }
  if (!(pi_prior_lower > 0.0 && pi_prior_lower < 1.0)) {
    throw DomainError("prior lower bound must lie in (0,1)");
  }
  const double bf = std::min(1.0, std::numbers::e * p * std::log(1.0 / p));
  const double posterior = 1.0 / (1.0 + (1.0 - pi_prior_lower) / (pi_prior_lower * bf));
  return std::min(posterior, pi_prior_lower);
}

double combine_p_pair(double p1, double p2, double bound) {
  if (p1 > p2) std::swap(p1, p2);
  if (!(p1 >= 0.0 && p2 <= 1.0 && bound >= 0.0 && bound <= 1.0)) {
    throw DomainError("combine_p_pair arguments must lie in [0,1]");
  }
  if (p2 < bound) return bound;
  if (p1 < bound) return p2;
  const double pair[] = {p1, p2};
  return combine_binary(pair, Interval{bound, 1.0}).p_plus;
}

SimulatedData simulate_dataset(const SimulationConfig& c) {
  if (c.genes == 0) throw DomainError("simulation needs at least one gene");
  if (c.replicates < 2) throw DomainError("simulation needs at least two replicates");
  if (!(c.pi0 >= 0.0 && c.pi0 <= 1.0)) throw DomainError("pi0 must lie in [0,1]");
  if (!(c.effect_sd >= 0.0) || !(c.noise_sd > 0.0)) throw DomainError("invalid standard deviation");

  std::mt19937_64 rng(c.seed);
  std::bernoulli_distribution is_alternative(1.0 - c.pi0);
  std::normal_distribution<double> effect(0.0, c.effect_sd > 0.0 ? c.effect_sd : 1.0);
  std::normal_distribution<double> noise(0.0, c.noise_sd);

  const int width = static_cast<int>(std::to_string(c.genes).size());
  std::vector<std::string> ids(c.genes);
  std::vector<std::string> reps(c.replicates);
  for (std::size_t r = 0; r < c.replicates; ++r) reps[r] = "rep" + std::to_string(r + 1);
  std::vector<double> values(c.genes * c.replicates);
  std::vector<bool> alternative(c.genes);
  for (std::size_t j = 0; j < c.genes; ++j) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "g%0*zu", width, j + 1);
    ids[j] = buf;
    alternative[j] = is_alternative(rng);
    const double mean = alternative[j] && c.effect_sd > 0.0 ? effect(rng) : 0.0;
    for (std::size_t r = 0; r < c.replicates; ++r) values[j * c.replicates + r] = mean + noise(rng);
  }
  return {ExpressionMatrix(std::move(ids), std::move(reps), std::move(values)), std::move(alternative)};
}

LfdrCombination combine_lfdr(std::span<const LfdrVector> estimates, const LfdrVector& bound,
                             const SolverOptions& options) {
  if (estimates.empty()) throw DomainError("combine_lfdr: no estimates");
  std::vector<BernoulliProduct> members;
  for (const LfdrVector& e : estimates) {
    if (e.values.size() != bound.values.size()) {
      throw DimensionError("combine_lfdr: estimate " + std::string(to_string(e.method)) +
                           " has " + std::to_string(e.values.size()) + " genes, bound has " +
                           std::to_string(bound.values.size()));
    }
    members.emplace_back(e.values);
  }
  PlausibleBox box = PlausibleBox::lower_bounded(bound.values);
  CombinationResult<BernoulliProduct> result = combine_independent(members, box, options);

  LfdrCombination out{result, {}, {}, {}, {}};
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    auto it = std::find(result.surviving.begin(), result.surviving.end(), i);
    if (it == result.surviving.end()) {
      out.excluded.push_back(estimates[i].method);
      continue;
    }
    out.surviving.push_back(estimates[i].method);
    auto ex = std::find(result.extreme.begin(), result.extreme.end(), i);
    out.weights.push_back(ex == result.extreme.end()
                              ? 0.0
                              : result.weights[static_cast<std::size_t>(ex - result.extreme.begin())]);
  }
  auto probs = result.combined.null_probs();
  out.combined.assign(probs.begin(), probs.end());
  return out;
}

}  // namespace klpool::ebayes
