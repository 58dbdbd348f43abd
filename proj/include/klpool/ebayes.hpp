#pragma once

// Large-scale hypothesis testing: per-gene one-sample t-tests, three
// estimators of the local false discovery rate (LFDR), a likelihood-based
// lower bound on each gene's null probability, and the combined estimate.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "klpool/centroid.hpp"
#include "klpool/combiner.hpp"

namespace klpool::ebayes {

/// N genes by n replicates of log expression ratios, row-major.
class ExpressionMatrix {
 public:
  ExpressionMatrix(std::vector<std::string> gene_ids, std::vector<std::string> replicate_names,
                   std::vector<double> values);

  std::size_t genes() const noexcept { return gene_ids_.size(); }
  std::size_t replicates() const noexcept { return replicate_names_.size(); }
  std::span<const double> row(std::size_t j) const {
    return {values_.data() + j * replicates(), replicates()};
  }
  const std::vector<std::string>& gene_ids() const noexcept { return gene_ids_; }
  const std::vector<std::string>& replicate_names() const noexcept { return replicate_names_; }

 private:
  std::vector<std::string> gene_ids_;
  std::vector<std::string> replicate_names_;
  std::vector<double> values_;
};

struct TestResult {
  std::vector<double> t_stat;
  std::vector<double> p_value;  ///< two-sided
  std::size_t df = 0;
};

/// One-sample t-test of zero mean for every gene. A gene with zero variance
/// gets t = 0, p = 1 when its mean is zero; otherwise DomainError lists the
/// offending genes.
TestResult t_test(const ExpressionMatrix& x);

enum class LfdrMethod { theoretical_null, empirical_null, q_value, lower_bound, combined };

std::string_view to_string(LfdrMethod method);

struct LfdrVector {
  LfdrMethod method;
  std::vector<double> values;
  /// Non-fatal notes: clamping beyond 1e-6, genes whose bound failed, ...
  std::vector<std::string> diagnostics;
};

inline constexpr std::size_t kMinGenesForDensity = 50;

struct HistogramOptions {
  std::size_t bins = 20;
  /// Storey's tuning parameter for the null proportion.
  double lambda = 0.5;
};

/// z_j = Phi^{-1}(1 - p_j / 2), carrying the sign of signs[j] when given.
std::vector<double> z_values(std::span<const double> p, std::span<const double> signs = {});

/// #{p > lambda} / (N (1 - lambda)), capped at 1.
double storey_pi0(std::span<const double> p, double lambda);

/// Equal-width histogram over [min z, max z], linearly interpolated between
/// bin centers and flat beyond the outer centers.
class HistogramDensity {
 public:
  HistogramDensity(std::span<const double> z, std::size_t bins);
  double operator()(double z) const;

 private:
  double lo_ = 0.0;
  double width_ = 1.0;
  std::vector<double> density_;
};

/// clamp(pi0 * null_density_j / marginal_density_j, 0, 1) per gene.
std::vector<double> lfdr_from_densities(std::span<const double> null_density,
                                        std::span<const double> marginal_density, double pi0,
                                        std::vector<std::string>* diagnostics = nullptr);

/// Uniform null p-values (standard normal null z). Without signs the z-values
/// are mirrored about zero before the density is estimated.
LfdrVector lfdr_theoretical(std::span<const double> p, std::span<const double> signs = {},
                            const HistogramOptions& options = {});

struct NullFit {
  double mean = 0.0;
  double sd = 1.0;
  double pi0 = 1.0;
  double lower = 0.0;  ///< truncation window
  double upper = 0.0;
  double gradient_norm = 0.0;
  std::size_t iterations = 0;
};

/// Maximum-likelihood normal fit to the z-values inside the window between
/// the `central_fraction` quantiles around the median; pi0 is the window
/// count divided by N times the fitted null mass of the window. Throws
/// ConvergenceError (carrying the gradient norm) when Newton's method stalls.
NullFit fit_empirical_null(std::span<const double> z, double central_fraction = 0.5);

/// Normal null fitted to the central z-values.
LfdrVector lfdr_empirical(std::span<const double> p, std::span<const double> signs = {},
                          const HistogramOptions& options = {}, NullFit* fit = nullptr);

/// Step-up adjusted p-values, min over m >= k of N p_(m) / m, capped at 1.
LfdrVector q_values(std::span<const double> p);

/// L(0) / max_theta L(theta) where L(theta) is the density of |T| at |t| for
/// a noncentral t on n-1 degrees of freedom with noncentrality sqrt(n) theta.
/// theta is searched by golden section on [0, 10|t|/sqrt(n) + 5].
double bayes_factor_lower_bound(double t, std::size_t n);

/// Per gene, with prior odds at least pi0_lower / (1 - pi0_lower), the
/// posterior odds are at least that times the Bayes factor bound; returns
/// odds / (1 + odds). Genes whose bound cannot be computed get 0 and a
/// diagnostic.
LfdrVector lfdr_lower_bound(std::span<const double> t_stat, std::size_t n, double pi0_lower);
LfdrVector lfdr_lower_bound(const ExpressionMatrix& x, double pi0_lower);

/// Lowest plausible posterior probability of a point null given a p-value,
/// from the -e p log p bound on the Bayes factor, capped at the prior bound.
/// Requires 0 < p <= 1/e and 0 < pi_prior_lower < 1.
double pvalue_plausible_lower_bound(double p, double pi_prior_lower);

/// Combined p-value of two tests of the same null with plausible set
/// [bound, 1]: bound if both lie below it, the larger if only it is
/// plausible, and the game combination of both otherwise.
double combine_p_pair(double p1, double p2, double bound);

struct SimulationConfig {
  std::size_t genes = 6103;
  std::size_t replicates = 6;
  double pi0 = 0.85;
  double effect_sd = 1.0;
  double noise_sd = 1.0;
  std::uint64_t seed = 1;
};

struct SimulatedData {
  ExpressionMatrix matrix;
  std::vector<bool> alternative;
};

/// Null genes are N(0, noise_sd^2) replicates; alternative genes (probability
/// 1 - pi0) get a mean drawn from N(0, effect_sd^2). Deterministic per seed.
SimulatedData simulate_dataset(const SimulationConfig& config);

struct LfdrCombination {
  CombinationResult<BernoulliProduct> result;
  std::vector<LfdrMethod> surviving;
  std::vector<LfdrMethod> excluded;
  /// Weight per surviving method, in the order of `surviving`.
  std::vector<double> weights;
  std::vector<double> combined;
};

/// Treats each estimate as a product of per-gene Bernoulli laws and combines
/// them under the plausible box [bound_j, 1]. An estimate below the bound at
/// any gene is excluded as a whole.
LfdrCombination combine_lfdr(std::span<const LfdrVector> estimates, const LfdrVector& bound,
                             const SolverOptions& options = {});

}  // namespace klpool::ebayes
