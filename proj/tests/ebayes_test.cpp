#include "klpool/ebayes.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "klpool/errors.hpp"

namespace klpool::ebayes {
namespace {

ExpressionMatrix rows(std::vector<std::vector<double>> data) {
  std::vector<std::string> ids, reps;
  std::vector<double> values;
  for (std::size_t j = 0; j < data.size(); ++j) {
    ids.push_back("g" + std::to_string(j));
    values.insert(values.end(), data[j].begin(), data[j].end());
  }
  for (std::size_t r = 0; r < data.front().size(); ++r) reps.push_back("r" + std::to_string(r));
  return ExpressionMatrix(ids, reps, values);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

// Two-sided p-values and signs for z-values.
void to_p(const std::vector<double>& z, std::vector<double>& p, std::vector<double>& signs) {
  p.clear();
  signs.clear();
  for (double x : z) {
    p.push_back(std::erfc(std::abs(x) / std::numbers::sqrt2));
    signs.push_back(x < 0 ? -1.0 : 1.0);
  }
}

std::vector<double> normal_draws(std::size_t n, double mean, double sd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(mean, sd);
  std::vector<double> z(n);
  for (auto& x : z) x = g(rng);
  return z;
}

TEST(TTest, Examples) {
  auto r = t_test(rows({{1, -1, 0}, {1, 2, 3}}));
  EXPECT_EQ(r.df, 2u);
  EXPECT_NEAR(r.t_stat[0], 0.0, 1e-15);
  EXPECT_NEAR(r.p_value[0], 1.0, 1e-15);
  EXPECT_NEAR(r.t_stat[1], 3.464101615137754, 1e-12);
  EXPECT_NEAR(r.p_value[1], 0.07417990022744855, 1e-12);
}

TEST(TTest, PairWithZeroMean) {
  auto r = t_test(rows({{1, -1}}));
  EXPECT_EQ(r.t_stat[0], 0.0);
  EXPECT_EQ(r.p_value[0], 1.0);
}

TEST(TTest, SignFlipLeavesPValue) {
  auto a = t_test(rows({{0.3, 1.2, -0.4, 2.0}}));
  auto b = t_test(rows({{-0.3, -1.2, 0.4, -2.0}}));
  EXPECT_NEAR(a.p_value[0], b.p_value[0], 1e-15);
  EXPECT_NEAR(a.t_stat[0], -b.t_stat[0], 1e-15);
}

TEST(TTest, DegenerateGenes) {
  EXPECT_NO_THROW(t_test(rows({{0, 0, 0}})));
  try {
    t_test(rows({{1, 2, 3}, {2, 2, 2}}));
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("g1"), std::string::npos);
  }
}

TEST(ExpressionMatrix, Validation) {
  EXPECT_THROW(ExpressionMatrix({"a"}, {"r"}, {1.0}), DomainError);
  EXPECT_THROW(ExpressionMatrix({"a"}, {"r1", "r2"}, {1.0}), DimensionError);
  EXPECT_THROW(ExpressionMatrix({"a"}, {"r1", "r2"}, {1.0, NAN}), DomainError);
}

TEST(LfdrTheoretical, PureNullIsHigh) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(5000);
  for (auto& x : p) x = u(rng);
  auto r = lfdr_theoretical(p);
  EXPECT_GE(median(r.values), 0.8);
  for (double v : r.values) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(LfdrTheoretical, TailGenesAreSmallWithAlternatives) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 1.0);
  std::bernoulli_distribution alt(0.2);
  std::vector<double> z(5000);
  for (auto& x : z) x = g(rng) + (alt(rng) ? 2.0 : 0.0) * 2.0;
  std::vector<double> p, signs;
  to_p(z, p, signs);
  auto r = lfdr_theoretical(p, signs);
  std::size_t top = std::max_element(z.begin(), z.end()) - z.begin();
  EXPECT_LT(r.values[top], 0.05);
}

TEST(LfdrTheoretical, TooFewGenes) {
  std::vector<double> p(10, 0.5);
  EXPECT_THROW(lfdr_theoretical(p), DomainError);
}

TEST(LfdrFromDensities, NullSelfConsistency) {
  std::vector<double> f{0.1, 0.2, 0.3};
  auto r = lfdr_from_densities(f, f, 1.0);
  for (double v : r) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(EmpiricalNull, StandardNormal) {
  auto z = normal_draws(200000, 0.0, 1.0, 13);
  NullFit fit = fit_empirical_null(z);
  EXPECT_NEAR(fit.mean, 0.0, 0.05);
  EXPECT_NEAR(fit.sd, 1.0, 0.05);
  std::vector<double> p, signs;
  to_p(z, p, signs);
  auto emp = lfdr_empirical(p, signs);
  auto theo = lfdr_theoretical(p, signs);
  std::vector<double> diff(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) diff[j] = std::abs(emp.values[j] - theo.values[j]);
  EXPECT_LE(median(diff), 0.1);
}

TEST(EmpiricalNull, WideNull) {
  auto z = normal_draws(200000, 0.0, 1.5, 17);
  NullFit fit = fit_empirical_null(z);
  EXPECT_NEAR(fit.sd, 1.5, 0.1);
  std::vector<double> p, signs;
  to_p(z, p, signs);
  auto emp = lfdr_empirical(p, signs);
  auto theo = lfdr_theoretical(p, signs);
  std::size_t tail = 0, higher = 0;
  for (std::size_t j = 0; j < z.size(); ++j) {
    if (std::abs(z[j]) < 3.0) continue;
    ++tail;
    if (emp.values[j] > theo.values[j]) ++higher;
  }
  ASSERT_GT(tail, 0u);
  EXPECT_EQ(higher, tail);
}

TEST(EmpiricalNull, TranslationEquivariance) {
  auto z = normal_draws(5000, 0.0, 1.0, 19);
  auto shifted = z;
  for (auto& x : shifted) x += 0.7;
  NullFit a = fit_empirical_null(z);
  NullFit b = fit_empirical_null(shifted);
  EXPECT_NEAR(b.mean - a.mean, 0.7, 1e-6);
  EXPECT_NEAR(b.sd, a.sd, 1e-6);
}

TEST(QValues, Examples) {
  std::vector<double> p{0.01, 0.02, 0.03};
  for (double q : q_values(p).values) EXPECT_NEAR(q, 0.03, 1e-15);
  std::vector<double> single{0.2};
  EXPECT_EQ(q_values(single).values[0], 0.2);
  std::vector<double> ones(4, 1.0);
  for (double q : q_values(ones).values) EXPECT_EQ(q, 1.0);
}

TEST(QValues, PreservesOrder) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(300);
  for (auto& x : p) x = u(rng) * u(rng);
  auto q = q_values(p).values;
  for (std::size_t a = 0; a < p.size(); ++a)
    for (std::size_t b = 0; b < p.size(); ++b)
      if (p[a] < p[b]) EXPECT_LE(q[a], q[b]);
}

TEST(LfdrLowerBound, ZeroStatistic) {
  EXPECT_NEAR(bayes_factor_lower_bound(0.0, 6), 1.0, 1e-9);
  std::vector<double> t{0.0};
  EXPECT_NEAR(lfdr_lower_bound(t, 6, 0.8).values[0], 0.8, 1e-9);
}

TEST(LfdrLowerBound, LargeStatisticVanishes) {
  std::vector<double> t{40.0};
  EXPECT_LT(lfdr_lower_bound(t, 6, 0.8).values[0], 1e-4);
}

TEST(LfdrLowerBound, MonotoneInPrior) {
  std::vector<double> t{-3.0, -0.5, 0.2, 1.5, 4.0};
  auto lo = lfdr_lower_bound(t, 6, 0.6).values;
  auto hi = lfdr_lower_bound(t, 6, 0.8).values;
  for (std::size_t j = 0; j < t.size(); ++j) EXPECT_LE(lo[j], hi[j]);
}

TEST(LfdrLowerBound, Validation) {
  std::vector<double> t{1.0};
  EXPECT_THROW(lfdr_lower_bound(t, 6, 1.0), DomainError);
  EXPECT_THROW(lfdr_lower_bound(t, 6, 0.0), DomainError);
}

TEST(PValueBound, Examples) {
  EXPECT_NEAR(pvalue_plausible_lower_bound(std::exp(-1.0), 0.3), 0.3, 1e-12);
  EXPECT_NEAR(pvalue_plausible_lower_bound(0.01, 0.5), 0.111254498810194774, 1e-12);
  EXPECT_LE(pvalue_plausible_lower_bound(0.2, 0.999), 0.999);
  EXPECT_THROW(pvalue_plausible_lower_bound(0.5, 0.5), DomainError);
  EXPECT_THROW(pvalue_plausible_lower_bound(0.0, 0.5), DomainError);
  EXPECT_THROW(pvalue_plausible_lower_bound(0.01, 1.0), DomainError);
}

TEST(CombinePPair, ThreeCases) {
  EXPECT_EQ(combine_p_pair(0.001, 0.005, 0.01), 0.01);
  EXPECT_EQ(combine_p_pair(0.005, 0.05, 0.01), 0.05);
  // mpmath root of the equidistance condition.
  EXPECT_NEAR(combine_p_pair(0.04, 0.1, 0.01), 0.0679268170928890225, 1e-10);
  EXPECT_EQ(combine_p_pair(0.1, 0.04, 0.01), combine_p_pair(0.04, 0.1, 0.01));
}

TEST(Simulation, DeterministicAndPureNull) {
  SimulationConfig cfg;
  cfg.genes = 200;
  cfg.seed = 5;
  auto a = simulate_dataset(cfg);
  auto b = simulate_dataset(cfg);
  for (std::size_t j = 0; j < cfg.genes; ++j) {
    auto ra = a.matrix.row(j), rb = b.matrix.row(j);
    EXPECT_TRUE(std::equal(ra.begin(), ra.end(), rb.begin()));
  }
  EXPECT_EQ(a.alternative, b.alternative);
  cfg.pi0 = 1.0;
  auto null = simulate_dataset(cfg);
  EXPECT_EQ(std::count(null.alternative.begin(), null.alternative.end(), true), 0);
  EXPECT_EQ(null.matrix.genes(), 200u);
  EXPECT_EQ(null.matrix.replicates(), 6u);
}

LfdrVector vec(LfdrMethod m, std::vector<double> v) { return LfdrVector{m, std::move(v), {}}; }

TEST(CombineLfdr, ViolatorIsExcluded) {
  auto bound = vec(LfdrMethod::lower_bound, {0.2, 0.3, 0.1});
  std::vector<LfdrVector> est{vec(LfdrMethod::theoretical_null, {0.5, 0.29, 0.4}),
                              vec(LfdrMethod::q_value, {0.3, 0.6, 0.9})};
  auto r = combine_lfdr(est, bound);
  EXPECT_EQ(r.excluded, (std::vector<LfdrMethod>{LfdrMethod::theoretical_null}));
  EXPECT_EQ(r.surviving, (std::vector<LfdrMethod>{LfdrMethod::q_value}));
  EXPECT_EQ(r.combined, est[1].values);
}

TEST(CombineLfdr, TwoSurvivorsUseOneWeightPair) {
  auto bound = vec(LfdrMethod::lower_bound, {0.0, 0.0, 0.0});
  std::vector<LfdrVector> est{vec(LfdrMethod::theoretical_null, {0.1, 0.8, 0.4}),
                              vec(LfdrMethod::empirical_null, {0.6, 0.2, 0.5})};
  auto r = combine_lfdr(est, bound);
  ASSERT_EQ(r.weights.size(), 2u);
  EXPECT_NEAR(r.weights[0] + r.weights[1], 1.0, 1e-12);
  for (double w : r.weights) {
    EXPECT_GE(w, 1 - 0.6321206);
    EXPECT_LE(w, 0.6321206);
  }
  for (std::size_t j = 0; j < 3; ++j) {
    double expected = r.weights[0] * est[0].values[j] + r.weights[1] * est[1].values[j];
    EXPECT_NEAR(r.combined[j], expected, 1e-12);
  }
}

TEST(CombineLfdr, AllExcluded) {
  auto bound = vec(LfdrMethod::lower_bound, {0.5});
  std::vector<LfdrVector> est{vec(LfdrMethod::q_value, {0.4})};
  EXPECT_THROW(combine_lfdr(est, bound), EmptyIntersectionError);
}

TEST(CombineLfdr, BetweenMinAndMaxAndMonotone) {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> a(6), b(6), c(6);
    for (auto* v : {&a, &b, &c})
      for (auto& x : *v) x = u(rng);
    auto bound = vec(LfdrMethod::lower_bound, std::vector<double>(6, 0.0));
    std::vector<LfdrVector> est{vec(LfdrMethod::theoretical_null, a),
                                vec(LfdrMethod::empirical_null, b), vec(LfdrMethod::q_value, c)};
    auto r = combine_lfdr(est, bound);
    for (std::size_t j = 0; j < 6; ++j) {
      double lo = std::min({a[j], b[j], c[j]}), hi = std::max({a[j], b[j], c[j]});
      EXPECT_GE(r.combined[j], lo - 1e-12);
      EXPECT_LE(r.combined[j], hi + 1e-12);
    }
  }
}

}  // namespace
}  // namespace klpool::ebayes
