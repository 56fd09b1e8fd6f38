#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "loanvar/errors.hpp"
#include "loanvar/rng.hpp"
#include "loanvar/risk.hpp"
#include "loanvar/simulation.hpp"
#include "oracles.hpp"

using namespace loanvar;

namespace {

std::vector<double> random_returns(std::size_t k, rng::SplitMix64& gen) {
  std::vector<double> v(k);
  for (double& x : v) x = gen.uniform() < 0.1 ? gen.uniform(-1, 0) : gen.uniform(-0.02, 0.03);
  return v;
}

ScenarioMatrix random_instance(std::size_t n, std::size_t k, std::uint64_t seed) {
  rng::SplitMix64 gen(seed);
  std::vector<ReturnDistribution> d;
  for (std::size_t i = 0; i < n; ++i) {
    d.emplace_back(BinaryReturnDistribution{gen.uniform(0.005, 0.025), gen.uniform(-1, -0.05), gen.uniform(0.02, 0.2)});
  }
  return simulate(d, k, seed);
}

double objective_of(const ScenarioMatrix& m, const std::vector<double>& w, const RiskSpec& spec) {
  std::vector<double> r(m.scenarios, 0.0);
  for (std::size_t i = 0; i < m.loans; ++i) {
    for (std::size_t j = 0; j < m.scenarios; ++j) r[j] += w[i] * m(i, j);
  }
  const int pct = static_cast<int>(std::lround(spec.confidence * 100));
  return spec.measure == RiskMeasure::var ? oracle::sorted_var(r, pct) : oracle::sorted_cvar(r, pct);
}

OptimizerConfig quick_optimizer(std::uint64_t seed) {
  OptimizerConfig cfg;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST(ValueAtRisk, ConstantVector) {
  const std::vector<double> c(50, 0.013);
  for (double a : {0.8, 0.9, 0.95, 0.99}) {
    EXPECT_EQ(value_at_risk(c, a), -0.013);
    EXPECT_NEAR(conditional_value_at_risk(c, a), -0.013, 1e-15);
  }
}

TEST(ValueAtRisk, TwentyScenariosAtNinety) {
  std::vector<double> v(20);
  for (std::size_t i = 0; i < 20; ++i) v[i] = 0.01 * static_cast<double>((i * 7) % 20) - 0.05;
  EXPECT_EQ(percentile_index(20, 0.9), 2u);
  std::vector<double> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(value_at_risk(v, 0.9), -sorted[2]);
}

TEST(ValueAtRisk, MatchesSortOracleOnRandomVectors) {
  rng::SplitMix64 gen(1);
  const int levels[] = {80, 85, 90, 95, 99};
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t k = 1 + gen.below(3000);
    const auto v = random_returns(k, gen);
    const int pct = levels[trial % 5];
    const double a = pct / 100.0;
    const double var = value_at_risk(v, a);
    EXPECT_EQ(var, oracle::sorted_var(v, pct)) << "k=" << k << " a=" << a;
    const double cvar = conditional_value_at_risk(v, a);
    EXPECT_NEAR(cvar, oracle::sorted_cvar(v, pct), 1e-12);
    EXPECT_GE(cvar, var - 1e-12);
  }
}

TEST(ValueAtRisk, TranslationAndHomogeneity) {
  rng::SplitMix64 gen(2);
  for (int trial = 0; trial < 200; ++trial) {
    const auto v = random_returns(500, gen);
    const double c = gen.uniform(-0.1, 0.1);
    const double s = gen.uniform(0.1, 5.0);
    std::vector<double> shifted(v), scaled(v);
    for (double& x : shifted) x += c;
    for (double& x : scaled) x *= s;
    for (double a : {0.9, 0.95, 0.99}) {
      EXPECT_NEAR(value_at_risk(shifted, a), value_at_risk(v, a) - c, 1e-12);
      EXPECT_NEAR(value_at_risk(scaled, a), s * value_at_risk(v, a), 1e-12);
      EXPECT_NEAR(conditional_value_at_risk(shifted, a), conditional_value_at_risk(v, a) - c, 1e-12);
      EXPECT_NEAR(conditional_value_at_risk(scaled, a), s * conditional_value_at_risk(v, a), 1e-12);
    }
  }
}

TEST(ConditionalValueAtRisk, HandTailMean) {
  std::vector<double> v(100, 0.0);
  v[17] = -0.4;
  v[63] = -0.2;
  EXPECT_EQ(tail_count(100, 0.95), 5u);
  EXPECT_NEAR(conditional_value_at_risk(v, 0.95), 0.12, 1e-15);
  EXPECT_EQ(tail_count(10, 0.99), 1u);
}

TEST(RiskEstimators, Errors) {
  EXPECT_THROW(value_at_risk(std::vector<double>{}, 0.95), DomainError);
  EXPECT_THROW(value_at_risk(std::vector<double>{0.1}, 1.0), SpecError);
  EXPECT_THROW(conditional_value_at_risk(std::vector<double>{0.1}, 0.0), SpecError);
}

TEST(SmoothedRisk, InterpolatesBetweenOrderStatistics) {
  std::vector<double> v(11);
  for (std::size_t i = 0; i < 11; ++i) v[i] = static_cast<double>(10 - i);
  // position (1 - 0.85) * 10 = 1.5 between sorted values 1 and 2
  EXPECT_NEAR(smoothed_risk_value(v, {RiskMeasure::var, 0.85}), -1.5, 1e-12);
  EXPECT_EQ(smoothed_risk_value(v, {RiskMeasure::cvar, 0.85}), conditional_value_at_risk(v, 0.85));
}

TEST(ParseObjective, Names) {
  EXPECT_EQ(parse_objective("var95").measure, RiskMeasure::var);
  EXPECT_DOUBLE_EQ(parse_objective("var95").confidence, 0.95);
  EXPECT_EQ(parse_objective("cvar99").measure, RiskMeasure::cvar);
  EXPECT_EQ(objective_name(parse_objective("cvar99")), "cvar99");
  EXPECT_THROW(parse_objective("es95"), SpecError);
  EXPECT_THROW(parse_objective("var"), SpecError);
  EXPECT_THROW(parse_objective("var0"), SpecError);
}

TEST(ProjectToSimplex, MatchesThresholdBisection) {
  rng::SplitMix64 gen(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + gen.below(12);
    std::vector<double> v(n);
    for (double& x : v) x = gen.uniform(-2, 2);
    double lo = *std::min_element(v.begin(), v.end()) - 1.0;
    double hi = *std::max_element(v.begin(), v.end());
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      double s = 0.0;
      for (double x : v) s += std::max(x - mid, 0.0);
      (s > 1.0 ? lo : hi) = mid;
    }
    const auto w = project_to_simplex(v);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_NEAR(w[i], std::max(v[i] - 0.5 * (lo + hi), 0.0), 1e-12);
      total += w[i];
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(DirichletWeights, OnSimplex) {
  rng::SplitMix64 gen(4);
  const auto w = dirichlet_weights(10, gen);
  EXPECT_NO_THROW(validate_weights(w));
}

TEST(SurrogateGradient, BandedKernelEqualsFullReevaluation) {
  const ScenarioMatrix m = random_instance(8, 2000, 5);
  rng::SplitMix64 gen(6);
  for (const RiskSpec spec : {RiskSpec{RiskMeasure::var, 0.95}, RiskSpec{RiskMeasure::var, 0.99},
                              RiskSpec{RiskMeasure::cvar, 0.95}}) {
    for (int trial = 0; trial < 5; ++trial) {
      const auto w = dirichlet_weights(8, gen);
      const std::size_t pivot = static_cast<std::size_t>(std::max_element(w.begin(), w.end()) - w.begin());
      EXPECT_EQ(surrogate_gradient(m, w, pivot, spec, 1e-4),
                surrogate_gradient_reference(m, w, pivot, spec, 1e-4));
    }
  }
}

TEST(MinimizeRisk, SingleLoan) {
  const ScenarioMatrix m = random_instance(1, 500, 7);
  const PortfolioSolution s = minimize_risk(m, {RiskMeasure::var, 0.95}, quick_optimizer(1));
  ASSERT_EQ(s.weights.size(), 1u);
  EXPECT_EQ(s.weights[0], 1.0);
  EXPECT_EQ(s.objective, value_at_risk(m.row(0), 0.95));
}

TEST(MinimizeRisk, TwoLoansAgainstGrid) {
  const std::vector<ReturnDistribution> d{ReturnDistribution(BinaryReturnDistribution{0.01, -1.0, 0.0}),
                                          ReturnDistribution(BinaryReturnDistribution{0.02, -1.0, 0.1})};
  const ScenarioMatrix m = simulate(d, 2000, 8);
  for (const RiskSpec spec : {RiskSpec{RiskMeasure::var, 0.95}, RiskSpec{RiskMeasure::cvar, 0.95},
                              RiskSpec{RiskMeasure::var, 0.8}}) {
    double grid = std::numeric_limits<double>::infinity();
    for (int g = 0; g <= 100; ++g) {
      const double w1 = g / 100.0;
      grid = std::min(grid, objective_of(m, {1.0 - w1, w1}, spec));
    }
    const PortfolioSolution s = minimize_risk(m, spec, quick_optimizer(2));
    EXPECT_LE(s.objective, grid + 1e-9);
    EXPECT_LE(s.objective, evaluate_weights(m, std::vector<double>{1.0, 0.0}, spec) + 1e-12);
    EXPECT_LE(s.objective, evaluate_weights(m, std::vector<double>{0.0, 1.0}, spec) + 1e-12);
  }
}

TEST(MinimizeRisk, FiveLoansAgainstRandomSearch) {
  const ScenarioMatrix m = random_instance(5, 2000, 9);
  const RiskSpec spec{RiskMeasure::var, 0.95};
  const PortfolioSolution s = minimize_risk(m, spec, quick_optimizer(3));
  rng::SplitMix64 gen(10);
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> r(m.scenarios);
  const std::size_t idx = percentile_index(m.scenarios, 0.95);
  for (int draw = 0; draw < 100000; ++draw) {
    double w[5], total = 0.0;
    for (double& x : w) total += (x = gen.exponential());
    std::fill(r.begin(), r.end(), 0.0);
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t j = 0; j < m.scenarios; ++j) r[j] += (w[i] / total) * m(i, j);
    }
    std::nth_element(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(idx), r.end());
    best = std::min(best, -r[idx]);
  }
  EXPECT_LE(s.objective, best + 1e-6);
}

TEST(MinimizeRisk, FeasibleAndNoWorseThanEqualWeights) {
  for (std::uint64_t seed = 20; seed < 26; ++seed) {
    const ScenarioMatrix m = random_instance(12, 1000, seed);
    for (const char* name : {"var95", "cvar95"}) {
      const RiskSpec spec = parse_objective(name);
      const PortfolioSolution s = minimize_risk(m, spec, quick_optimizer(seed));
      EXPECT_NO_THROW(validate_weights(s.weights)) << std::accumulate(s.weights.begin(), s.weights.end(), 0.0) - 1.0;
      for (double w : s.weights) EXPECT_GE(w, 0.0);
      const std::vector<double> equal(12, 1.0 / 12.0);
      EXPECT_LE(s.objective, evaluate_weights(m, equal, spec) + 1e-12);
      EXPECT_EQ(s.objective, evaluate_weights(m, s.weights, spec));
      EXPECT_NEAR(s.objective, objective_of(m, s.weights, spec), 1e-12);
    }
  }
}

TEST(MinimizeRisk, ParallelStartsMatchSerial) {
  const ScenarioMatrix m = random_instance(10, 1000, 30);
  OptimizerConfig a = quick_optimizer(4);
  a.execution = Execution::serial;
  OptimizerConfig b = quick_optimizer(4);
  b.execution = Execution::parallel;
  const auto sa = minimize_risk(m, {RiskMeasure::var, 0.95}, a);
  const auto sb = minimize_risk(m, {RiskMeasure::var, 0.95}, b);
  EXPECT_EQ(sa.weights, sb.weights);
  EXPECT_EQ(sa.objective, sb.objective);
}

TEST(MinimizeRisk, IdenticalRowsGiveEqualWeights) {
  ScenarioMatrix m{3, 4, 0, {0.5, -0.25, 0.125, 1.0, 0.5, -0.25, 0.125, 1.0, 0.5, -0.25, 0.125, 1.0}};
  const auto s = minimize_risk(m, {RiskMeasure::var, 0.95});
  for (double w : s.weights) EXPECT_DOUBLE_EQ(w, 1.0 / 3.0);
  EXPECT_EQ(s.objective, 0.25);
}

TEST(MinimizeRisk, Errors) {
  EXPECT_THROW(minimize_risk(ScenarioMatrix{}, {RiskMeasure::var, 0.95}), DomainError);
  ScenarioMatrix bad{2, 2, 0, {0.1, std::numeric_limits<double>::quiet_NaN(), 0.2, 0.3}};
  EXPECT_THROW(minimize_risk(bad, {RiskMeasure::var, 0.95}), DomainError);
  ScenarioMatrix ragged{2, 3, 0, {0.1, 0.2}};
  EXPECT_THROW(minimize_risk(ragged, {RiskMeasure::var, 0.95}), DomainError);
}
