#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>

#include "loanvar/data.hpp"
#include "loanvar/errors.hpp"
#include "loanvar/loan_math.hpp"
#include "loanvar/losses.hpp"
#include "loanvar/rng.hpp"
#include "loanvar/survival.hpp"
#include "oracles.hpp"

using namespace loanvar;

namespace {

struct Sample {
  std::vector<double> lifetimes;
  std::vector<double> events;
};

// Weibull lifetimes by inversion, with an independent Weibull censoring
// time of the same shape scaled so a fraction `censor` is censored.
Sample weibull_sample(std::size_t n, double lambda, double rho, double censor, std::uint64_t seed) {
  rng::SplitMix64 gen(seed);
  const double censor_lambda = censor > 0.0 ? lambda * std::pow(censor / (1.0 - censor), 1.0 / rho) : 0.0;
  Sample s;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = std::pow(gen.exponential(), 1.0 / rho) / lambda;
    if (censor > 0.0) {
      const double c = std::pow(gen.exponential(), 1.0 / rho) / censor_lambda;
      s.lifetimes.push_back(std::min(t, c));
      s.events.push_back(t <= c ? 1.0 : 0.0);
    } else {
      s.lifetimes.push_back(t);
      s.events.push_back(1.0);
    }
  }
  return s;
}

Dataset small_dataset(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.loans = 3000;
  cfg.features = 6;
  cfg.seed = seed;
  return preprocess(generate_synthetic(cfg).dataset, SplitRatios{0.6, 0.2, 0.2}, seed);
}

DsnnConfig small_dsnn(std::size_t epochs) {
  DsnnConfig cfg;
  cfg.model.epochs = epochs;
  cfg.model.batch_size = 128;
  cfg.model.seed = 21;
  return cfg;
}

}  // namespace

TEST(Hazard, Examples) {
  EXPECT_EQ(hazard(3.0, {1.0, 2.0}, 0.0), 6.0);
  const WeibullParams wb{0.07, 1.0};
  for (double t : {0.5, 3.0, 30.0}) EXPECT_NEAR(hazard(t, wb, 0.2), 0.07 * std::exp(0.2), 1e-15);
  EXPECT_NEAR(hazard(12.0, {0.02, 1.3}, 0.4), oracle::weibull_hazard(12.0, 0.02, 1.3, 0.4), 1e-15);
  EXPECT_NEAR(log_hazard(12.0, {0.02, 1.3}, 0.4), std::log(oracle::weibull_hazard(12.0, 0.02, 1.3, 0.4)), 1e-13);
  EXPECT_THROW(hazard(0.0, wb, 0.0), DomainError);
  EXPECT_THROW(hazard(1.0, {0.0, 1.0}, 0.0), DomainError);
}

TEST(Survival, Examples) {
  EXPECT_EQ(survival(0.0, {0.02, 1.3}, 5.0), 1.0);
  EXPECT_EQ(survival(1e6, {0.02, 1.3}, -1e6), 1.0);
  EXPECT_NEAR(survival(35.0, {0.02, 1.3}, 0.0), oracle::weibull_survival(35.0, 0.02, 1.3, 0.0), 1e-15);
  EXPECT_THROW(survival(-1.0, {0.02, 1.3}, 0.0), DomainError);
}

TEST(LifetimeDistribution, MatchesSurvivalDifferences) {
  const LifetimeDistribution d = lifetime_distribution({0.02, 1.3}, 0.0, 36);
  ASSERT_EQ(d.default_mass.size(), 36u);
  EXPECT_EQ(d.default_mass[0], 0.0);
  for (int i = 1; i < 36; ++i) {
    const double expected = oracle::weibull_survival(i - 1, 0.02, 1.3, 0.0) - oracle::weibull_survival(i, 0.02, 1.3, 0.0);
    EXPECT_NEAR(d.default_mass[static_cast<std::size_t>(i)], expected, 1e-15);
  }
  EXPECT_NEAR(d.survival_mass, oracle::weibull_survival(35, 0.02, 1.3, 0.0), 1e-15);
}

TEST(LifetimeDistribution, VanishingHazard) {
  const LifetimeDistribution d = lifetime_distribution({0.02, 1.3}, -800.0, 36);
  EXPECT_EQ(d.survival_mass, 1.0);
  for (double p : d.default_mass) EXPECT_EQ(p, 0.0);
}

TEST(LifetimeDistribution, RandomParametersNormalize) {
  rng::SplitMix64 gen(17);
  for (int trial = 0; trial < 10000; ++trial) {
    const WeibullParams wb{std::exp(gen.uniform(-7, 0)), gen.uniform(0.2, 4.0)};
    const double g = gen.uniform(-5, 5);
    const int term = 2 + static_cast<int>(gen.below(59));
    const LifetimeDistribution d = lifetime_distribution(wb, g, term);
    double total = d.survival_mass;
    for (double p : d.default_mass) {
      EXPECT_GE(p, 0.0);
      total += p;
    }
    EXPECT_NEAR(total, 1.0, 1e-9);
    EXPECT_EQ(snn_default_rate(wb, g, term), 1.0 - d.survival_mass);
  }
}

TEST(SnnDefaultRate, Examples) {
  EXPECT_EQ(snn_default_rate({0.02, 1.3}, -800.0, 36), 0.0);
  EXPECT_NEAR(snn_default_rate({0.02, 1.3}, 0.5, 36), 1.0 - oracle::weibull_survival(35, 0.02, 1.3, 0.5), 1e-15);
  EXPECT_THROW(snn_default_rate({0.02, 1.3}, 0.0, 1), DomainError);
}

TEST(FitWeibull, RecoversUncensoredTruth) {
  const Sample s = weibull_sample(100000, 0.05, 1.5, 0.0, 3);
  const WeibullParams fit = fit_weibull(s.lifetimes, s.events);
  EXPECT_LT(std::abs(fit.lambda / 0.05 - 1.0), 0.02);
  EXPECT_LT(std::abs(fit.rho / 1.5 - 1.0), 0.02);
}

TEST(FitWeibull, RecoversCensoredTruth) {
  const Sample s = weibull_sample(100000, 0.05, 1.5, 0.3, 4);
  const double censored = static_cast<double>(std::count(s.events.begin(), s.events.end(), 0.0)) / 1e5;
  EXPECT_NEAR(censored, 0.3, 0.01);
  const WeibullParams fit = fit_weibull(s.lifetimes, s.events);
  EXPECT_LT(std::abs(fit.lambda / 0.05 - 1.0), 0.02);
  EXPECT_LT(std::abs(fit.rho / 1.5 - 1.0), 0.02);
}

TEST(FitWeibull, ExponentialData) {
  const Sample s = weibull_sample(100000, 0.1, 1.0, 0.0, 5);
  EXPECT_LT(std::abs(fit_weibull(s.lifetimes, s.events).rho - 1.0), 0.02);
}

TEST(FitWeibull, Errors) {
  const std::vector<double> same(50, 7.0), ones(50, 1.0), zeros(50, 0.0);
  EXPECT_THROW(fit_weibull(same, ones), TrainingError);
  EXPECT_THROW(fit_weibull(std::vector<double>{1, 2, 3}, std::vector<double>{0, 0, 0}), TrainingError);
  EXPECT_THROW(fit_weibull(std::vector<double>{1, -2}, std::vector<double>{1, 1}), DomainError);
}

TEST(SurvivalDistribution, SupportAndMean) {
  const LoanTerms terms{10000.0, annuity_installment(10000.0, 36, 0.01), 36, 0.01};
  const CategoricalReturnDistribution d = survival_distribution(terms, {0.02, 1.3}, 0.3);
  ASSERT_EQ(d.default_returns.size(), 36u);
  EXPECT_EQ(d.default_returns[0], -1.0);
  for (std::size_t i = 1; i < 36; ++i) {
    EXPECT_GT(d.default_returns[i], d.default_returns[i - 1]);
    EXPECT_LE(d.default_returns[i], terms.rate);
    EXPECT_NEAR(d.default_returns[i],
                oracle::irr_bisection(terms.amount, terms.installment, static_cast<int>(i)), 1e-9);
  }
  double mean = d.survival_mass * d.promised_rate;
  for (std::size_t i = 0; i < 36; ++i) mean += d.default_masses[i] * d.default_returns[i];
  EXPECT_NEAR(ReturnDistribution(d).mean(), mean, 1e-15);
}

TEST(Dsnn, ZeroExpertWeightsReduceToSurvivalOnlyTraining) {
  const Dataset data = small_dataset(1);
  const auto rows = data.indices(Split::train);
  DsnnConfig cfg = small_dsnn(2);
  cfg.weights = {1.0, 0.0, 0.0};
  const DsnnTraining joint = train_dsnn(data, rows, cfg);
  const SurvivalTraining alone = train_snn_only(data, rows, cfg);
  EXPECT_EQ(joint.trace.loss_trace, alone.trace.loss_trace);
  EXPECT_EQ(joint.model.survival.snn, alone.model.snn);
  EXPECT_EQ(joint.model.survival.weibull, alone.model.weibull);
}

TEST(Dsnn, GapShrinksDuringTraining) {
  const Dataset data = small_dataset(2);
  const DsnnTraining t = train_dsnn(data, data.indices(Split::train), small_dsnn(8));
  EXPECT_LT(t.final_parts[2], t.initial_parts[2]);
  EXPECT_LT(t.final_parts[0], t.initial_parts[0]);
}

TEST(Dsnn, ParallelTrainingMatchesSerial) {
  const Dataset data = small_dataset(3);
  const auto rows = data.indices(Split::train);
  DsnnConfig serial = small_dsnn(1);
  serial.model.execution = Execution::serial;
  DsnnConfig parallel = small_dsnn(1);
  const DsnnTraining a = train_dsnn(data, rows, serial);
  const DsnnTraining b = train_dsnn(data, rows, parallel);
  for (std::size_t i = 0; i < a.model.survival.snn.parameters().size(); ++i) {
    EXPECT_NEAR(a.model.survival.snn.parameters()[i], b.model.survival.snn.parameters()[i], 1e-9);
  }
}

TEST(Dsnn, PredictionIsAValidDistribution) {
  const Dataset data = small_dataset(4);
  const DsnnTraining t = train_dsnn(data, data.indices(Split::train), small_dsnn(1));
  const auto test = data.indices(Split::test);
  for (std::size_t k = 0; k < 20; ++k) {
    const LoanRecord& loan = data.records[test[k]];
    const CategoricalReturnDistribution d = predict_dsnn(t.model, loan);
    double total = d.survival_mass;
    for (double p : d.default_masses) total += p;
    EXPECT_NEAR(total, 1.0, 1e-9);
    EXPECT_EQ(d.default_masses[0], 0.0);
    EXPECT_EQ(d.promised_rate, loan.terms.rate);
    const double g = t.model.survival.snn.forward_scalar(loan.features);
    EXPECT_EQ(1.0 - d.survival_mass, snn_default_rate(t.model.survival.weibull, g, loan.terms.term));
  }
  const std::vector<LoanRecord> batch{data.records[test[0]], data.records[test[1]]};
  const auto many = predict_survival(t.model.survival, batch);
  EXPECT_EQ(many[1].default_masses, predict_dsnn(t.model, batch[1]).default_masses);
}

TEST(Dsnn, SurvivalLossMatchesDirectEvaluation) {
  const Dataset data = small_dataset(5);
  const DsnnTraining t = train_dsnn(data, data.indices(Split::train), small_dsnn(1));
  const auto test = data.indices(Split::test);
  std::vector<double> g, life, ev;
  for (std::size_t i : test) {
    g.push_back(t.model.survival.snn.forward_scalar(data.records[i].features));
    life.push_back(data.records[i].lifetime);
    ev.push_back(data.records[i].defaulted ? 1.0 : 0.0);
  }
  EXPECT_NEAR(survival_loss(t.model.survival, data, test),
              nn::loss_survival_nll(g, life, ev, t.model.survival.weibull), 1e-12);
}

TEST(Dsnn, SaveLoadRoundTrip) {
  const Dataset data = small_dataset(6);
  const DsnnTraining t = train_dsnn(data, data.indices(Split::train), small_dsnn(1));
  const auto dir = std::filesystem::temp_directory_path() / "loanvar_dsnn_roundtrip";
  std::filesystem::remove_all(dir);
  save_dsnn(dir, t.model);
  const DsnnModel back = load_dsnn(dir);
  EXPECT_EQ(back.survival.snn, t.model.survival.snn);
  EXPECT_EQ(back.dnn, t.model.dnn);
  EXPECT_EQ(back.survival.weibull, t.model.survival.weibull);
  EXPECT_EQ(back.survival.term, t.model.survival.term);
  EXPECT_EQ(back.weights, t.model.weights);
  std::filesystem::remove_all(dir);
}

TEST(Dsnn, MixedTermsRejected) {
  Dataset data = small_dataset(7);
  const auto rows = data.indices(Split::train);
  data.records[rows[0]].terms.term = 60;
  EXPECT_THROW(train_dsnn(data, rows, small_dsnn(1)), TrainingError);
}
