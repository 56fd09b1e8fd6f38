#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "loanvar/data.hpp"
#include "loanvar/denn.hpp"
#include "loanvar/errors.hpp"
#include "loanvar/loan_math.hpp"
#include "loanvar/rng.hpp"
#include "oracles.hpp"

using namespace loanvar;

namespace {

constexpr int kTerm = 36;

LoanTerms standard_terms() { return {10000.0, annuity_installment(10000.0, kTerm, 0.01), kTerm, 0.01}; }

// Defaults exactly when feature 0 exceeds 0.5; a defaulted loan's lifetime
// is round(L * sigmoid(feature 1)), kept below the term.
Dataset threshold_dataset(std::size_t n, std::uint64_t seed) {
  rng::SplitMix64 gen(seed);
  Dataset data;
  for (std::size_t i = 0; i < n; ++i) {
    LoanRecord r;
    r.id = std::to_string(i);
    for (int f = 0; f < 4; ++f) r.features.push_back(gen.normal());
    r.terms = standard_terms();
    r.defaulted = r.features[0] > 0.5;
    const double ratio = 1.0 / (1.0 + std::exp(-r.features[1]));
    r.lifetime = r.defaulted ? std::min(kTerm - 1, static_cast<int>(std::round(kTerm * ratio))) : kTerm;
    data.records.push_back(std::move(r));
  }
  return preprocess(std::move(data), SplitRatios{0.7, 0.1, 0.2}, seed);
}

ModelConfig quick_config() {
  ModelConfig cfg;
  cfg.epochs = 15;
  cfg.batch_size = 64;
  cfg.learning_rate = 0.05;
  cfg.seed = 3;
  return cfg;
}

}  // namespace

TEST(DefaultLifetime, RoundsAndClamps) {
  EXPECT_EQ(predicted_default_lifetime(0.0, 36), 0);
  EXPECT_EQ(predicted_default_lifetime(0.5, 36), 18);
  EXPECT_EQ(predicted_default_lifetime(0.99, 36), 35);
  EXPECT_EQ(predicted_default_lifetime(1.0, 36), 35);
  EXPECT_EQ(predicted_default_lifetime(0.01, 36), 0);
}

TEST(DennDistribution, Examples) {
  const LoanTerms t = standard_terms();
  const BinaryReturnDistribution immediate = denn_distribution(t, 0.2, 0.0);
  EXPECT_EQ(immediate.default_return, -1.0);
  EXPECT_EQ(immediate.promised_rate, t.rate);

  const BinaryReturnDistribution safe = denn_distribution(t, 0.0, 0.3);
  const ReturnDistribution degenerate(safe);
  EXPECT_EQ(degenerate.quantile_draw(0.0), t.rate);
  EXPECT_EQ(degenerate.quantile_draw(0.999999), t.rate);

  const BinaryReturnDistribution half = denn_distribution(t, 0.4, 0.5);
  EXPECT_NEAR(half.default_return, oracle::irr_bisection(t.amount, t.installment, 18), 1e-9);
  EXPECT_LE(half.default_return, t.rate);
  EXPECT_NEAR(ReturnDistribution(half).mean(), 0.6 * t.rate + 0.4 * half.default_return, 1e-15);
}

TEST(TrainDenn, NoDefaultsIsAnError) {
  Dataset data = threshold_dataset(200, 1);
  for (LoanRecord& r : data.records) {
    r.defaulted = false;
    r.lifetime = kTerm;
  }
  EXPECT_THROW(train_denn(data, data.indices(Split::train), quick_config()), TrainingError);
}

TEST(TrainDenn, LearnsThresholdDefaultsAndLifetimes) {
  const Dataset data = threshold_dataset(4000, 2);
  const DennTraining t = train_denn(data, data.indices(Split::train), quick_config());
  EXPECT_GT(t.class_weight_positive, 1.0);

  std::size_t correct = 0, total = 0, defaults = 0;
  double squared = 0.0;
  for (std::size_t i : data.indices(Split::test)) {
    const LoanRecord& r = data.records[i];
    const double p = t.model.dr_nn.forward_scalar(r.features);
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
    correct += (p > 0.5) == r.defaulted ? 1 : 0;
    ++total;
    if (r.defaulted) {
      const double diff = t.model.dl_nn.forward_scalar(r.features) - static_cast<double>(r.lifetime) / kTerm;
      squared += diff * diff;
      ++defaults;
    }
  }
  EXPECT_GT(static_cast<double>(correct) / static_cast<double>(total), 0.95);
  ASSERT_GT(defaults, 0u);
  EXPECT_LT(squared / static_cast<double>(defaults), 0.01);
}

TEST(TrainDenn, BatchPredictionMatchesSingle) {
  const Dataset data = threshold_dataset(600, 3);
  ModelConfig cfg = quick_config();
  cfg.epochs = 1;
  const DennTraining t = train_denn(data, data.indices(Split::train), cfg);
  const std::vector<LoanRecord> loans(data.records.begin(), data.records.begin() + 10);
  const auto batch = predict_denn(t.model, loans);
  for (std::size_t i = 0; i < loans.size(); ++i) {
    const BinaryReturnDistribution one = predict_denn(t.model, loans[i]);
    EXPECT_NEAR(batch[i].default_probability, one.default_probability, 1e-12);
    EXPECT_GE(one.default_return, -1.0);
    EXPECT_LE(one.default_return, one.promised_rate);
  }
}

TEST(TrainDenn, SaveLoadRoundTrip) {
  const Dataset data = threshold_dataset(400, 4);
  ModelConfig cfg = quick_config();
  cfg.epochs = 1;
  const DennTraining t = train_denn(data, data.indices(Split::train), cfg);
  const auto dir = std::filesystem::temp_directory_path() / "loanvar_denn_roundtrip";
  std::filesystem::remove_all(dir);
  save_denn(dir, t.model);
  const DennModel back = load_denn(dir);
  EXPECT_EQ(back.dr_nn, t.model.dr_nn);
  EXPECT_EQ(back.dl_nn, t.model.dl_nn);
  std::filesystem::remove_all(dir);
  EXPECT_THROW(load_denn(dir), std::exception);
}
