#pragma once

// Training losses. Every loss is a batch mean of per-sample terms, so the
// per-sample form (value plus derivative with respect to each network
// output) is what the trainer consumes.

#include <array>
#include <cstddef>
#include <span>
#include <variant>

#include "loanvar/weibull.hpp"

namespace loanvar::nn {

inline constexpr double kProbabilityFloor = 1e-12;
// Hazard logs evaluate lifetimes no earlier than half a month.
inline constexpr double kHazardTimeFloor = 0.5;

// Class-weighted binary cross-entropy against the default indicator.
struct WeightedBce {};

// Squared error against a regression target.
struct Mse {};

// Weibull proportional-hazards negative log-likelihood on the network
// output g.
struct SurvivalNll {
  WeibullParams weibull;
};

// Two networks: survival branch (output g) first, default-rate expert
// (output p) second. Adds the squared gap between p and the survival
// branch's implied default rate 1 - S(L-1).
struct DsnnCombined {
  WeibullParams weibull;
  int term = 36;
  double w_snn = 1.0;
  double w_dnn = 1.0;
  double w_dif = 1.0;
};

using LossKind = std::variant<WeightedBce, Mse, SurvivalNll, DsnnCombined>;

std::size_t network_count(const LossKind& loss);
void validate(const LossKind& loss);

struct SampleLabel {
  double event = 0.0;     // E in {0, 1}
  double lifetime = 0.0;  // observed months
  double target = 0.0;    // regression target
};

struct SampleLoss {
  double value = 0.0;
  // Unweighted components: {survival, expert, gap} for DsnnCombined,
  // {value, 0, 0} otherwise.
  std::array<double, 3> parts{};
  std::array<double, 2> output_grad{};
};

SampleLoss sample_loss(const LossKind& loss, std::span<const double> outputs,
                       const SampleLabel& label, double class_weight_positive);

// Batch-mean forms.
double loss_weighted_bce(std::span<const double> predictions, std::span<const double> labels,
                         double class_weight_positive);
double loss_mse(std::span<const double> predictions, std::span<const double> targets);
double loss_survival_nll(std::span<const double> outputs, std::span<const double> lifetimes,
                         std::span<const double> events, const WeibullParams& weibull);
double loss_dif(std::span<const double> expert, std::span<const double> survival_rate);

}  // namespace loanvar::nn
