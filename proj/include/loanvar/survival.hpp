#pragma once

// Survival-network models. A SurvivalModel maps loan features to a
// Weibull proportional-hazards lifetime distribution. The DSNN trains one
// jointly with a default-rate expert network whose output supervises the
// survival branch's implied default rate; only the survival branch is used
// for prediction.

#include <filesystem>
#include <span>

#include "loanvar/distribution.hpp"
#include "loanvar/losses.hpp"
#include "loanvar/model_config.hpp"
#include "loanvar/network.hpp"
#include "loanvar/weibull.hpp"

namespace loanvar {

struct DsnnLossWeights {
  double snn = 1.0;
  double dnn = 1.0;
  double dif = 1.0;

  bool operator==(const DsnnLossWeights&) const = default;
};

struct SurvivalModel {
  nn::Network snn;  // tanh, tanh, sigmoid, linear
  WeibullParams weibull;
  int term = 36;
};

struct DsnnModel {
  SurvivalModel survival;
  nn::Network dnn;  // expert; tanh, tanh, tanh, sigmoid
  DsnnLossWeights weights;
};

struct DsnnConfig {
  ModelConfig model;
  DsnnLossWeights weights;
  // Positive-class weight of the expert's cross-entropy. Unset falls back
  // to model.class_weight_positive and then to 1 (unweighted), so the
  // expert's output stays a calibrated probability for the gap term.
  std::optional<double> expert_class_weight;
  WeibullFitOptions fit;
};

struct DsnnTraining {
  DsnnModel model;
  nn::TrainResult trace;
  // {survival NLL, expert cross-entropy, gap} on the training rows.
  std::array<double, 3> initial_parts{};
  std::array<double, 3> final_parts{};
};

struct SurvivalTraining {
  SurvivalModel model;
  nn::TrainResult trace;
};

nn::NetworkSpec snn_spec(std::size_t inputs, double l2, std::uint64_t seed);
nn::NetworkSpec expert_spec(std::size_t inputs, double l2, std::uint64_t seed);

// The common loan term of `rows`; throws when terms differ.
int common_term(const Dataset& dataset, std::span<const std::size_t> rows);

DsnnTraining train_dsnn(const Dataset& dataset, std::span<const std::size_t> rows,
                        const DsnnConfig& cfg);

// Survival branch alone on the NLL, with the initialization and batch order
// the DSNN's survival branch would get from the same seed.
SurvivalTraining train_snn_only(const Dataset& dataset, std::span<const std::size_t> rows,
                                const DsnnConfig& cfg);

CategoricalReturnDistribution survival_distribution(const LoanTerms& terms,
                                                    const WeibullParams& weibull, double g);

CategoricalReturnDistribution predict_survival(const SurvivalModel& model, const LoanRecord& loan);
std::vector<CategoricalReturnDistribution> predict_survival(const SurvivalModel& model,
                                                            std::span<const LoanRecord> loans);
inline CategoricalReturnDistribution predict_dsnn(const DsnnModel& model, const LoanRecord& loan) {
  return predict_survival(model.survival, loan);
}

// Mean survival NLL of the model's branch over `rows`.
double survival_loss(const SurvivalModel& model, const Dataset& dataset,
                     std::span<const std::size_t> rows);

// Unweighted {survival NLL, expert cross-entropy, gap} over `rows`.
std::array<double, 3> dsnn_loss_parts(const DsnnModel& model, const Dataset& dataset,
                                      std::span<const std::size_t> rows, double expert_class_weight);

void save_survival(const std::filesystem::path& dir, const SurvivalModel& model);
SurvivalModel load_survival(const std::filesystem::path& dir);
void save_dsnn(const std::filesystem::path& dir, const DsnnModel& model);
DsnnModel load_dsnn(const std::filesystem::path& dir);

}  // namespace loanvar
