#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "loanvar/data.hpp"
#include "loanvar/train.hpp"

namespace loanvar {

// Hyper-parameters shared by the DeNN and DSNN trainers.
struct ModelConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 256;
  double learning_rate = 0.01;
  double l2 = 1e-4;
  // Positive-class weight for the default-rate loss; unset means
  // #non-defaults / #defaults on the training rows.
  std::optional<double> class_weight_positive;
  std::uint64_t seed = 0;
  nn::Execution execution = nn::Execution::parallel;
};

// #non-defaults / #defaults over `rows`; throws TrainingError without defaults.
double inverse_frequency_weight(const Dataset& dataset, std::span<const std::size_t> rows);

nn::TrainConfig train_config(const ModelConfig& cfg, std::uint64_t seed, double class_weight);

}  // namespace loanvar
