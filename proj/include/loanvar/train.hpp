#pragma once

// Mini-batch gradient descent over one or two networks.
//
// The batch gradient has two implementations. The serial reference walks
// samples one at a time. The parallel kernel splits the batch into fixed
// 32-row chunks, evaluates chunks on OpenMP threads and sums chunk results
// in chunk order, so its output does not depend on the thread count.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "loanvar/execution.hpp"
#include "loanvar/losses.hpp"
#include "loanvar/network.hpp"

namespace loanvar::nn {

using loanvar::Execution;

inline constexpr std::size_t kGradientChunk = 32;

struct TrainingSet {
  FeatureMatrix features;
  std::vector<SampleLabel> labels;

  std::size_t size() const noexcept { return labels.size(); }
};

struct TrainConfig {
  std::size_t batch_size = 256;
  double learning_rate = 0.01;
  std::size_t epochs = 50;
  double class_weight_positive = 1.0;
  std::uint64_t seed = 0;
  Execution execution = Execution::parallel;
};

void validate(const TrainConfig& cfg);

struct ObjectiveValue {
  double data_loss = 0.0;
  double l2_loss = 0.0;
  std::array<double, 3> parts{};

  double total() const noexcept { return data_loss + l2_loss; }
};

// Loss over `rows` of `data` and, when `gradients` is non-null, its gradient
// with respect to every network's parameters (one vector per network,
// resized and overwritten). The L2 penalty sum_k l2_k * |W_k|^2 is included
// when `include_l2` is set.
ObjectiveValue evaluate_objective(std::span<const Network* const> nets, const LossKind& loss,
                                  const TrainingSet& data, std::span<const std::size_t> rows,
                                  double class_weight_positive,
                                  std::vector<std::vector<double>>* gradients,
                                  bool include_l2 = true,
                                  Execution execution = Execution::parallel);

// theta <- theta - lr * (data_gradient + 2 * l2 * W), with the weight
// decay written as a multiplicative factor so a zero data gradient scales
// weights by exactly (1 - 2 lr l2).
void sgd_step(Network& net, std::span<const double> data_gradient, double learning_rate);

struct TrainResult {
  std::vector<double> loss_trace;                 // mean batch data loss per epoch
  std::vector<std::array<double, 3>> part_trace;  // unweighted components per epoch
};

TrainResult train(std::span<Network* const> nets, const TrainingSet& data, const LossKind& loss,
                  const TrainConfig& cfg);
TrainResult train(Network& net, const TrainingSet& data, const LossKind& loss,
                  const TrainConfig& cfg);

// Scalar output for every row of `features`.
std::vector<double> predict(const Network& net, const FeatureMatrix& features);

}  // namespace loanvar::nn
