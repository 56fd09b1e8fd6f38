#include "loanvar/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "loanvar/errors.hpp"
#include "loanvar/rng.hpp"

namespace loanvar::nn {

namespace {

struct ChunkResult {
  double value = 0.0;
  std::array<double, 3> parts{};
  std::vector<std::vector<double>> grads;
};

void check_inputs(std::span<const Network* const> nets, const LossKind& loss,
                  const TrainingSet& data) {
  if (nets.size() != network_count(loss)) {
    throw SpecError("loss expects " + std::to_string(network_count(loss)) + " network(s)");
  }
  for (const Network* net : nets) {
    if (net->input_size() != data.features.cols) {
      throw DomainError("feature width " + std::to_string(data.features.cols) +
                        " does not match network input " + std::to_string(net->input_size()));
    }
    if (net->output_size() != 1) throw SpecError("training losses need single-output networks");
  }
  if (data.features.rows != data.labels.size()) throw DomainError("feature and label counts differ");
}

// Loss and gradient over a contiguous block of `rows`, every sample scaled
// by 1 / batch.
void evaluate_block(std::span<const Network* const> nets, const LossKind& loss,
                    const TrainingSet& data, std::span<const std::size_t> rows, double batch,
                    double class_weight, bool want_grad, ChunkResult& out) {
  const std::size_t n = rows.size();
  const std::size_t d = data.features.cols;
  std::vector<double> inputs(n * d);
  for (std::size_t r = 0; r < n; ++r) {
    const auto src = data.features.row(rows[r]);
    std::copy(src.begin(), src.end(), inputs.begin() + static_cast<std::ptrdiff_t>(r * d));
  }
  std::vector<ForwardCache> caches(nets.size());
  for (std::size_t k = 0; k < nets.size(); ++k) forward_batch(*nets[k], inputs, n, caches[k]);

  std::vector<std::vector<double>> output_grad(nets.size(), std::vector<double>(n));
  std::array<double, 2> outputs{};
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = 0; k < nets.size(); ++k) outputs[k] = caches[k].final_output()[r];
    const SampleLoss s = sample_loss(loss, std::span(outputs.data(), nets.size()),
                                     data.labels[rows[r]], class_weight);
    out.value += s.value / batch;
    for (std::size_t j = 0; j < 3; ++j) out.parts[j] += s.parts[j] / batch;
    for (std::size_t k = 0; k < nets.size(); ++k) output_grad[k][r] = s.output_grad[k] / batch;
  }
  if (!want_grad) return;
  for (std::size_t k = 0; k < nets.size(); ++k) {
    backward_batch(*nets[k], inputs, n, caches[k], output_grad[k], out.grads[k]);
  }
}

}  // namespace

void validate(const TrainConfig& cfg) {
  if (cfg.batch_size == 0) throw SpecError("batch size must be positive");
  if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate)) {
    throw SpecError("learning rate must be positive");
  }
  if (!(cfg.class_weight_positive > 0.0) || !std::isfinite(cfg.class_weight_positive)) {
    throw SpecError("positive-class weight must be positive");
  }
}

ObjectiveValue evaluate_objective(std::span<const Network* const> nets, const LossKind& loss,
                                  const TrainingSet& data, std::span<const std::size_t> rows,
                                  double class_weight_positive,
                                  std::vector<std::vector<double>>* gradients, bool include_l2,
                                  Execution execution) {
  validate(loss);
  check_inputs(nets, loss, data);
  if (rows.empty()) throw DomainError("empty batch");
  const bool want_grad = gradients != nullptr;
  const double batch = static_cast<double>(rows.size());

  ObjectiveValue result;
  std::vector<std::vector<double>> grads(nets.size());
  if (want_grad) {
    for (std::size_t k = 0; k < nets.size(); ++k) grads[k].assign(nets[k]->parameters().size(), 0.0);
  }

  if (execution == Execution::serial) {
    ChunkResult acc;
    acc.grads = std::move(grads);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      evaluate_block(nets, loss, data, rows.subspan(r, 1), batch, class_weight_positive, want_grad,
                     acc);
    }
    result.data_loss = acc.value;
    result.parts = acc.parts;
    grads = std::move(acc.grads);
  } else {
    const std::size_t chunks = (rows.size() + kGradientChunk - 1) / kGradientChunk;
    std::vector<ChunkResult> partial(chunks);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
      ChunkResult& part = partial[static_cast<std::size_t>(c)];
      if (want_grad) {
        part.grads.resize(nets.size());
        for (std::size_t k = 0; k < nets.size(); ++k) {
          part.grads[k].assign(nets[k]->parameters().size(), 0.0);
        }
      }
      const std::size_t begin = static_cast<std::size_t>(c) * kGradientChunk;
      const std::size_t count = std::min(kGradientChunk, rows.size() - begin);
      evaluate_block(nets, loss, data, rows.subspan(begin, count), batch, class_weight_positive,
                     want_grad, part);
    }
    for (const ChunkResult& part : partial) {
      result.data_loss += part.value;
      for (std::size_t j = 0; j < 3; ++j) result.parts[j] += part.parts[j];
      if (!want_grad) continue;
      for (std::size_t k = 0; k < nets.size(); ++k) {
        std::vector<double>& g = grads[k];
        const std::vector<double>& pg = part.grads[k];
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += pg[i];
      }
    }
  }

  for (std::size_t k = 0; k < nets.size(); ++k) {
    const double l2 = nets[k]->spec().l2_coefficient;
    if (l2 == 0.0) continue;
    const auto params = nets[k]->parameters();
    const auto& mask = nets[k]->weight_mask();
    double sq = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (mask[i]) sq += params[i] * params[i];
    }
    result.l2_loss += l2 * sq;
    if (want_grad && include_l2) {
      for (std::size_t i = 0; i < params.size(); ++i) {
        if (mask[i]) grads[k][i] += 2.0 * l2 * params[i];
      }
    }
  }
  if (!include_l2) result.l2_loss = 0.0;
  if (want_grad) *gradients = std::move(grads);
  return result;
}

void sgd_step(Network& net, std::span<const double> data_gradient, double learning_rate) {
  auto params = net.parameters();
  if (data_gradient.size() != params.size()) throw DomainError("gradient size mismatch");
  const double decay = 1.0 - 2.0 * learning_rate * net.spec().l2_coefficient;
  const auto& mask = net.weight_mask();
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (mask[i]) {
      params[i] = params[i] * decay - learning_rate * data_gradient[i];
    } else {
      params[i] -= learning_rate * data_gradient[i];
    }
  }
}

TrainResult train(std::span<Network* const> nets, const TrainingSet& data, const LossKind& loss,
                  const TrainConfig& cfg) {
  validate(cfg);
  validate(loss);
  if (data.size() == 0) throw TrainingError("training set is empty");
  std::vector<const Network*> view(nets.begin(), nets.end());
  check_inputs(view, loss, data);

  TrainResult result;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng::SplitMix64 gen(rng::derive_seed(cfg.seed, "minibatch-shuffle"));
  std::vector<std::vector<double>> grads;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng::shuffle(order, gen);
    double epoch_loss = 0.0;
    std::array<double, 3> epoch_parts{};
    std::size_t steps = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t count = std::min(cfg.batch_size, order.size() - begin);
      const auto rows = std::span<const std::size_t>(order).subspan(begin, count);
      const ObjectiveValue obj = evaluate_objective(view, loss, data, rows, cfg.class_weight_positive,
                                                    &grads, false, cfg.execution);
      if (!std::isfinite(obj.data_loss)) {
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                            std::to_string(steps));
      }
      for (std::size_t k = 0; k < nets.size(); ++k) sgd_step(*nets[k], grads[k], cfg.learning_rate);
      epoch_loss += obj.data_loss;
      for (std::size_t j = 0; j < 3; ++j) epoch_parts[j] += obj.parts[j];
      ++steps;
    }
    for (double& p : epoch_parts) p /= static_cast<double>(steps);
    result.loss_trace.push_back(epoch_loss / static_cast<double>(steps));
    result.part_trace.push_back(epoch_parts);
  }
  return result;
}

TrainResult train(Network& net, const TrainingSet& data, const LossKind& loss,
                  const TrainConfig& cfg) {
  Network* nets[] = {&net};
  return train(std::span<Network* const>(nets), data, loss, cfg);
}

std::vector<double> predict(const Network& net, const FeatureMatrix& features) {
  if (features.cols != net.input_size()) throw DomainError("feature width does not match network");
  if (net.output_size() != 1) throw SpecError("predict needs a single-output network");
  std::vector<double> out(features.rows);
  const std::size_t chunks = (features.rows + kGradientChunk - 1) / kGradientChunk;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
    const std::size_t begin = static_cast<std::size_t>(c) * kGradientChunk;
    const std::size_t count = std::min(kGradientChunk, features.rows - begin);
    ForwardCache cache;
    forward_batch(net,
                  std::span<const double>(features.values).subspan(begin * features.cols,
                                                                   count * features.cols),
                  count, cache);
    std::copy_n(cache.final_output().begin(), count,
                out.begin() + static_cast<std::ptrdiff_t>(begin));
  }
  return out;
}

}  // namespace loanvar::nn
