#pragma once

// Dense feed-forward networks with tanh / sigmoid / linear layers.
//
// Parameters live in one flat vector. Layer l occupies
//   weights: fan_in x fan_out, row-major (weights[i * fan_out + o])
//   bias:    fan_out
// in that order, layers back to back. Gradients use the same layout.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace loanvar::nn {

enum class Activation { tanh, sigmoid, linear };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

double activate(Activation a, double z);
// Derivative expressed through the activation's output value.
double activation_slope(Activation a, double output);

struct NetworkSpec {
  std::vector<std::size_t> layer_sizes;  // input first, output last
  std::vector<Activation> activations;   // one per non-input layer
  double l2_coefficient = 1e-4;          // applied to weights, not biases
  std::uint64_t seed = 0;

  bool operator==(const NetworkSpec&) const = default;
};

// Throws SpecError on zero-width layers, mismatched activation count or a
// negative L2 coefficient.
void validate(const NetworkSpec& spec);

// Hidden widths 128, 64, 32 with a single output.
NetworkSpec five_layer_spec(std::size_t inputs, Activation h1, Activation h2, Activation h3,
                            Activation out, double l2, std::uint64_t seed);

struct Layer {
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;
  Activation activation = Activation::linear;
};

class Network {
 public:
  // All parameters zero.
  explicit Network(NetworkSpec spec);

  const NetworkSpec& spec() const noexcept { return spec_; }
  std::size_t input_size() const noexcept { return spec_.layer_sizes.front(); }
  std::size_t output_size() const noexcept { return spec_.layer_sizes.back(); }
  std::size_t max_width() const noexcept { return max_width_; }

  std::span<const Layer> layers() const noexcept { return layers_; }

  std::span<const double> parameters() const noexcept { return params_; }
  std::span<double> parameters() noexcept { return params_; }

  std::span<const double> weights(std::size_t layer) const;
  std::span<double> weights(std::size_t layer);
  std::span<const double> bias(std::size_t layer) const;
  std::span<double> bias(std::size_t layer);

  // True for parameter slots holding weights (the L2-regularized ones).
  const std::vector<bool>& weight_mask() const noexcept { return weight_mask_; }

  std::vector<double> forward(std::span<const double> x) const;
  double forward_scalar(std::span<const double> x) const;

  bool operator==(const Network& other) const {
    return spec_ == other.spec_ && params_ == other.params_;
  }

 private:
  NetworkSpec spec_;
  std::vector<Layer> layers_;
  std::vector<double> params_;
  std::vector<bool> weight_mask_;
  std::size_t max_width_ = 0;
};

// Seeded scaled-uniform weights on +-sqrt(6 / (fan_in + fan_out)), zero
// biases. Same spec gives bit-identical parameters.
Network init(const NetworkSpec& spec);

// Row-major sample matrix.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

  std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
  std::span<double> row(std::size_t i) { return {values.data() + i * cols, cols}; }
};

// Per-layer outputs of a batched forward pass, reused across calls.
struct ForwardCache {
  std::size_t rows = 0;
  std::vector<std::vector<double>> outputs;  // outputs[l]: rows x fan_out of layer l
  std::vector<double> delta;
  std::vector<double> delta_prev;

  std::span<const double> final_output() const { return outputs.back(); }
};

// `inputs` is rows x input_size, row-major.
void forward_batch(const Network& net, std::span<const double> inputs, std::size_t rows,
                   ForwardCache& cache);

// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(output) per row
// (rows x output_size). `cache` must hold the forward pass for `inputs`.
void backward_batch(const Network& net, std::span<const double> inputs, std::size_t rows,
                    ForwardCache& cache, std::span<const double> output_grad,
                    std::span<double> grad);

}  // namespace loanvar::nn
