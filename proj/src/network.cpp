#include "loanvar/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "loanvar/errors.hpp"
#include "loanvar/rng.hpp"

namespace loanvar::nn {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::tanh:
      return "tanh";
    case Activation::sigmoid:
      return "sigmoid";
    case Activation::linear:
      return "linear";
  }
  return "?";
}

Activation parse_activation(std::string_view name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "linear") return Activation::linear;
  throw SpecError("unknown activation '" + std::string(name) + "'");
}

double activate(Activation a, double z) {
  switch (a) {
    case Activation::tanh:
      return std::tanh(z);
    case Activation::sigmoid:
      if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
      {
        const double e = std::exp(z);
        return e / (1.0 + e);
      }
    case Activation::linear:
      return z;
  }
  return z;
}

double activation_slope(Activation a, double output) {
  switch (a) {
    case Activation::tanh:
      return 1.0 - output * output;
    case Activation::sigmoid:
      return output * (1.0 - output);
    case Activation::linear:
      return 1.0;
  }
  return 1.0;
}

void validate(const NetworkSpec& spec) {
  if (spec.layer_sizes.size() < 2) throw SpecError("a network needs at least two layers");
  for (std::size_t width : spec.layer_sizes) {
    if (width == 0) throw SpecError("layer widths must be positive");
  }
  if (spec.activations.size() + 1 != spec.layer_sizes.size()) {
    throw SpecError("need exactly one activation per non-input layer");
  }
  if (!(spec.l2_coefficient >= 0.0) || !std::isfinite(spec.l2_coefficient)) {
    throw SpecError("l2 coefficient must be finite and non-negative");
  }
}

NetworkSpec five_layer_spec(std::size_t inputs, Activation h1, Activation h2, Activation h3,
                            Activation out, double l2, std::uint64_t seed) {
  return NetworkSpec{{inputs, 128, 64, 32, 1}, {h1, h2, h3, out}, l2, seed};
}

Network::Network(NetworkSpec spec) : spec_(std::move(spec)) {
  validate(spec_);
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < spec_.layer_sizes.size(); ++l) {
    Layer layer;
    layer.fan_in = spec_.layer_sizes[l];
    layer.fan_out = spec_.layer_sizes[l + 1];
    layer.weight_offset = offset;
    offset += layer.fan_in * layer.fan_out;
    layer.bias_offset = offset;
    offset += layer.fan_out;
    layer.activation = spec_.activations[l];
    layers_.push_back(layer);
  }
  params_.assign(offset, 0.0);
  weight_mask_.assign(offset, false);
  for (const Layer& layer : layers_) {
    std::fill_n(weight_mask_.begin() + static_cast<std::ptrdiff_t>(layer.weight_offset),
                layer.fan_in * layer.fan_out, true);
  }
  max_width_ = *std::max_element(spec_.layer_sizes.begin(), spec_.layer_sizes.end());
}

std::span<const double> Network::weights(std::size_t l) const {
  const Layer& layer = layers_.at(l);
  return {params_.data() + layer.weight_offset, layer.fan_in * layer.fan_out};
}

std::span<double> Network::weights(std::size_t l) {
  const Layer& layer = layers_.at(l);
  return {params_.data() + layer.weight_offset, layer.fan_in * layer.fan_out};
}

std::span<const double> Network::bias(std::size_t l) const {
  const Layer& layer = layers_.at(l);
  return {params_.data() + layer.bias_offset, layer.fan_out};
}

std::span<double> Network::bias(std::size_t l) {
  const Layer& layer = layers_.at(l);
  return {params_.data() + layer.bias_offset, layer.fan_out};
}

std::vector<double> Network::forward(std::span<const double> x) const {
  if (x.size() != input_size()) {
    throw DomainError("input has " + std::to_string(x.size()) + " features, network expects " +
                      std::to_string(input_size()));
  }
  std::vector<double> current(x.begin(), x.end());
  std::vector<double> next;
  for (const Layer& layer : layers_) {
    next.assign(params_.begin() + static_cast<std::ptrdiff_t>(layer.bias_offset),
                params_.begin() + static_cast<std::ptrdiff_t>(layer.bias_offset + layer.fan_out));
    const double* w = params_.data() + layer.weight_offset;
    for (std::size_t i = 0; i < layer.fan_in; ++i) {
      const double xi = current[i];
      const double* wi = w + i * layer.fan_out;
      for (std::size_t o = 0; o < layer.fan_out; ++o) next[o] += xi * wi[o];
    }
    for (double& v : next) v = activate(layer.activation, v);
    current.swap(next);
  }
  return current;
}

double Network::forward_scalar(std::span<const double> x) const {
  if (output_size() != 1) throw SpecError("forward_scalar needs a single-output network");
  return forward(x).front();
}

Network init(const NetworkSpec& spec) {
  Network net(spec);
  rng::SplitMix64 gen(rng::derive_seed(spec.seed, "network-init"));
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    const Layer& layer = net.layers()[l];
    const double limit =
        std::sqrt(6.0 / static_cast<double>(layer.fan_in + layer.fan_out));
    for (double& w : net.weights(l)) w = gen.uniform(-limit, limit);
  }
  return net;
}

void forward_batch(const Network& net, std::span<const double> inputs, std::size_t rows,
                   ForwardCache& cache) {
  const auto layers = net.layers();
  const auto params = net.parameters();
  if (inputs.size() < rows * net.input_size()) throw DomainError("input batch too small");
  cache.rows = rows;
  cache.outputs.resize(layers.size());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Layer& layer = layers[l];
    const std::size_t fi = layer.fan_in;
    const std::size_t fo = layer.fan_out;
    const double* in = l == 0 ? inputs.data() : cache.outputs[l - 1].data();
    std::vector<double>& out = cache.outputs[l];
    out.resize(rows * fo);
    const double* w = params.data() + layer.weight_offset;
    const double* b = params.data() + layer.bias_offset;
    for (std::size_t r = 0; r < rows; ++r) {
      double* z = out.data() + r * fo;
      const double* x = in + r * fi;
      std::copy_n(b, fo, z);
      for (std::size_t i = 0; i < fi; ++i) {
        const double xi = x[i];
        const double* wi = w + i * fo;
        for (std::size_t o = 0; o < fo; ++o) z[o] += xi * wi[o];
      }
      for (std::size_t o = 0; o < fo; ++o) z[o] = activate(layer.activation, z[o]);
    }
  }
}

void backward_batch(const Network& net, std::span<const double> inputs, std::size_t rows,
                    ForwardCache& cache, std::span<const double> output_grad,
                    std::span<double> grad) {
  const auto layers = net.layers();
  const auto params = net.parameters();
  if (grad.size() != params.size()) throw DomainError("gradient buffer size mismatch");
  if (output_grad.size() != rows * net.output_size()) throw DomainError("output gradient size mismatch");

  std::vector<double>& delta = cache.delta;
  std::vector<double>& delta_prev = cache.delta_prev;
  {
    const Layer& last = layers.back();
    const std::vector<double>& out = cache.outputs.back();
    delta.resize(rows * last.fan_out);
    for (std::size_t k = 0; k < delta.size(); ++k) {
      delta[k] = output_grad[k] * activation_slope(last.activation, out[k]);
    }
  }
  for (std::size_t l = layers.size(); l-- > 0;) {
    const Layer& layer = layers[l];
    const std::size_t fi = layer.fan_in;
    const std::size_t fo = layer.fan_out;
    const double* in = l == 0 ? inputs.data() : cache.outputs[l - 1].data();
    double* gw = grad.data() + layer.weight_offset;
    double* gb = grad.data() + layer.bias_offset;
    for (std::size_t r = 0; r < rows; ++r) {
      const double* d = delta.data() + r * fo;
      const double* x = in + r * fi;
      for (std::size_t i = 0; i < fi; ++i) {
        const double xi = x[i];
        double* g = gw + i * fo;
        for (std::size_t o = 0; o < fo; ++o) g[o] += xi * d[o];
      }
      for (std::size_t o = 0; o < fo; ++o) gb[o] += d[o];
    }
    if (l == 0) break;
    const Layer& below = layers[l - 1];
    const double* w = params.data() + layer.weight_offset;
    delta_prev.resize(rows * fi);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* d = delta.data() + r * fo;
      const double* a = in + r * fi;
      double* dp = delta_prev.data() + r * fi;
      for (std::size_t i = 0; i < fi; ++i) {
        const double* wi = w + i * fo;
        double s = 0.0;
        for (std::size_t o = 0; o < fo; ++o) s += wi[o] * d[o];
        dp[i] = s * activation_slope(below.activation, a[i]);
      }
    }
    delta.swap(delta_prev);
  }
}

}  // namespace loanvar::nn
