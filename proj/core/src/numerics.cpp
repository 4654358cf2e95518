#include "ealm/numerics.hpp"

#include <algorithm>
#include <cmath>

#include "ealm/errors.hpp"

namespace ealm::nn {

namespace {

std::vector<DenseLayer> make_layers(std::span<const std::size_t> dims, Activation hidden,
                                    Activation output) {
  if (dims.size() < 2) throw UsageError("DenseNet: need at least input and output dims");
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    DenseLayer layer;
    layer.weight = Matrix(dims[l + 1], dims[l]);
    layer.bias.assign(dims[l + 1], 0.0);
    layer.activation = (l + 2 == dims.size()) ? output : hidden;
    layers.push_back(std::move(layer));
  }
  return layers;
}

void check_shapes(const ParameterBlocks& params, const GradientBlocks& grads) {
  if (params.size() != grads.size()) throw UsageError("gradient block count mismatch");
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (params[b].size() != grads[b].size()) throw UsageError("gradient block shape mismatch");
  }
}

}  // namespace

DenseNet::DenseNet(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.weight.data.size() != layer.weight.rows * layer.weight.cols ||
        layer.bias.size() != layer.out()) {
      throw UsageError("DenseNet: malformed layer");
    }
    if (l > 0 && layers_[l - 1].out() != layer.in()) {
      throw UsageError("DenseNet: layer dimensions do not chain");
    }
  }
}

DenseNet DenseNet::glorot(std::span<const std::size_t> dims, Activation hidden, Activation output,
                          Rng& rng) {
  auto layers = make_layers(dims, hidden, output);
  for (auto& layer : layers) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.in() + layer.out()));
    for (double& w : layer.weight.data) w = rng.uniform(-limit, limit);
  }
  return DenseNet(std::move(layers));
}

DenseNet DenseNet::zeros(std::span<const std::size_t> dims, Activation hidden, Activation output) {
  return DenseNet(make_layers(dims, hidden, output));
}

std::size_t DenseNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.weight.data.size() + layer.bias.size();
  return n;
}

std::vector<double> DenseNet::forward(std::span<const double> input) const {
  if (input.size() != input_dim()) throw UsageError("DenseNet::forward: input dimension mismatch");
  std::vector<double> current(input.begin(), input.end());
  std::vector<double> next;
  for (const auto& layer : layers_) {
    next.assign(layer.bias.begin(), layer.bias.end());
    for (std::size_t r = 0; r < layer.out(); ++r) {
      const double* row = &layer.weight.data[r * layer.in()];
      double acc = 0.0;
      for (std::size_t c = 0; c < layer.in(); ++c) acc += row[c] * current[c];
      next[r] += acc;
      if (layer.activation == Activation::kRelu && next[r] < 0.0) next[r] = 0.0;
    }
    current.swap(next);
  }
  return current;
}

ForwardCache DenseNet::forward_cached(std::span<const double> input) const {
  if (input.size() != input_dim()) throw UsageError("DenseNet::forward: input dimension mismatch");
  ForwardCache cache;
  cache.inputs.reserve(layers_.size());
  cache.preactivations.reserve(layers_.size());
  std::vector<double> current(input.begin(), input.end());
  for (const auto& layer : layers_) {
    std::vector<double> pre(layer.bias);
    for (std::size_t r = 0; r < layer.out(); ++r) {
      const double* row = &layer.weight.data[r * layer.in()];
      double acc = 0.0;
      for (std::size_t c = 0; c < layer.in(); ++c) acc += row[c] * current[c];
      pre[r] += acc;
    }
    std::vector<double> post(pre);
    if (layer.activation == Activation::kRelu) {
      for (double& v : post) v = std::max(v, 0.0);
    }
    cache.inputs.push_back(std::move(current));
    cache.preactivations.push_back(std::move(pre));
    current = std::move(post);
  }
  cache.output = std::move(current);
  return cache;
}

BackwardResult DenseNet::backward(const ForwardCache& cache, std::span<const double> output_grad) const {
  if (output_grad.size() != output_dim()) throw UsageError("DenseNet::backward: output gradient mismatch");
  if (cache.inputs.size() != layers_.size()) throw UsageError("DenseNet::backward: stale cache");
  BackwardResult result;
  result.params.resize(2 * layers_.size());
  std::vector<double> grad(output_grad.begin(), output_grad.end());
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const auto& layer = layers_[l];
    const auto& x = cache.inputs[l];
    if (layer.activation == Activation::kRelu) {
      for (std::size_t r = 0; r < grad.size(); ++r) {
        if (cache.preactivations[l][r] <= 0.0) grad[r] = 0.0;
      }
    }
    auto& dw = result.params[2 * l];
    dw.assign(layer.weight.data.size(), 0.0);
    std::vector<double> dx(layer.in(), 0.0);
    for (std::size_t r = 0; r < layer.out(); ++r) {
      const double g = grad[r];
      if (g == 0.0) continue;
      const double* row = &layer.weight.data[r * layer.in()];
      double* drow = &dw[r * layer.in()];
      for (std::size_t c = 0; c < layer.in(); ++c) {
        drow[c] = g * x[c];
        dx[c] += g * row[c];
      }
    }
    result.params[2 * l + 1] = grad;
    grad = std::move(dx);
  }
  result.input_grad = std::move(grad);
  return result;
}

ParameterBlocks DenseNet::parameter_blocks() {
  ParameterBlocks blocks;
  for (auto& layer : layers_) {
    blocks.emplace_back(layer.weight.data);
    blocks.emplace_back(layer.bias);
  }
  return blocks;
}

GradientBlocks DenseNet::zero_gradients() const {
  GradientBlocks grads;
  for (const auto& layer : layers_) {
    grads.emplace_back(layer.weight.data.size(), 0.0);
    grads.emplace_back(layer.bias.size(), 0.0);
  }
  return grads;
}

GradientBlocks zeros_like(const ParameterBlocks& params) {
  GradientBlocks grads;
  grads.reserve(params.size());
  for (const auto& block : params) grads.emplace_back(block.size(), 0.0);
  return grads;
}

void accumulate(GradientBlocks& a, const GradientBlocks& b, double scale) {
  if (a.size() != b.size()) throw UsageError("accumulate: block count mismatch");
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].size() != b[k].size()) throw UsageError("accumulate: block shape mismatch");
    for (std::size_t i = 0; i < a[k].size(); ++i) a[k][i] += scale * b[k][i];
  }
}

double global_norm(const GradientBlocks& grads) {
  double sq = 0.0;
  for (const auto& block : grads) {
    for (double g : block) sq += g * g;
  }
  return std::sqrt(sq);
}

double clip_global_norm(GradientBlocks& grads, double max_norm) {
  if (!(max_norm > 0.0)) throw UsageError("clip_global_norm: max_norm must be > 0");
  const double norm = global_norm(grads);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& block : grads) {
      for (double& g : block) g *= scale;
    }
  }
  return norm;
}

void clip_per_value(GradientBlocks& grads, double max_abs) {
  if (!(max_abs > 0.0)) throw UsageError("clip_per_value: bound must be > 0");
  for (auto& block : grads) {
    for (double& g : block) g = std::clamp(g, -max_abs, max_abs);
  }
}

AdamState::AdamState(AdamConfig config, const ParameterBlocks& shape)
    : config_(config), m_(zeros_like(shape)), v_(zeros_like(shape)) {}

void AdamState::step(const ParameterBlocks& params, const GradientBlocks& grads) {
  check_shapes(params, grads);
  if (params.size() != m_.size()) throw UsageError("AdamState::step: parameter layout changed");
  ++steps_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].size() != m_[k].size()) throw UsageError("AdamState::step: block shape changed");
    for (std::size_t i = 0; i < params[k].size(); ++i) {
      const double g = grads[k][i];
      m_[k][i] = b1 * m_[k][i] + (1.0 - b1) * g;
      v_[k][i] = b2 * v_[k][i] + (1.0 - b2) * g * g;
      const double m_hat = m_[k][i] / correction1;
      const double v_hat = v_[k][i] / correction2;
      params[k][i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

}  // namespace ealm::nn
