#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ealm/random.hpp"

namespace ealm::nn {

enum class Activation { kIdentity, kRelu };

/// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// y = act(W x + b), W is out x in.
struct DenseLayer {
  Matrix weight;
  std::vector<double> bias;
  Activation activation = Activation::kIdentity;

  std::size_t in() const { return weight.cols; }
  std::size_t out() const { return weight.rows; }
};

/// Gradients (or any per-parameter quantity) grouped in the same blocks as
/// the parameters they belong to.
using GradientBlocks = std::vector<std::vector<double>>;
using ParameterBlocks = std::vector<std::span<double>>;

struct ForwardCache {
  std::vector<std::vector<double>> inputs;          // input to each layer
  std::vector<std::vector<double>> preactivations;  // W x + b for each layer
  std::vector<double> output;
};

struct BackwardResult {
  GradientBlocks params;  // weight, bias per layer
  std::vector<double> input_grad;
};

class DenseNet {
 public:
  DenseNet() = default;
  /// Throws UsageError if consecutive layer shapes do not chain.
  explicit DenseNet(std::vector<DenseLayer> layers);

  /// Glorot-uniform weights, zero biases. dims = {in, hidden..., out}.
  static DenseNet glorot(std::span<const std::size_t> dims, Activation hidden, Activation output,
                         Rng& rng);
  static DenseNet zeros(std::span<const std::size_t> dims, Activation hidden, Activation output);

  std::size_t input_dim() const { return layers_.empty() ? 0 : layers_.front().in(); }
  std::size_t output_dim() const { return layers_.empty() ? 0 : layers_.back().out(); }
  std::size_t parameter_count() const;

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  std::vector<double> forward(std::span<const double> input) const;
  ForwardCache forward_cached(std::span<const double> input) const;

  /// Exact reverse-mode gradients of <output_grad, forward(input)>.
  BackwardResult backward(const ForwardCache& cache, std::span<const double> output_grad) const;
  BackwardResult backward(std::span<const double> input, std::span<const double> output_grad) const {
    return backward(forward_cached(input), output_grad);
  }

  /// Weight then bias for each layer.
  ParameterBlocks parameter_blocks();
  GradientBlocks zero_gradients() const;

 private:
  std::vector<DenseLayer> layers_;
};

/// Block-shaped zero gradients matching the given parameters.
GradientBlocks zeros_like(const ParameterBlocks& params);

/// a += scale * b, block by block.
void accumulate(GradientBlocks& a, const GradientBlocks& b, double scale = 1.0);

double global_norm(const GradientBlocks& grads);

/// Rescales all blocks by max_norm / norm when the global L2 norm exceeds
/// max_norm. Returns the norm before clipping.
double clip_global_norm(GradientBlocks& grads, double max_norm);

/// Clamps each entry to [-max_abs, max_abs].
void clip_per_value(GradientBlocks& grads, double max_abs);

enum class ClipMode { kGlobalNorm, kPerValue };

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction over a fixed set of parameter blocks.
class AdamState {
 public:
  AdamState() = default;
  AdamState(AdamConfig config, const ParameterBlocks& shape);

  /// One update; shapes of params and grads must match the construction shape.
  void step(const ParameterBlocks& params, const GradientBlocks& grads);

  long long steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }
  const GradientBlocks& first_moment() const { return m_; }
  const GradientBlocks& second_moment() const { return v_; }

 private:
  AdamConfig config_;
  GradientBlocks m_;
  GradientBlocks v_;
  long long steps_ = 0;
};

}  // namespace ealm::nn
