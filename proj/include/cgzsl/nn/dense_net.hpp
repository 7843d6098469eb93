#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cgzsl/nn/matrix.hpp"
#include "cgzsl/nn/tape.hpp"

namespace cgzsl::nn {

enum class Activation { linear, leaky_relu, relu };

inline constexpr double kLeakySlope = 0.2;

std::string to_string(Activation act);
Activation activation_from_string(const std::string& name);

struct LayerSpec {
  std::size_t in = 0;
  std::size_t out = 0;
  Activation activation = Activation::linear;
};

struct DenseLayer {
  Matrix weight;  // in x out
  Matrix bias;    // 1 x out
  Activation activation = Activation::linear;
};

/// Fully connected feed-forward network: y = act(x W + b) per layer.
class DenseNet {
 public:
  DenseNet() = default;

  /// Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero biases.
  DenseNet(std::span<const LayerSpec> specs, std::mt19937_64& rng);

  /// Adopts explicit layers; checks that dimensions chain.
  explicit DenseNet(std::vector<DenseLayer> layers);

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::vector<LayerSpec> specs() const;

  Matrix forward(const Matrix& x) const;

  /// Registers every weight and bias as a tape parameter, in declaration order
  /// (W0, b0, W1, b1, ...).
  std::vector<Var> bind(Tape& tape) const;

  /// Differentiable forward using parameters previously returned by bind().
  Var forward(Var x, std::span<const Var> params) const;

  /// Mutable views of the parameters, same order as bind().
  std::vector<Matrix*> parameters();
  std::vector<const Matrix*> parameters() const;

  friend bool operator==(const DenseNet& a, const DenseNet& b);

 private:
  std::vector<DenseLayer> layers_;
};

}  // namespace cgzsl::nn
