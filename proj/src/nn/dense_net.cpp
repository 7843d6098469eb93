#include "cgzsl/nn/dense_net.hpp"

#include <cmath>

#include "cgzsl/errors.hpp"

namespace cgzsl::nn {

std::string to_string(Activation act) {
  switch (act) {
    case Activation::linear: return "linear";
    case Activation::leaky_relu: return "leaky-relu";
    case Activation::relu: return "relu";
  }
  return "linear";
}

Activation activation_from_string(const std::string& name) {
  if (name == "linear") return Activation::linear;
  if (name == "leaky-relu") return Activation::leaky_relu;
  if (name == "relu") return Activation::relu;
  throw FormatError("unknown activation tag '" + name + "'");
}

namespace {

void apply_activation(Matrix& m, Activation act) {
  if (act == Activation::linear) return;
  const double slope = act == Activation::relu ? 0.0 : kLeakySlope;
  for (double& v : m.values())
    if (v <= 0.0) v *= slope;
}

void check_chain(const std::vector<DenseLayer>& layers) {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const DenseLayer& l = layers[i];
    if (l.bias.rows() != 1 || l.bias.cols() != l.weight.cols()) {
      throw ShapeError("layer " + std::to_string(i) + ": bias does not match weight columns");
    }
    if (i > 0 && layers[i - 1].weight.cols() != l.weight.rows()) {
      throw ShapeError("layer " + std::to_string(i) + ": input dim does not chain");
    }
  }
}

}  // namespace

DenseNet::DenseNet(std::span<const LayerSpec> specs, std::mt19937_64& rng) {
  for (const LayerSpec& s : specs) {
    if (s.in == 0 || s.out == 0) throw ContractError("DenseNet: zero-width layer");
    const double limit = std::sqrt(6.0 / static_cast<double>(s.in + s.out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    DenseLayer layer{Matrix(s.in, s.out), Matrix(1, s.out), s.activation};
    for (double& w : layer.weight.values()) w = dist(rng);
    layers_.push_back(std::move(layer));
  }
  check_chain(layers_);
}

DenseNet::DenseNet(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  check_chain(layers_);
}

std::size_t DenseNet::input_dim() const {
  return layers_.empty() ? 0 : layers_.front().weight.rows();
}

std::size_t DenseNet::output_dim() const {
  return layers_.empty() ? 0 : layers_.back().weight.cols();
}

std::vector<LayerSpec> DenseNet::specs() const {
  std::vector<LayerSpec> out;
  for (const auto& l : layers_) out.push_back({l.weight.rows(), l.weight.cols(), l.activation});
  return out;
}

Matrix DenseNet::forward(const Matrix& x) const {
  if (x.cols() != input_dim()) {
    throw ShapeError("DenseNet::forward: input has " + std::to_string(x.cols()) +
                     " columns, expected " + std::to_string(input_dim()));
  }
  Matrix h = x;
  for (const DenseLayer& l : layers_) {
    h = matmul(h, l.weight);
    for (std::size_t i = 0; i < h.rows(); ++i)
      for (std::size_t j = 0; j < h.cols(); ++j) h(i, j) += l.bias(0, j);
    apply_activation(h, l.activation);
  }
  return h;
}

std::vector<Var> DenseNet::bind(Tape& tape) const {
  std::vector<Var> params;
  params.reserve(layers_.size() * 2);
  for (const DenseLayer& l : layers_) {
    params.push_back(tape.parameter(l.weight));
    params.push_back(tape.parameter(l.bias));
  }
  return params;
}

Var DenseNet::forward(Var x, std::span<const Var> params) const {
  if (params.size() != layers_.size() * 2) throw ContractError("DenseNet: parameter count");
  if (x.cols() != input_dim()) throw ShapeError("DenseNet::forward: input dimension mismatch");
  Var h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = add_row(matmul(h, params[2 * i]), params[2 * i + 1]);
    switch (layers_[i].activation) {
      case Activation::linear: break;
      case Activation::leaky_relu: h = leaky_relu(h, kLeakySlope); break;
      case Activation::relu: h = relu(h); break;
    }
  }
  return h;
}

std::vector<Matrix*> DenseNet::parameters() {
  std::vector<Matrix*> out;
  for (DenseLayer& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const Matrix*> DenseNet::parameters() const {
  std::vector<const Matrix*> out;
  for (const DenseLayer& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

bool operator==(const DenseNet& a, const DenseNet& b) {
  if (a.layers_.size() != b.layers_.size()) return false;
  for (std::size_t i = 0; i < a.layers_.size(); ++i) {
    const auto& la = a.layers_[i];
    const auto& lb = b.layers_[i];
    if (la.activation != lb.activation || !(la.weight == lb.weight) || !(la.bias == lb.bias))
      return false;
  }
  return true;
}

}  // namespace cgzsl::nn
