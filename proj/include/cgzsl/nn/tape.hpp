#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "cgzsl/nn/matrix.hpp"

namespace cgzsl::nn {

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  double scalar() const;
};

/// Reverse-mode recorder. Operations append nodes in topological order, so
/// backward is a single reverse sweep.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Matrix& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var parameter(Matrix value);

  /// Records a derived node. `backward` is dropped when no input needs a gradient.
  Var record(Matrix value, std::initializer_list<Var> inputs, BackwardFn backward);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }

  /// Gradient of the last backward() target w.r.t. v; zeros if v was unreached.
  const Matrix& grad(Var v);

  /// Adds `g` into v's gradient buffer (used by backward closures).
  void accumulate(Var v, const Matrix& g);
  Matrix& grad_buffer(Var v);

  /// Runs reverse-mode differentiation from a 1x1 node. Clears previous gradients.
  void backward(Var loss);
  void zero_grad();

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
};

// Differentiable operations. All inputs must live on the same tape.
Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // elementwise
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var add_row(Var m, Var bias);  // bias is 1 x cols, broadcast over rows
Var relu(Var a);
Var leaky_relu(Var a, double slope);
Var square(Var a);
Var log(Var a);
Var clamp(Var a, double lo, double hi);
Var sum(Var a);
Var mean(Var a);
Var hconcat(Var left, Var right);
Var vconcat(Var top, Var bottom);
Var select_rows(Var a, std::span<const std::size_t> rows);
Var gather(Var a, std::span<const std::pair<std::size_t, std::size_t>> cells);  // k x 1
Var rowwise_dot(Var a, Var b);                                                  // m x 1
Var l2_normalize_rows(Var a);
Var cosine_matrix(Var x, Var p);
Var rowwise_cosine(Var x, Var p);  // paired rows, m x 1, clamped to [-1, 1]

/// Mean of -log softmax(temperature * scores)[label] over rows.
Var softmax_cross_entropy(Var scores, std::span<const std::size_t> labels, double temperature);

/// Per-group row means: out row g = mean of rows i with group[i] == g.
Var segment_mean(Var a, std::span<const std::size_t> group, std::size_t num_groups);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(double s, Var a) { return scale(a, s); }

/// Plain (non-recording) loss value, used by tests and inference code.
double softmax_cross_entropy(const Matrix& scores, std::span<const std::size_t> labels,
                             double temperature);

}  // namespace cgzsl::nn
