#include "cgzsl/nn/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cgzsl/errors.hpp"

namespace cgzsl::nn {

const Matrix& Var::value() const { return tape->value(*this); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw ContractError("Var::scalar on non-scalar node");
  return v(0, 0);
}

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, false, {}});
  return Var{this, nodes_.size() - 1};
}

Var Tape::parameter(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, true, {}});
  return Var{this, nodes_.size() - 1};
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, BackwardFn backward) {
  bool needs = false;
  for (Var in : inputs) {
    if (in.tape != this) throw ContractError("operation mixes nodes from different tapes");
    needs = needs || nodes_[in.id].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, needs, needs ? std::move(backward) : BackwardFn{}});
  return Var{this, nodes_.size() - 1};
}

Matrix& Tape::grad_buffer(Var v) {
  Node& n = nodes_[v.id];
  if (n.grad.rows() != n.value.rows() || n.grad.cols() != n.value.cols()) {
    n.grad = Matrix(n.value.rows(), n.value.cols());
  }
  return n.grad;
}

const Matrix& Tape::grad(Var v) { return grad_buffer(v); }

void Tape::accumulate(Var v, const Matrix& g) {
  if (!nodes_[v.id].requires_grad) return;
  grad_buffer(v) += g;
}

void Tape::zero_grad() {
  for (Node& n : nodes_) n.grad = Matrix();
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw ContractError("backward: loss belongs to another tape");
  const Matrix& lv = nodes_[loss.id].value;
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ContractError("backward: loss must be a scalar node, got " +
                        std::to_string(lv.rows()) + "x" + std::to_string(lv.cols()));
  }
  zero_grad();
  grad_buffer(loss)(0, 0) = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward || n.grad.empty()) continue;
    n.backward(*this, n.grad);
  }
}

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
  }
}

template <class F>
Matrix map(const Matrix& a, F f) {
  Matrix out = a;
  for (double& v : out.values()) v = f(v);
  return out;
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = *a.tape;
  return t.record(matmul(a.value(), b.value()), {a, b}, [a, b](Tape& tp, const Matrix& g) {
    if (tp.requires_grad(a)) tp.accumulate(a, matmul(g, transpose(b.value())));
    if (tp.requires_grad(b)) tp.accumulate(b, matmul(transpose(a.value()), g));
  });
}

Var transpose(Var a) {
  return a.tape->record(transpose(a.value()), {a}, [a](Tape& tp, const Matrix& g) {
    tp.accumulate(a, transpose(g));
  });
}

Var add(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  Matrix out = a.value();
  out += b.value();
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape& tp, const Matrix& g) {
    tp.accumulate(a, g);
    tp.accumulate(b, g);
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "sub");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] -= b.value().values()[i];
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape& tp, const Matrix& g) {
    tp.accumulate(a, g);
    Matrix neg = g;
    neg *= -1.0;
    tp.accumulate(b, neg);
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "mul");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] *= b.value().values()[i];
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape& tp, const Matrix& g) {
    Matrix ga = g, gb = g;
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga.values()[i] *= b.value().values()[i];
      gb.values()[i] *= a.value().values()[i];
    }
    tp.accumulate(a, ga);
    tp.accumulate(b, gb);
  });
}

Var scale(Var a, double s) {
  Matrix out = a.value();
  out *= s;
  return a.tape->record(std::move(out), {a}, [a, s](Tape& tp, const Matrix& g) {
    Matrix ga = g;
    ga *= s;
    tp.accumulate(a, ga);
  });
}

Var add_scalar(Var a, double s) {
  return a.tape->record(map(a.value(), [s](double v) { return v + s; }), {a},
                        [a](Tape& tp, const Matrix& g) { tp.accumulate(a, g); });
}

Var add_row(Var m, Var bias) {
  const Matrix& mv = m.value();
  const Matrix& bv = bias.value();
  if (bv.rows() != 1 || bv.cols() != mv.cols()) throw ShapeError("add_row: bias shape mismatch");
  Matrix out = mv;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += bv(0, j);
  return m.tape->record(std::move(out), {m, bias}, [m, bias](Tape& tp, const Matrix& g) {
    tp.accumulate(m, g);
    if (tp.requires_grad(bias)) {
      Matrix gb(1, g.cols());
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) gb(0, j) += g(i, j);
      tp.accumulate(bias, gb);
    }
  });
}

Var leaky_relu(Var a, double slope) {
  return a.tape->record(map(a.value(), [slope](double v) { return v > 0.0 ? v : slope * v; }),
                        {a}, [a, slope](Tape& tp, const Matrix& g) {
                          Matrix ga = g;
                          const auto x = a.value().values();
                          for (std::size_t i = 0; i < ga.size(); ++i)
                            if (x[i] <= 0.0) ga.values()[i] *= slope;
                          tp.accumulate(a, ga);
                        });
}

Var relu(Var a) { return leaky_relu(a, 0.0); }

Var square(Var a) {
  return a.tape->record(map(a.value(), [](double v) { return v * v; }), {a},
                        [a](Tape& tp, const Matrix& g) {
                          Matrix ga = g;
                          const auto x = a.value().values();
                          for (std::size_t i = 0; i < ga.size(); ++i) ga.values()[i] *= 2.0 * x[i];
                          tp.accumulate(a, ga);
                        });
}

Var log(Var a) {
  return a.tape->record(map(a.value(), [](double v) { return std::log(v); }), {a},
                        [a](Tape& tp, const Matrix& g) {
                          Matrix ga = g;
                          const auto x = a.value().values();
                          for (std::size_t i = 0; i < ga.size(); ++i) ga.values()[i] /= x[i];
                          tp.accumulate(a, ga);
                        });
}

Var clamp(Var a, double lo, double hi) {
  return a.tape->record(map(a.value(), [lo, hi](double v) { return std::clamp(v, lo, hi); }),
                        {a}, [a, lo, hi](Tape& tp, const Matrix& g) {
                          Matrix ga = g;
                          const auto x = a.value().values();
                          for (std::size_t i = 0; i < ga.size(); ++i)
                            if (x[i] < lo || x[i] > hi) ga.values()[i] = 0.0;
                          tp.accumulate(a, ga);
                        });
}

Var sum(Var a) {
  double total = 0.0;
  for (double v : a.value().values()) total += v;
  return a.tape->record(Matrix(1, 1, total), {a}, [a](Tape& tp, const Matrix& g) {
    tp.accumulate(a, Matrix(a.rows(), a.cols(), g(0, 0)));
  });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw ContractError("mean of an empty matrix");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var hconcat(Var left, Var right) {
  return left.tape->record(hconcat(left.value(), right.value()), {left, right},
                           [left, right](Tape& tp, const Matrix& g) {
                             const std::size_t lc = left.cols();
                             Matrix gl(g.rows(), lc), gr(g.rows(), g.cols() - lc);
                             for (std::size_t i = 0; i < g.rows(); ++i) {
                               for (std::size_t j = 0; j < lc; ++j) gl(i, j) = g(i, j);
                               for (std::size_t j = lc; j < g.cols(); ++j) gr(i, j - lc) = g(i, j);
                             }
                             tp.accumulate(left, gl);
                             tp.accumulate(right, gr);
                           });
}

Var vconcat(Var top, Var bottom) {
  if (top.cols() != bottom.cols() && top.rows() != 0 && bottom.rows() != 0) {
    throw ShapeError("vconcat: column mismatch");
  }
  return top.tape->record(vconcat(top.value(), bottom.value()), {top, bottom},
                          [top, bottom](Tape& tp, const Matrix& g) {
                            const std::size_t tr = top.rows();
                            Matrix gt(tr, g.cols()), gb(g.rows() - tr, g.cols());
                            for (std::size_t i = 0; i < g.rows(); ++i)
                              for (std::size_t j = 0; j < g.cols(); ++j)
                                (i < tr ? gt(i, j) : gb(i - tr, j)) = g(i, j);
                            if (top.rows() > 0) tp.accumulate(top, gt);
                            if (bottom.rows() > 0) tp.accumulate(bottom, gb);
                          });
}

Var select_rows(Var a, std::span<const std::size_t> rows) {
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return a.tape->record(select_rows(a.value(), rows), {a},
                        [a, idx = std::move(idx)](Tape& tp, const Matrix& g) {
                          Matrix& ga = tp.grad_buffer(a);
                          for (std::size_t i = 0; i < idx.size(); ++i)
                            for (std::size_t j = 0; j < g.cols(); ++j) ga(idx[i], j) += g(i, j);
                        });
}

Var gather(Var a, std::span<const std::pair<std::size_t, std::size_t>> cells) {
  std::vector<std::pair<std::size_t, std::size_t>> idx(cells.begin(), cells.end());
  Matrix out(idx.size(), 1);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const auto [r, c] = idx[k];
    if (r >= a.rows() || c >= a.cols()) throw IndexError("gather: cell out of range");
    out(k, 0) = a.value()(r, c);
  }
  return a.tape->record(std::move(out), {a}, [a, idx = std::move(idx)](Tape& tp, const Matrix& g) {
    Matrix& ga = tp.grad_buffer(a);
    for (std::size_t k = 0; k < idx.size(); ++k) ga(idx[k].first, idx[k].second) += g(k, 0);
  });
}

Var rowwise_dot(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "rowwise_dot");
  Matrix out(a.rows(), 1);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) d += a.value()(i, j) * b.value()(i, j);
    out(i, 0) = d;
  }
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape& tp, const Matrix& g) {
    Matrix ga(a.rows(), a.cols()), gb(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
      for (std::size_t j = 0; j < a.cols(); ++j) {
        ga(i, j) = g(i, 0) * b.value()(i, j);
        gb(i, j) = g(i, 0) * a.value()(i, j);
      }
    tp.accumulate(a, ga);
    tp.accumulate(b, gb);
  });
}

Var l2_normalize_rows(Var a) {
  const Matrix& x = a.value();
  std::vector<double> norms(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double sq = 0.0;
    for (double v : x.row(i)) sq += v * v;
    norms[i] = std::sqrt(sq);
  }
  Matrix y = l2_normalize_rows(x);
  return a.tape->record(std::move(y), {a}, [a, norms = std::move(norms)](Tape& tp, const Matrix& g) {
    // d/dx (x/|x|) applied to g: (g - y (y.g)) / |x|
    const Matrix& x = a.value();
    Matrix ga = g;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      if (norms[i] < kNormGuard) continue;
      double yg = 0.0;
      for (std::size_t j = 0; j < x.cols(); ++j) yg += x(i, j) / norms[i] * g(i, j);
      for (std::size_t j = 0; j < x.cols(); ++j)
        ga(i, j) = (g(i, j) - x(i, j) / norms[i] * yg) / norms[i];
    }
    tp.accumulate(a, ga);
  });
}

Var cosine_matrix(Var x, Var p) {
  if (x.cols() != p.cols()) throw ShapeError("cosine_matrix: feature dimension mismatch");
  return clamp(matmul(l2_normalize_rows(x), transpose(l2_normalize_rows(p))), -1.0, 1.0);
}

Var rowwise_cosine(Var x, Var p) {
  if (!x.value().same_shape(p.value())) throw ShapeError("rowwise_cosine: shape mismatch");
  return clamp(rowwise_dot(l2_normalize_rows(x), l2_normalize_rows(p)), -1.0, 1.0);
}

namespace {

// Row-wise softmax of temperature*scores plus the mean NLL.
double softmax_rows(const Matrix& scores, std::span<const std::size_t> labels, double temperature,
                    Matrix* probs) {
  if (!(temperature > 0.0)) throw ContractError("softmax_cross_entropy: temperature must be > 0");
  if (labels.size() != scores.rows()) throw ShapeError("softmax_cross_entropy: label count");
  if (scores.rows() == 0) throw ContractError("softmax_cross_entropy: empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    if (labels[i] >= scores.cols()) {
      throw IndexError("softmax_cross_entropy: label " + std::to_string(labels[i]) +
                       " out of range for " + std::to_string(scores.cols()) + " classes");
    }
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : scores.row(i)) mx = std::max(mx, temperature * v);
    double z = 0.0;
    for (double v : scores.row(i)) z += std::exp(temperature * v - mx);
    const double log_z = mx + std::log(z);
    total += log_z - temperature * scores(i, labels[i]);
    if (probs) {
      for (std::size_t j = 0; j < scores.cols(); ++j)
        (*probs)(i, j) = std::exp(temperature * scores(i, j) - log_z);
    }
  }
  return total / static_cast<double>(scores.rows());
}

}  // namespace

double softmax_cross_entropy(const Matrix& scores, std::span<const std::size_t> labels,
                             double temperature) {
  return softmax_rows(scores, labels, temperature, nullptr);
}

Var softmax_cross_entropy(Var scores, std::span<const std::size_t> labels, double temperature) {
  Matrix probs(scores.rows(), scores.cols());
  const double loss = softmax_rows(scores.value(), labels, temperature, &probs);
  std::vector<std::size_t> lab(labels.begin(), labels.end());
  return scores.tape->record(
      Matrix(1, 1, loss), {scores},
      [scores, temperature, probs = std::move(probs), lab = std::move(lab)](Tape& tp,
                                                                            const Matrix& g) {
        const double coef = g(0, 0) * temperature / static_cast<double>(lab.size());
        Matrix gs = probs;
        for (std::size_t i = 0; i < lab.size(); ++i) gs(i, lab[i]) -= 1.0;
        gs *= coef;
        tp.accumulate(scores, gs);
      });
}

Var segment_mean(Var a, std::span<const std::size_t> group, std::size_t num_groups) {
  const Matrix& x = a.value();
  if (group.size() != x.rows()) throw ShapeError("segment_mean: group count mismatch");
  std::vector<double> counts(num_groups, 0.0);
  Matrix out(num_groups, x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    if (group[i] >= num_groups) throw IndexError("segment_mean: group index out of range");
    counts[group[i]] += 1.0;
    for (std::size_t j = 0; j < x.cols(); ++j) out(group[i], j) += x(i, j);
  }
  for (std::size_t gi = 0; gi < num_groups; ++gi) {
    if (counts[gi] == 0.0) throw ContractError("segment_mean: group without rows");
    for (double& v : out.row(gi)) v /= counts[gi];
  }
  std::vector<std::size_t> grp(group.begin(), group.end());
  return a.tape->record(std::move(out), {a},
                        [a, grp = std::move(grp), counts = std::move(counts)](Tape& tp,
                                                                             const Matrix& g) {
                          Matrix& ga = tp.grad_buffer(a);
                          for (std::size_t i = 0; i < grp.size(); ++i)
                            for (std::size_t j = 0; j < g.cols(); ++j)
                              ga(i, j) += g(grp[i], j) / counts[grp[i]];
                        });
}

}  // namespace cgzsl::nn
