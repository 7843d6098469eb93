#include "cgzsl/losses/losses.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <utility>

namespace cgzsl::losses {

void LossWeights::validate() const {
  for (double w : {gan, classification, seen_normalized, alignment}) {
    if (!std::isfinite(w) || w < 0.0) throw ValidationError("loss weights must be finite and >= 0");
  }
}

namespace {

// m(s) = (1 + s) / 2, clamped into the open unit interval.
Var to_probability(Var s) {
  return nn::clamp(nn::add_scalar(nn::scale(s, 0.5), 0.5), kProbFloor, kProbCeil);
}

}  // namespace

GanLoss gan_loss(Var real_x, Var real_proj, Var fake_x, Var fake_proj) {
  if (real_x.rows() == 0 || fake_x.rows() == 0) throw ContractError("gan_loss: empty batch");
  const Var p_real = to_probability(nn::rowwise_cosine(real_x, real_proj));
  const Var p_fake = to_probability(nn::rowwise_cosine(fake_x, fake_proj));
  // log(1 - p) = log(p') with p' = 1 - p; 1 - p stays inside the clamp range.
  const Var one_minus_fake = nn::add_scalar(nn::scale(p_fake, -1.0), 1.0);
  const Var d = nn::scale(nn::add(nn::mean(nn::log(p_real)), nn::mean(nn::log(one_minus_fake))), -1.0);
  const Var g = nn::scale(nn::mean(nn::log(p_fake)), -1.0);
  return {d, g};
}

Var classification_loss(Var features, std::span<const std::size_t> labels, Var projections,
                        double temperature) {
  for (std::size_t l : labels) {
    if (l >= projections.rows()) {
      throw IndexError("classification_loss: label " + std::to_string(l) + " has no projection");
    }
  }
  return nn::softmax_cross_entropy(nn::cosine_matrix(features, projections), labels, temperature);
}

Matrix class_means(const Matrix& features, std::span<const int> labels,
                   std::span<const int> class_set) {
  if (labels.size() != features.rows()) throw ShapeError("class_means: label count mismatch");
  std::map<int, std::size_t> slot;
  for (std::size_t k = 0; k < class_set.size(); ++k) slot[class_set[k]] = k;
  Matrix sums(class_set.size(), features.cols());
  std::vector<std::size_t> counts(class_set.size(), 0);
  for (std::size_t i = 0; i < features.rows(); ++i) {
    const auto it = slot.find(labels[i]);
    if (it == slot.end()) continue;
    ++counts[it->second];
    auto dst = sums.row(it->second);
    const auto src = features.row(i);
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
  }
  for (std::size_t k = 0; k < class_set.size(); ++k) {
    if (counts[k] == 0) {
      throw ContractError("class_means: class " + std::to_string(class_set[k]) + " has no rows");
    }
    for (double& v : sums.row(k)) v /= static_cast<double>(counts[k]);
  }
  return sums;
}

Neighborhoods semantic_neighbors(const Matrix& attributes, std::size_t n_c) {
  const std::size_t n = attributes.rows();
  if (n_c == 0 || n_c >= n) {
    throw ContractError("semantic_neighbors: need 1 <= n_c < N (n_c=" + std::to_string(n_c) +
                        ", N=" + std::to_string(n) + ")");
  }
  Neighborhoods out{nn::cosine_matrix(attributes, attributes), {}};
  out.sets.resize(n);
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < n; ++i) {
    order.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) order.push_back(j);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return out.similarity(i, a) > out.similarity(i, b);
    });
    out.sets[i].assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_c));
  }
  return out;
}

Var semantic_alignment_loss(Var generated_means, const Matrix& reference_means,
                            const Neighborhoods& neighbors, const AlignmentConfig& cfg) {
  const std::size_t n = generated_means.rows();
  if (n == 0) throw ContractError("semantic_alignment_loss: no classes");
  if (neighbors.sets.size() != n || neighbors.similarity.rows() != n) {
    throw ContractError("semantic_alignment_loss: generated mean missing for some class");
  }
  if (!reference_means.same_shape(generated_means.value())) {
    throw ShapeError("semantic_alignment_loss: reference means shape");
  }
  nn::Tape& tape = *generated_means.tape;
  // visual[i][j] = cos(generated_i, reference_j)
  const Var visual = nn::cosine_matrix(generated_means, tape.constant(reference_means));

  std::vector<std::pair<std::size_t, std::size_t>> cells;
  std::vector<double> hi, lo;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : neighbors.sets[i]) {
      cells.emplace_back(i, j);
      const double tau = neighbors.similarity(j, i);
      hi.push_back(tau + cfg.epsilon);
      lo.push_back(tau - cfg.epsilon);
    }
  }
  if (cells.empty()) return tape.constant(Matrix(1, 1, 0.0));
  const Var x = nn::gather(visual, cells);
  const Var hi_v = tape.constant(Matrix(hi.size(), 1, hi));
  const Var lo_v = tape.constant(Matrix(lo.size(), 1, lo));
  const Var above = nn::square(nn::relu(nn::sub(x, hi_v)));
  const Var below = nn::square(nn::relu(nn::sub(lo_v, x)));
  return nn::scale(nn::sum(nn::add(above, below)), 1.0 / static_cast<double>(n));
}

Var nuclear_loss(const Matrix& real_means, Var projections) {
  if (real_means.rows() == 0) throw ContractError("nuclear_loss: empty class set");
  if (!real_means.same_shape(projections.value())) throw ShapeError("nuclear_loss: shape mismatch");
  nn::Tape& tape = *projections.tape;
  const Var diff = nn::sub(tape.constant(real_means), projections);
  return nn::scale(nn::sum(nn::square(diff)), 1.0 / static_cast<double>(real_means.rows()));
}

}  // namespace cgzsl::losses
