#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cgzsl/errors.hpp"
#include "cgzsl/nn/matrix.hpp"
#include "cgzsl/nn/tape.hpp"

namespace cgzsl::losses {

using nn::Matrix;
using nn::Var;

struct LossWeights {
  double gan = 1.0;             // lambda1
  double classification = 1.0;  // lambda2 (L_rcl on D, L_pcl on G)
  double seen_normalized = 1.0;  // lambda3 (L_snl)
  double alignment = 1.0;       // lambda4 (L_iba = L_sal + L_nuclear)

  void validate() const;
};

struct AlignmentConfig {
  double epsilon = 0.1;      // half-width of the similarity band
  std::size_t neighbors = 3;  // n_c
};

/// Clamp bounds of the affine cosine-to-probability map m(s) = (1 + s) / 2.
inline constexpr double kProbFloor = 1e-7;
inline constexpr double kProbCeil = 1.0 - 1e-7;

struct GanLoss {
  Var d_loss;
  Var g_loss;
};

/// Adversarial loss over cosine similarities. Row i of each feature matrix is
/// paired with row i of its projection matrix (the projection of its class).
///   d = -mean log m(s_real) - mean log(1 - m(s_fake)),  g = -mean log m(s_fake)
GanLoss gan_loss(Var real_x, Var real_proj, Var fake_x, Var fake_proj);

/// Softmax cross-entropy over the cosine similarity between each feature and
/// every projection row. `labels` index projection rows.
Var classification_loss(Var features, std::span<const std::size_t> labels, Var projections,
                        double temperature);

/// Per-class arithmetic means; out row k belongs to class_set[k].
Matrix class_means(const Matrix& features, std::span<const int> labels,
                   std::span<const int> class_set);

struct Neighborhoods {
  Matrix similarity;                           // N x N attribute cosine
  std::vector<std::vector<std::size_t>> sets;  // n_c nearest other classes per class
};

/// For each class, the n_c other classes with the highest attribute cosine
/// (self excluded, ties toward the lower index).
Neighborhoods semantic_neighbors(const Matrix& attributes, std::size_t n_c);

/// (1/N) sum_i sum_{j in I_i} [max(0, X - (tau + eps))^2 + max(0, (tau - eps) - X)^2]
/// with X = cos(reference_means_j, generated_means_i), tau = attribute cosine.
/// Reference means are constants; gradients reach only the generated means.
Var semantic_alignment_loss(Var generated_means, const Matrix& reference_means,
                            const Neighborhoods& neighbors, const AlignmentConfig& cfg);

/// Mean over classes of ||real_mean_k - projection_k||^2.
Var nuclear_loss(const Matrix& real_means, Var projections);

template <class T>
struct DiscriminatorParts {
  T gan;
  T rcl;
  T snl;
};

template <class T>
struct GeneratorParts {
  T gan;
  T pcl;
  T iba;
};

namespace detail {
inline void check_finite(double v, const char* name) {
  if (!std::isfinite(v)) throw NumericError(name);
}
inline void check_finite(Var v, const char* name) { check_finite(v.scalar(), name); }
}  // namespace detail

/// lambda1 * L_GAN + lambda2 * L_rcl + lambda3 * L_snl. Works on doubles or tape nodes.
template <class T>
T total_d_loss(const DiscriminatorParts<T>& p, const LossWeights& w) {
  detail::check_finite(p.gan, "L_GAN");
  detail::check_finite(p.rcl, "L_rcl");
  detail::check_finite(p.snl, "L_snl");
  return w.gan * p.gan + w.classification * p.rcl + w.seen_normalized * p.snl;
}

/// lambda1 * L_GAN + lambda2 * L_pcl + lambda4 * L_iba.
template <class T>
T total_g_loss(const GeneratorParts<T>& p, const LossWeights& w) {
  detail::check_finite(p.gan, "L_GAN");
  detail::check_finite(p.pcl, "L_pcl");
  detail::check_finite(p.iba, "L_iba");
  return w.gan * p.gan + w.classification * p.pcl + w.alignment * p.iba;
}

}  // namespace cgzsl::losses
