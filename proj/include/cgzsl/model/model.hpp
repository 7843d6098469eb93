#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <span>
#include <vector>

#include "cgzsl/nn/dense_net.hpp"
#include "cgzsl/nn/matrix.hpp"

namespace cgzsl::model {

using nn::Matrix;

struct ModelConfig {
  std::size_t d_x = 0;
  std::size_t d_a = 0;
  std::size_t d_z = 0;
  std::size_t hidden_g = 0;
  std::size_t hidden_d = 0;
  double temperature = 10.0;  // softmax scale for the training-time classification losses

  /// d_z = d_a, hidden widths = 4 * d_x.
  static ModelConfig with_defaults(std::size_t d_x, std::size_t d_a);
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Cosine-similarity GAN: the generator maps (noise || attribute) to a visual
/// feature, the discriminator maps an attribute to its identifier projection
/// in visual space. Also tracks the classes encountered so far.
class CgzslModel {
 public:
  CgzslModel(ModelConfig config, std::uint64_t seed);
  CgzslModel(ModelConfig config, nn::DenseNet generator, nn::DenseNet discriminator);

  const ModelConfig& config() const noexcept { return config_; }
  nn::DenseNet& generator() noexcept { return generator_; }
  const nn::DenseNet& generator() const noexcept { return generator_; }
  nn::DenseNet& discriminator() noexcept { return discriminator_; }
  const nn::DenseNet& discriminator() const noexcept { return discriminator_; }

  /// Adds a class with its attribute row; a no-op for already known classes
  /// except that seen=true marks it seen. Classes never become unseen again.
  void encounter(int class_id, std::span<const double> attribute, bool seen);
  void mark_seen(int class_id);

  bool knows(int class_id) const { return attr_row_.contains(class_id); }
  bool is_seen(int class_id) const;

  /// All encountered classes in order of first encounter (rows of encountered_attributes()).
  const std::vector<int>& encountered_classes() const noexcept { return encountered_; }
  /// Seen classes in the order they became seen.
  const std::vector<int>& seen_classes() const noexcept { return seen_; }
  std::vector<int> unseen_classes() const;

  const Matrix& encountered_attributes() const noexcept { return attributes_; }
  Matrix attributes_of(std::span<const int> class_ids) const;
  std::size_t position_of(int class_id) const;

 private:
  ModelConfig config_;
  nn::DenseNet generator_;
  nn::DenseNet discriminator_;
  std::vector<int> encountered_;
  std::vector<int> seen_;
  std::map<int, std::size_t> attr_row_;
  Matrix attributes_;
};

/// Generated features for (z_i || a_i); n x d_x, non-negative.
Matrix generate(const CgzslModel& model, const Matrix& z, const Matrix& attrs);

/// Identifier projections, one per attribute row; c x d_x.
Matrix project_attributes(const CgzslModel& model, const Matrix& attrs);

struct Classification {
  std::vector<std::size_t> predicted;  // index into the projection rows
  Matrix scores;                       // m x c cosine similarities
};

/// Nearest-identifier classification by cosine similarity; ties go to the lowest index.
Classification classify(const Matrix& x, const Matrix& projections);

/// i.i.d. standard normal n x d_z.
Matrix sample_noise(std::size_t n, std::size_t d_z, std::mt19937_64& rng);

/// Checkpoint: "CZSM1", one line of JSON header, '\n', then every layer's
/// weights and biases as little-endian float64 in declaration order.
void save_checkpoint(const CgzslModel& model, const std::filesystem::path& path);
CgzslModel load_checkpoint(const std::filesystem::path& path);

}  // namespace cgzsl::model
