#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cgzsl/nn/matrix.hpp"

namespace cgzsl::data {

using nn::Matrix;

/// Visual features with labels, per-class attributes and a train/test split.
struct Dataset {
  std::string name = "dataset";
  Matrix features;            // n x d_x
  std::vector<int> labels;    // class id per feature row
  Matrix attributes;          // C x d_a
  std::vector<std::uint32_t> train_idx;
  std::vector<std::uint32_t> test_idx;
  std::vector<std::string> class_names;  // optional; empty or C entries

  std::size_t num_classes() const noexcept { return attributes.rows(); }

  /// Throws ValidationError naming the offending field.
  void validate() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

inline constexpr int kManifestVersion = 1;

/// "CZSL1", u32 rows, u32 cols, rows*cols float64; all little-endian.
void write_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix(const std::filesystem::path& path);

void write_u32_list(const std::filesystem::path& path, const std::vector<std::uint32_t>& values);
std::vector<std::uint32_t> read_u32_list(const std::filesystem::path& path);

/// Writes manifest.json plus the binary blobs into `dir` (created if needed).
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

struct SynthParams {
  std::size_t num_classes = 20;
  std::size_t d_x = 32;
  std::size_t d_a = 16;
  std::size_t per_class = 100;
  double noise_scale = 0.1;
  std::uint64_t seed = 0;
};

/// Attribute-correlated synthetic data: non-negative unit-norm attributes
/// (rectified Gaussian, like real attribute strengths), a fixed random
/// linear map W, class means relu(W a), Gaussian noise clamped at zero, and a
/// seeded per-class 75/25 train/test split.
Dataset synth_dataset(const SynthParams& params);

}  // namespace cgzsl::data
