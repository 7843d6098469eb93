#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>

#include "cgzsl/continual/trainer.hpp"
#include "cgzsl/model/model.hpp"
#include "json.hpp"

namespace cgzsl::cli {

/// Everything a training run needs besides data and schedule. Model widths of
/// 0 mean "derive from the dataset" (see ModelConfig::with_defaults).
struct RunConfig {
  std::uint64_t seed = 0;
  std::size_t d_z = 0;
  std::size_t hidden_g = 0;
  std::size_t hidden_d = 0;
  double temperature = 10.0;
  continual::TrainConfig train;
  std::optional<int> trace_class;
  std::size_t trace_top_k = 3;

  /// Fills dataset-dependent model fields.
  model::ModelConfig model_config(std::size_t d_x, std::size_t d_a) const;
  /// Copies seed into train.seed and checks every field.
  void finalize();
};

/// Sections: seed, model, train, weights, alignment, optimizer, ablation,
/// trace. Absent keys keep their defaults; unknown keys throw ValidationError.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

/// Resolved configuration as echoed into reports.
nlohmann::ordered_json run_config_to_json(const RunConfig& cfg, const model::ModelConfig& model);

/// Maps an --ablate name onto the flag set: replay, sal, nuclear, rcl, pcl,
/// snl, or alignment (sal and nuclear together).
void apply_ablation(continual::Ablation& ablation, std::string_view name);

}  // namespace cgzsl::cli
