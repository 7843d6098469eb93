#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "cgzsl/continual/replay.hpp"
#include "cgzsl/losses/losses.hpp"
#include "cgzsl/model/model.hpp"
#include "cgzsl/nn/adam.hpp"

namespace cgzsl::continual {

/// Switches for the ablation modes; everything on is the full method.
struct Ablation {
  bool replay = true;
  bool sal = true;
  bool nuclear = true;
  bool rcl = true;
  bool pcl = true;
  bool snl = true;

  friend bool operator==(const Ablation&, const Ablation&) = default;
};

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 64;
  std::size_t replay_per_class = 100;
  std::size_t generated_per_step = 0;  // per pool for L_pcl / L_snl / L_sal; 0 means batch_size
  losses::LossWeights weights;
  losses::AlignmentConfig alignment;
  nn::AdamOptions optimizer;
  std::uint64_t seed = 0;
  Ablation ablation;

  std::size_t generated_count() const noexcept { return generated_per_step ? generated_per_step : batch_size; }
  void validate() const;  // throws ValidationError
};

/// Real training rows of one task, already restricted to its real classes.
struct TaskData {
  Matrix features;
  std::vector<int> labels;
  std::vector<std::int64_t> source_rows;  // dataset row of each feature
};

/// Mean loss values over the steps of one epoch.
struct EpochLoss {
  double d_total = 0.0;
  double g_total = 0.0;
  double gan_d = 0.0;
  double gan_g = 0.0;
  double rcl = 0.0;
  double snl = 0.0;
  double pcl = 0.0;
  double sal = 0.0;
  double nuclear = 0.0;

  friend bool operator==(const EpochLoss&, const EpochLoss&) = default;
};

/// What went into one gradient step; source row -1 marks replayed rows.
struct BatchRecord {
  std::size_t epoch = 0;
  std::size_t step = 0;
  std::span<const std::int64_t> source_rows;
  std::span<const int> labels;
};
using BatchObserver = std::function<void(const BatchRecord&)>;

/// Optimizer state that persists across tasks.
struct OptimizerState {
  nn::Adam generator;
  nn::Adam discriminator;
};

/// Runs cfg.epochs epochs over data plus replay. Each minibatch performs one
/// discriminator step followed by one generator step. The model must already
/// hold this task's class roles (encountered / seen).
std::vector<EpochLoss> train_task(model::CgzslModel& model, const TaskData& data, const ReplaySet& replay,
                                  const TrainConfig& cfg, OptimizerState& opt, std::mt19937_64& rng,
                                  const BatchObserver& observer = {});

}  // namespace cgzsl::continual
