#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "cgzsl/continual/schedule.hpp"
#include "cgzsl/continual/trainer.hpp"
#include "cgzsl/data/dataset.hpp"
#include "cgzsl/eval/report.hpp"
#include "cgzsl/model/model.hpp"

namespace cgzsl::continual {

/// Test-set evaluation of a model under the class roles of task t.
struct TaskEvaluation {
  std::vector<int> seen;
  std::vector<int> unseen;
  double seen_acc = 0.0;
  eval::Cell unseen_acc;
  double harmonic = 0.0;
  eval::Cell ausuc;
  std::vector<eval::Cell> seen_row;      // per task j <= t
  std::vector<eval::Cell> unseen_row;
  std::vector<eval::Cell> harmonic_row;
};

/// Classifies every test row of the classes encountered by task t against the
/// projections of all of them. Attributes come from the dataset, so the model
/// only contributes its networks.
TaskEvaluation evaluate_task(const model::CgzslModel& model, const data::Dataset& ds, const TaskSchedule& schedule,
                             std::size_t t);

/// Top-k classes by cosine between a probe feature of `tracked` and the
/// projections of every class encountered by t. Seen classes probe with their
/// mean normalized test feature, unseen ones with the mean of `samples`
/// normalized generated features.
std::vector<std::pair<int, double>> similarity_trace(const model::CgzslModel& model, const data::Dataset& ds,
                                                     const TaskSchedule& schedule, std::size_t t, int tracked,
                                                     std::size_t top_k, std::size_t samples, std::mt19937_64& rng);

/// Called for every training batch with the 1-based task index.
using TaskBatchObserver = std::function<void(std::size_t t, const BatchRecord&)>;

struct ExperimentOptions {
  std::optional<int> trace_class;  // default: lowest-id unseen class of task 1
  std::size_t trace_top_k = 3;
  std::size_t probe_samples = 100;
  TaskBatchObserver observer;
};

struct ExperimentResult {
  eval::ExperimentReport report;
  model::CgzslModel model;
};

/// Training rows of task t: train_idx rows whose class has real data at t.
TaskData task_data(const data::Dataset& ds, const TaskSchedule& schedule, std::size_t t);

/// For t = 1..T: replay (t > 1), reveal the task's classes, train, evaluate
/// every pool seen so far. The report's config field is left empty.
ExperimentResult run_experiment(const data::Dataset& ds, const TaskSchedule& schedule,
                                const model::ModelConfig& model_config, const TrainConfig& cfg,
                                const ExperimentOptions& options = {});

}  // namespace cgzsl::continual
