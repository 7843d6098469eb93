#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "cgzsl/nn/matrix.hpp"

namespace cgzsl::eval {

using nn::Matrix;

/// Class-balanced accuracy: mean over class_set of (correct / total) within the class.
/// Only rows whose label is in class_set contribute.
double per_class_accuracy(std::span<const int> predicted, std::span<const int> labels,
                          std::span<const int> class_set);

/// 2su/(s+u), 0 when s+u == 0.
double harmonic(double seen, double unseen);

/// Seen/unseen class-balanced accuracy of one task; unseen is absent when the
/// task has no unseen pool.
struct TaskAccuracy {
  double seen = 0.0;
  std::optional<double> unseen;
};

struct Aggregates {
  double mean_seen = 0.0;
  std::optional<double> mean_unseen;
  std::optional<double> mean_harmonic;
};

/// mSA over all T tasks; mUA and mH over the first T-1 tasks (future classes
/// form the unseen pool, so the last task has none).
Aggregates aggregate_static(std::span<const TaskAccuracy> tasks, std::size_t T);

/// mSA, mUA and mean-of-per-task-H over all T tasks.
Aggregates aggregate_dynamic(std::span<const TaskAccuracy> tasks, std::size_t T);

/// acc[t][j] (j <= t) is the accuracy on task j's classes after training task t.
/// Average over j < T of max(0, max_{t in [j, T-1)} acc[t][j] - acc[T-1][j]); 0 when T < 2.
double forgetting(const std::vector<std::vector<double>>& acc);

/// Area under the seen-vs-unseen accuracy curve obtained by subtracting a
/// bias from all seen-class scores and sweeping it over every value that
/// changes a prediction. `column_classes[c]` is the class of score column c.
double ausuc(const Matrix& scores, std::span<const int> column_classes, std::span<const int> labels,
             std::span<const int> seen_classes, std::span<const int> unseen_classes);

double mausuc(std::span<const double> per_task);

/// Top-k (class, cosine) pairs of a probe feature against identifier
/// projections, descending; ties go to the lower class id.
std::vector<std::pair<int, double>> top_k_similar(std::span<const double> probe,
                                                  const Matrix& projections,
                                                  std::span<const int> class_ids, std::size_t k);

}  // namespace cgzsl::eval
