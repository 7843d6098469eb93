#include "cgzsl/eval/metrics.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <string>

#include "cgzsl/errors.hpp"

namespace cgzsl::eval {

double per_class_accuracy(std::span<const int> predicted, std::span<const int> labels,
                          std::span<const int> class_set) {
  if (predicted.size() != labels.size()) throw ShapeError("per_class_accuracy: length mismatch");
  if (class_set.empty()) throw ContractError("per_class_accuracy: empty class set");
  std::map<int, std::pair<std::size_t, std::size_t>> tally;  // class -> (correct, total)
  for (int c : class_set) tally[c] = {0, 0};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto it = tally.find(labels[i]);
    if (it == tally.end()) continue;
    ++it->second.second;
    if (predicted[i] == labels[i]) ++it->second.first;
  }
  double acc = 0.0;
  for (const auto& [c, ct] : tally) {
    if (ct.second == 0) throw ContractError("per_class_accuracy: class " + std::to_string(c) + " has no rows");
    acc += static_cast<double>(ct.first) / static_cast<double>(ct.second);
  }
  return acc / static_cast<double>(tally.size());
}

double harmonic(double seen, double unseen) {
  const double s = seen + unseen;
  return s == 0.0 ? 0.0 : 2.0 * seen * unseen / s;
}

namespace {

constexpr double kBreakpointTolerance = 1e-12;

void check_T(std::span<const TaskAccuracy> tasks, std::size_t T) {
  if (T == 0) throw ContractError("aggregate: T must be >= 1");
  if (tasks.size() < T) throw ContractError("aggregate: fewer task evaluations than T");
}

double unseen_of(const TaskAccuracy& t, std::size_t index) {
  if (!t.unseen) throw ContractError("aggregate: task " + std::to_string(index + 1) + " has no unseen accuracy");
  return *t.unseen;
}

}  // namespace

Aggregates aggregate_static(std::span<const TaskAccuracy> tasks, std::size_t T) {
  check_T(tasks, T);
  Aggregates out;
  for (std::size_t t = 0; t < T; ++t) out.mean_seen += tasks[t].seen;
  out.mean_seen /= static_cast<double>(T);
  if (T < 2) return out;
  double u = 0.0, h = 0.0;
  for (std::size_t t = 0; t + 1 < T; ++t) {
    const double ut = unseen_of(tasks[t], t);
    u += ut;
    h += harmonic(tasks[t].seen, ut);
  }
  out.mean_unseen = u / static_cast<double>(T - 1);
  out.mean_harmonic = h / static_cast<double>(T - 1);
  return out;
}

Aggregates aggregate_dynamic(std::span<const TaskAccuracy> tasks, std::size_t T) {
  check_T(tasks, T);
  Aggregates out;
  double s = 0.0, u = 0.0, h = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const double ut = unseen_of(tasks[t], t);
    s += tasks[t].seen;
    u += ut;
    h += harmonic(tasks[t].seen, ut);
  }
  out.mean_seen = s / static_cast<double>(T);
  out.mean_unseen = u / static_cast<double>(T);
  out.mean_harmonic = h / static_cast<double>(T);
  return out;
}

double forgetting(const std::vector<std::vector<double>>& acc) {
  const std::size_t T = acc.size();
  if (T < 2) return 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    if (acc[t].size() < t + 1) throw ContractError("forgetting: accuracy row " + std::to_string(t) + " too short");
  }
  double total = 0.0;
  for (std::size_t j = 0; j + 1 < T; ++j) {
    double best = acc[j][j];
    for (std::size_t t = j; t + 1 < T; ++t) best = std::max(best, acc[t][j]);
    total += std::max(0.0, best - acc[T - 1][j]);
  }
  return total / static_cast<double>(T - 1);
}

double ausuc(const Matrix& scores, std::span<const int> column_classes, std::span<const int> labels,
             std::span<const int> seen_classes, std::span<const int> unseen_classes) {
  if (seen_classes.empty() || unseen_classes.empty()) throw ContractError("ausuc: empty class pool");
  if (scores.cols() != column_classes.size()) throw ShapeError("ausuc: column class count");
  if (scores.rows() != labels.size()) throw ShapeError("ausuc: label count");

  enum class Role { none, seen, unseen };
  std::map<int, Role> role;
  for (int c : seen_classes) role[c] = Role::seen;
  for (int c : unseen_classes) role[c] = Role::unseen;
  std::vector<Role> col_role(column_classes.size(), Role::none);
  for (std::size_t c = 0; c < column_classes.size(); ++c) {
    auto it = role.find(column_classes[c]);
    if (it != role.end()) col_role[c] = it->second;
  }

  // Slot per pool class, for per-class accuracy bookkeeping.
  std::map<int, std::size_t> slot;
  for (int c : seen_classes) slot.emplace(c, slot.size());
  for (int c : unseen_classes) slot.emplace(c, slot.size());
  std::vector<double> total(slot.size(), 0.0), correct(slot.size(), 0.0);

  struct Row {
    double breakpoint;       // row predicts a seen class iff bias < breakpoint
    std::size_t klass;       // slot of the row's label
    bool right_if_seen;
    bool right_if_unseen;
  };
  std::vector<Row> rows;
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    const auto it = slot.find(labels[i]);
    if (it == slot.end()) continue;
    std::size_t best_s = 0, best_u = 0;
    bool have_s = false, have_u = false;
    for (std::size_t c = 0; c < scores.cols(); ++c) {
      if (col_role[c] == Role::seen && (!have_s || scores(i, c) > scores(i, best_s))) {
        best_s = c;
        have_s = true;
      } else if (col_role[c] == Role::unseen && (!have_u || scores(i, c) > scores(i, best_u))) {
        best_u = c;
        have_u = true;
      }
    }
    if (!have_s || !have_u) throw ContractError("ausuc: score matrix lacks a pool's columns");
    rows.push_back({scores(i, best_s) - scores(i, best_u), it->second,
                    column_classes[best_s] == labels[i], column_classes[best_u] == labels[i]});
    total[it->second] += 1.0;
  }
  for (const auto& [c, s] : slot) {
    if (total[s] == 0.0) throw ContractError("ausuc: class " + std::to_string(c) + " has no test rows");
  }

  const std::size_t n_seen = seen_classes.size();
  auto pool_acc = [&](std::size_t begin, std::size_t end) {
    double acc = 0.0;
    for (std::size_t s = begin; s < end; ++s) acc += correct[s] / total[s];
    return acc / static_cast<double>(end - begin);
  };

  // Bias -> -inf: every row takes its best seen class.
  for (const Row& r : rows)
    if (r.right_if_seen) correct[r.klass] += 1.0;
  std::vector<std::pair<double, double>> curve;  // (seen acc, unseen acc)
  curve.emplace_back(pool_acc(0, n_seen), pool_acc(n_seen, slot.size()));

  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.breakpoint < b.breakpoint; });
  for (std::size_t i = 0; i < rows.size();) {
    // Score differences that are equal in exact arithmetic can differ in the
    // last bits; flip them together.
    const double b = rows[i].breakpoint;
    for (; i < rows.size() && rows[i].breakpoint - b <= kBreakpointTolerance; ++i) {
      const Row& r = rows[i];
      correct[r.klass] += (r.right_if_unseen ? 1.0 : 0.0) - (r.right_if_seen ? 1.0 : 0.0);
    }
    curve.emplace_back(pool_acc(0, n_seen), pool_acc(n_seen, slot.size()));
  }

  double area = 0.0;
  for (std::size_t k = 0; k + 1 < curve.size(); ++k) {
    area += (curve[k].first - curve[k + 1].first) * (curve[k].second + curve[k + 1].second) / 2.0;
  }
  return std::clamp(area, 0.0, 1.0);
}

double mausuc(std::span<const double> per_task) {
  if (per_task.empty()) throw ContractError("mausuc: no tasks");
  return std::accumulate(per_task.begin(), per_task.end(), 0.0) / static_cast<double>(per_task.size());
}

std::vector<std::pair<int, double>> top_k_similar(std::span<const double> probe,
                                                  const Matrix& projections,
                                                  std::span<const int> class_ids, std::size_t k) {
  if (projections.rows() != class_ids.size()) throw ShapeError("top_k_similar: class id count");
  const Matrix sims = nn::cosine_matrix(Matrix::row_vector(probe), projections);
  std::vector<std::pair<int, double>> out;
  for (std::size_t c = 0; c < class_ids.size(); ++c) out.emplace_back(class_ids[c], sims(0, c));
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  out.resize(std::min(k, out.size()));
  return out;
}

}  // namespace cgzsl::eval
