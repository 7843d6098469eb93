#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace cgzsl::eval {

inline constexpr int kReportVersion = 1;

using Cell = std::optional<double>;
/// Lower-triangular: row t-1 has t entries, entry j-1 is task j's classes after task t.
using CellMatrix = std::vector<std::vector<Cell>>;

struct ReplayShortfall {
  int class_id = 0;
  std::size_t requested = 0;
  std::size_t kept = 0;

  friend bool operator==(const ReplayShortfall&, const ReplayShortfall&) = default;
};

struct TaskResult {
  std::size_t t = 0;
  std::size_t num_seen = 0;
  std::size_t num_unseen = 0;
  double seen_acc = 0.0;
  Cell unseen_acc;
  double harmonic = 0.0;  // H when both pools exist, else the seen accuracy
  Cell ausuc;
  std::size_t replay_rows = 0;
  std::size_t replay_misfiled = 0;
  std::vector<ReplayShortfall> shortfall;
  std::vector<std::pair<int, double>> similarity;   // top-k for the tracked class
  std::vector<std::pair<double, double>> losses;    // per epoch (D total, G total)

  friend bool operator==(const TaskResult&, const TaskResult&) = default;
};

struct ExperimentReport {
  int version = kReportVersion;
  std::string setting;
  std::size_t T = 0;
  double mSA = 0.0;
  Cell mUA;
  Cell mH;
  double forgetting = 0.0;
  std::string forgetting_basis = "harmonic";
  Cell mAUSUC;
  std::optional<int> trace_class;
  CellMatrix seen_accuracy;
  CellMatrix unseen_accuracy;
  CellMatrix harmonic_accuracy;
  std::vector<TaskResult> tasks;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();

  friend bool operator==(const ExperimentReport&, const ExperimentReport&) = default;
};

/// Rounds to 9 decimals, the precision of every written number.
double quantize(double v);
void quantize(ExperimentReport& report);

nlohmann::ordered_json report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const nlohmann::ordered_json& j);  // throws FormatError

/// Writes report.json, metrics.csv (t,seenAcc,unseenAcc,H,AUSUC) and
/// traces.csv (t,rank,class,cosine) into dir, creating it if needed.
void write_report(const ExperimentReport& report, const std::filesystem::path& dir);
ExperimentReport read_report(const std::filesystem::path& dir);

std::string metrics_csv(const ExperimentReport& report);
std::string traces_csv(const ExperimentReport& report);
/// Fixed 9-decimal rendering; empty string for an absent cell.
std::string fixed9(const Cell& v);

}  // namespace cgzsl::eval
