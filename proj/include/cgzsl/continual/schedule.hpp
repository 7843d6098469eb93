#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cgzsl::continual {

enum class Setting { fixed, dynamic, online };  // fixed is serialized as "static"

std::string to_string(Setting s);
Setting setting_from_string(std::string_view name);  // throws ValidationError

/// Classes introduced at one task. Static schedules only use new_seen; the
/// unseen pool there is every class not yet revealed.
struct TaskSpec {
  std::size_t t = 0;  // 1-based
  std::vector<int> new_seen;
  std::vector<int> new_unseen;
  std::vector<int> converted;  // unseen -> seen at this task (online only)

  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

struct TaskSchedule {
  Setting setting = Setting::dynamic;
  std::size_t num_classes = 0;  // class ids are 0..num_classes-1
  std::vector<TaskSpec> tasks;

  std::size_t size() const noexcept { return tasks.size(); }

  /// Throws ScheduleError on any structural violation.
  void validate() const;

  /// Role queries after training task t (1-based), each sorted ascending.
  std::vector<int> seen_at(std::size_t t) const;
  std::vector<int> unseen_at(std::size_t t) const;
  /// Classes whose attributes are available at t, in order of first appearance.
  std::vector<int> encountered_at(std::size_t t) const;
  /// Classes whose real training features are used at t (new_seen + converted).
  std::vector<int> real_classes(std::size_t t) const;
  /// Classes introduced by task j; the column group of the accuracy matrices.
  std::vector<int> group(std::size_t j) const;

  friend bool operator==(const TaskSchedule&, const TaskSchedule&) = default;
};

struct ScheduleParams {
  std::size_t num_classes = 0;
  Setting setting = Setting::dynamic;
  std::size_t num_tasks = 0;
  /// Dynamic: new seen / unseen classes per task (online derives its own from
  /// these). Defaults: k = floor(C/T), unseen = max(1, k/5), seen = k - unseen.
  std::optional<std::size_t> seen_per_task;
  std::optional<std::size_t> unseen_per_task;
};

/// Classes are assigned in id order: each task's new seen block, then its new
/// unseen block. Online takes one fewer seen and one more unseen per task than
/// dynamic and, from task 2, converts the lowest-id unseen class of task t-1.
TaskSchedule build_schedule(const ScheduleParams& params);

struct Preset {
  std::string name;
  std::size_t num_classes;
  std::size_t num_tasks;
  std::size_t dynamic_seen;
  std::size_t dynamic_unseen;
};

/// awa1, awa2, apy, cub, sun.
const std::vector<Preset>& presets();
const Preset& find_preset(std::string_view name);  // throws ValidationError
TaskSchedule preset_schedule(std::string_view name, Setting setting);

std::string schedule_to_json(const TaskSchedule& s);
TaskSchedule schedule_from_json(std::string_view text);  // throws ValidationError / ScheduleError
void save_schedule(const TaskSchedule& s, const std::filesystem::path& path);
TaskSchedule load_schedule(const std::filesystem::path& path);

}  // namespace cgzsl::continual
