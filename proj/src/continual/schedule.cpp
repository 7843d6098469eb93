#include "cgzsl/continual/schedule.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "cgzsl/errors.hpp"
#include "json.hpp"

namespace cgzsl::continual {

std::string to_string(Setting s) {
  switch (s) {
    case Setting::fixed: return "static";
    case Setting::dynamic: return "dynamic";
    case Setting::online: return "online";
  }
  return "unknown";
}

Setting setting_from_string(std::string_view name) {
  if (name == "static") return Setting::fixed;
  if (name == "dynamic") return Setting::dynamic;
  if (name == "online") return Setting::online;
  throw ValidationError("setting: expected static, dynamic or online, got '" + std::string(name) + "'");
}

namespace {

[[noreturn]] void bad(std::size_t t, const std::string& what) {
  throw ScheduleError("task " + std::to_string(t) + ": " + what);
}

void append(std::vector<int>& out, const std::vector<int>& in) { out.insert(out.end(), in.begin(), in.end()); }

std::vector<int> sorted(std::set<int> s) { return {s.begin(), s.end()}; }

void check_t(const TaskSchedule& s, std::size_t t) {
  if (t == 0 || t > s.tasks.size()) {
    throw ContractError("task index " + std::to_string(t) + " outside 1.." + std::to_string(s.tasks.size()));
  }
}

}  // namespace

void TaskSchedule::validate() const {
  if (tasks.empty()) throw ScheduleError("schedule has no tasks");
  if (num_classes == 0) throw ScheduleError("schedule has an empty class inventory");
  std::set<int> introduced, unseen_so_far, seen_so_far;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const TaskSpec& task = tasks[i];
    const std::size_t t = i + 1;
    if (task.t != t) bad(t, "task index " + std::to_string(task.t) + " out of order");
    if (setting == Setting::fixed && !(task.new_unseen.empty() && task.converted.empty())) {
      bad(t, "static tasks only reveal seen classes");
    }
    if (setting == Setting::dynamic && !task.converted.empty()) bad(t, "conversions are online-only");
    if (t == 1 && task.new_seen.empty()) bad(t, "first task has no seen classes");
    std::set<int> local;
    for (const auto* list : {&task.new_seen, &task.new_unseen, &task.converted}) {
      for (int c : *list) {
        if (c < 0 || static_cast<std::size_t>(c) >= num_classes) bad(t, "class " + std::to_string(c) + " outside inventory");
        if (!local.insert(c).second) bad(t, "class " + std::to_string(c) + " listed twice");
      }
    }
    for (int c : task.converted) {
      if (!unseen_so_far.contains(c)) bad(t, "converted class " + std::to_string(c) + " was not unseen in an earlier task");
      unseen_so_far.erase(c);
      seen_so_far.insert(c);
    }
    for (const auto* list : {&task.new_seen, &task.new_unseen}) {
      for (int c : *list) {
        if (!introduced.insert(c).second) bad(t, "class " + std::to_string(c) + " introduced twice");
      }
    }
    seen_so_far.insert(task.new_seen.begin(), task.new_seen.end());
    unseen_so_far.insert(task.new_unseen.begin(), task.new_unseen.end());
  }
}

std::vector<int> TaskSchedule::seen_at(std::size_t t) const {
  check_t(*this, t);
  std::set<int> seen;
  for (std::size_t j = 0; j < t; ++j) {
    seen.insert(tasks[j].new_seen.begin(), tasks[j].new_seen.end());
    seen.insert(tasks[j].converted.begin(), tasks[j].converted.end());
  }
  return sorted(seen);
}

std::vector<int> TaskSchedule::unseen_at(std::size_t t) const {
  check_t(*this, t);
  const auto seen = seen_at(t);
  std::set<int> unseen;
  if (setting == Setting::fixed) {
    for (std::size_t c = 0; c < num_classes; ++c) unseen.insert(static_cast<int>(c));
  } else {
    for (std::size_t j = 0; j < t; ++j) unseen.insert(tasks[j].new_unseen.begin(), tasks[j].new_unseen.end());
  }
  for (int c : seen) unseen.erase(c);
  return sorted(unseen);
}

std::vector<int> TaskSchedule::encountered_at(std::size_t t) const {
  check_t(*this, t);
  std::vector<int> out;
  if (setting == Setting::fixed) {
    for (std::size_t c = 0; c < num_classes; ++c) out.push_back(static_cast<int>(c));
    return out;
  }
  for (std::size_t j = 0; j < t; ++j) {
    append(out, tasks[j].new_seen);
    append(out, tasks[j].new_unseen);
  }
  return out;
}

std::vector<int> TaskSchedule::real_classes(std::size_t t) const {
  check_t(*this, t);
  std::vector<int> out = tasks[t - 1].new_seen;
  append(out, tasks[t - 1].converted);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> TaskSchedule::group(std::size_t j) const {
  check_t(*this, j);
  std::vector<int> out = tasks[j - 1].new_seen;
  append(out, tasks[j - 1].new_unseen);
  std::sort(out.begin(), out.end());
  return out;
}

TaskSchedule build_schedule(const ScheduleParams& p) {
  const std::size_t C = p.num_classes, T = p.num_tasks;
  if (T == 0) throw ScheduleError("need at least one task");
  if (C < T) throw ScheduleError(std::to_string(C) + " classes cannot fill " + std::to_string(T) + " tasks");
  TaskSchedule s;
  s.setting = p.setting;
  s.num_classes = C;
  int next = 0;
  auto take = [&](std::size_t n) {
    std::vector<int> ids(n);
    for (auto& id : ids) id = next++;
    return ids;
  };

  if (p.setting == Setting::fixed) {
    const std::size_t per_task = p.seen_per_task.value_or(C / T);
    if (per_task == 0 || per_task * T > C) {
      throw ScheduleError("static: " + std::to_string(per_task) + " classes per task over " + std::to_string(T) +
                          " tasks does not fit " + std::to_string(C) + " classes");
    }
    for (std::size_t t = 1; t <= T; ++t) s.tasks.push_back({t, take(per_task), {}, {}});
    s.validate();
    return s;
  }

  const std::size_t k = C / T;
  const std::size_t dyn_unseen = p.unseen_per_task.value_or(std::max<std::size_t>(1, k / 5));
  const std::size_t dyn_seen = p.seen_per_task.value_or(k > dyn_unseen ? k - dyn_unseen : 0);
  if (dyn_unseen == 0) throw ScheduleError("dynamic/online schedules need at least one unseen class per task");
  if (dyn_seen == 0) throw ScheduleError("dynamic/online schedules need at least one seen class per task");
  std::size_t seen_n = dyn_seen, unseen_n = dyn_unseen;
  if (p.setting == Setting::online) {
    if (dyn_seen < 2) throw ScheduleError("online needs at least 2 seen classes per task in the dynamic base");
    seen_n = dyn_seen - 1;
    unseen_n = dyn_unseen + 1;
  }
  if ((seen_n + unseen_n) * T > C) {
    throw ScheduleError(std::to_string(seen_n) + "+" + std::to_string(unseen_n) + " classes per task over " +
                        std::to_string(T) + " tasks exceeds " + std::to_string(C) + " classes");
  }
  for (std::size_t t = 1; t <= T; ++t) {
    TaskSpec task{t, take(seen_n), take(unseen_n), {}};
    if (p.setting == Setting::online && t > 1) {
      task.converted.push_back(*std::min_element(s.tasks.back().new_unseen.begin(), s.tasks.back().new_unseen.end()));
    }
    s.tasks.push_back(std::move(task));
  }
  s.validate();
  return s;
}

const std::vector<Preset>& presets() {
  static const std::vector<Preset> table = {
      {"awa1", 50, 5, 8, 2}, {"awa2", 50, 5, 8, 2}, {"apy", 32, 4, 5, 3},
      {"cub", 200, 20, 7, 2}, {"sun", 717, 15, 43, 4},
  };
  return table;
}

const Preset& find_preset(std::string_view name) {
  for (const auto& p : presets())
    if (p.name == name) return p;
  throw ValidationError("preset: unknown dataset '" + std::string(name) + "' (awa1, awa2, apy, cub, sun)");
}

TaskSchedule preset_schedule(std::string_view name, Setting setting) {
  const Preset& p = find_preset(name);
  ScheduleParams params{p.num_classes, setting, p.num_tasks, {}, {}};
  if (setting != Setting::fixed) {
    params.seen_per_task = p.dynamic_seen;
    params.unseen_per_task = p.dynamic_unseen;
  }
  return build_schedule(params);
}

std::string schedule_to_json(const TaskSchedule& s) {
  nlohmann::ordered_json j;
  j["setting"] = to_string(s.setting);
  j["num_classes"] = s.num_classes;
  j["tasks"] = nlohmann::ordered_json::array();
  for (const auto& task : s.tasks) {
    nlohmann::ordered_json e;
    e["t"] = task.t;
    e["new_seen"] = task.new_seen;
    e["new_unseen"] = task.new_unseen;
    e["converted"] = task.converted;
    j["tasks"].push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

TaskSchedule schedule_from_json(std::string_view text) {
  TaskSchedule s;
  try {
    const auto j = nlohmann::json::parse(text);
    for (const auto& [key, _] : j.items()) {
      if (key != "setting" && key != "num_classes" && key != "tasks") {
        throw ValidationError("schedule: unknown key '" + key + "'");
      }
    }
    s.setting = setting_from_string(j.at("setting").get<std::string>());
    int max_id = -1;
    for (const auto& e : j.at("tasks")) {
      TaskSpec task;
      task.t = e.at("t").get<std::size_t>();
      task.new_seen = e.value("new_seen", std::vector<int>{});
      task.new_unseen = e.value("new_unseen", std::vector<int>{});
      task.converted = e.value("converted", std::vector<int>{});
      for (const auto* list : {&task.new_seen, &task.new_unseen, &task.converted})
        for (int c : *list) max_id = std::max(max_id, c);
      s.tasks.push_back(std::move(task));
    }
    s.num_classes = j.contains("num_classes") ? j.at("num_classes").get<std::size_t>()
                                              : static_cast<std::size_t>(max_id + 1);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("schedule: ") + e.what());
  }
  s.validate();
  return s;
}

void save_schedule(const TaskSchedule& s, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << schedule_to_json(s);
  if (!out) throw IoError("failed writing " + path.string());
}

TaskSchedule load_schedule(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return schedule_from_json(buf.str());
}

}  // namespace cgzsl::continual
