#include "cgzsl/continual/experiment.hpp"

#include <algorithm>
#include <set>

#include "cgzsl/errors.hpp"
#include "cgzsl/eval/metrics.hpp"

namespace cgzsl::continual {

namespace {

std::vector<int> intersect(const std::vector<int>& a, const std::set<int>& b) {
  std::vector<int> out;
  for (int c : a)
    if (b.contains(c)) out.push_back(c);
  return out;
}

Matrix attribute_rows(const data::Dataset& ds, const std::vector<int>& classes) {
  std::vector<std::size_t> rows(classes.begin(), classes.end());
  return nn::select_rows(ds.attributes, rows);
}

struct TestPool {
  Matrix features;
  std::vector<int> labels;
};

TestPool test_pool(const data::Dataset& ds, const std::set<int>& classes) {
  std::vector<std::size_t> rows;
  TestPool pool;
  for (auto i : ds.test_idx) {
    if (classes.contains(ds.labels[i])) {
      rows.push_back(i);
      pool.labels.push_back(ds.labels[i]);
    }
  }
  pool.features = nn::select_rows(ds.features, rows);
  return pool;
}

eval::Cell accuracy_or_none(std::span<const int> pred, std::span<const int> labels, const std::vector<int>& classes) {
  if (classes.empty()) return std::nullopt;
  return eval::per_class_accuracy(pred, labels, classes);
}

double combined(const eval::Cell& s, const eval::Cell& u) {
  if (s && u) return eval::harmonic(*s, *u);
  return s ? *s : u.value_or(0.0);
}

}  // namespace

TaskEvaluation evaluate_task(const model::CgzslModel& model, const data::Dataset& ds, const TaskSchedule& schedule,
                             std::size_t t) {
  TaskEvaluation out;
  out.seen = schedule.seen_at(t);
  out.unseen = schedule.unseen_at(t);
  const std::vector<int> encountered = schedule.encountered_at(t);
  const std::set<int> enc_set(encountered.begin(), encountered.end());

  const Matrix projections = model::project_attributes(model, attribute_rows(ds, encountered));
  const TestPool pool = test_pool(ds, enc_set);
  const auto verdict = model::classify(pool.features, projections);
  std::vector<int> pred;
  pred.reserve(verdict.predicted.size());
  for (std::size_t k : verdict.predicted) pred.push_back(encountered[k]);

  out.seen_acc = eval::per_class_accuracy(pred, pool.labels, out.seen);
  out.unseen_acc = accuracy_or_none(pred, pool.labels, out.unseen);
  out.harmonic = combined(out.seen_acc, out.unseen_acc);
  if (!out.unseen.empty()) out.ausuc = eval::ausuc(verdict.scores, encountered, pool.labels, out.seen, out.unseen);

  const std::set<int> seen_set(out.seen.begin(), out.seen.end());
  const std::set<int> unseen_set(out.unseen.begin(), out.unseen.end());
  for (std::size_t j = 1; j <= t; ++j) {
    const std::vector<int> group = schedule.group(j);
    const eval::Cell s = accuracy_or_none(pred, pool.labels, intersect(group, seen_set));
    const eval::Cell u = accuracy_or_none(pred, pool.labels, intersect(group, unseen_set));
    out.seen_row.push_back(s);
    out.unseen_row.push_back(u);
    out.harmonic_row.push_back(combined(s, u));
  }
  return out;
}

std::vector<std::pair<int, double>> similarity_trace(const model::CgzslModel& model, const data::Dataset& ds,
                                                     const TaskSchedule& schedule, std::size_t t, int tracked,
                                                     std::size_t top_k, std::size_t samples, std::mt19937_64& rng) {
  const std::vector<int> encountered = schedule.encountered_at(t);
  if (std::find(encountered.begin(), encountered.end(), tracked) == encountered.end()) {
    throw ContractError("similarity_trace: class " + std::to_string(tracked) + " not encountered by task " +
                        std::to_string(t));
  }
  const std::vector<int> seen = schedule.seen_at(t);
  Matrix probe_rows;
  if (std::binary_search(seen.begin(), seen.end(), tracked)) {
    probe_rows = nn::l2_normalize_rows(test_pool(ds, {tracked}).features);
  } else {
    const std::size_t n = std::max<std::size_t>(1, samples);
    Matrix attrs(n, ds.attributes.cols());
    for (std::size_t i = 0; i < n; ++i) {
      const auto src = ds.attributes.row(static_cast<std::size_t>(tracked));
      std::copy(src.begin(), src.end(), attrs.row(i).begin());
    }
    probe_rows = nn::l2_normalize_rows(model::generate(model, model::sample_noise(n, model.config().d_z, rng), attrs));
  }
  const std::vector<int> all(probe_rows.rows(), 0);
  const std::vector<int> only{0};
  const Matrix probe = losses::class_means(probe_rows, all, only);
  const Matrix projections = model::project_attributes(model, attribute_rows(ds, encountered));
  return eval::top_k_similar(probe.row(0), projections, encountered, top_k);
}

TaskData task_data(const data::Dataset& ds, const TaskSchedule& schedule, std::size_t t) {
  const std::vector<int> real = schedule.real_classes(t);
  const std::set<int> real_set(real.begin(), real.end());
  TaskData out;
  std::vector<std::size_t> rows;
  for (auto i : ds.train_idx) {
    if (real_set.contains(ds.labels[i])) {
      rows.push_back(i);
      out.labels.push_back(ds.labels[i]);
      out.source_rows.push_back(static_cast<std::int64_t>(i));
    }
  }
  out.features = nn::select_rows(ds.features, rows);
  return out;
}

ExperimentResult run_experiment(const data::Dataset& ds, const TaskSchedule& schedule,
                                const model::ModelConfig& model_config, const TrainConfig& cfg,
                                const ExperimentOptions& options) {
  ds.validate();
  schedule.validate();
  cfg.validate();
  model_config.validate();
  if (schedule.num_classes != ds.num_classes()) {
    throw ScheduleError("schedule covers " + std::to_string(schedule.num_classes) + " classes, dataset has " +
                        std::to_string(ds.num_classes()));
  }
  if (model_config.d_x != ds.features.cols() || model_config.d_a != ds.attributes.cols()) {
    throw ShapeError("model dimensions do not match the dataset");
  }

  ExperimentResult result{{}, model::CgzslModel(model_config, cfg.seed)};
  model::CgzslModel& model = result.model;
  eval::ExperimentReport& report = result.report;
  report.setting = to_string(schedule.setting);
  report.T = schedule.size();

  int tracked = 0;
  if (options.trace_class) {
    tracked = *options.trace_class;
    if (tracked < 0 || static_cast<std::size_t>(tracked) >= ds.num_classes()) {
      throw ValidationError("trace_class: " + std::to_string(tracked) + " outside the dataset");
    }
  } else {
    const auto u1 = schedule.unseen_at(1);
    tracked = u1.empty() ? schedule.seen_at(1).front() : u1.front();
  }
  report.trace_class = tracked;

  std::seed_seq seq{cfg.seed, std::uint64_t{0x5eed}};
  std::mt19937_64 rng(seq);
  OptimizerState opt{nn::Adam(cfg.optimizer), nn::Adam(cfg.optimizer)};
  std::vector<eval::TaskAccuracy> accuracies;
  std::vector<std::vector<double>> harmonic_matrix;
  std::vector<double> ausucs;

  for (std::size_t t = 1; t <= schedule.size(); ++t) {
    const TaskSpec& spec = schedule.tasks[t - 1];
    eval::TaskResult task;
    task.t = t;

    ReplaySet replay;
    if (t > 1 && cfg.ablation.replay) {
      const std::vector<int> previous = model.seen_classes();
      replay = generate_replay(model, previous, cfg.replay_per_class, rng);
      task.replay_misfiled = count_misfiled(model, replay);
      if (task.replay_misfiled != 0) throw ContractError("replay filter let through misclassified rows");
      task.replay_rows = replay.size();
      for (const auto& s : replay.shortfall) task.shortfall.push_back({s.class_id, s.requested, s.kept});
    }

    // Reveal this task's classes.
    if (schedule.setting == Setting::fixed && t == 1) {
      const std::set<int> first(spec.new_seen.begin(), spec.new_seen.end());
      for (std::size_t c = 0; c < ds.num_classes(); ++c) {
        const int id = static_cast<int>(c);
        model.encounter(id, ds.attributes.row(c), first.contains(id));
      }
    } else {
      for (int c : spec.new_seen) model.encounter(c, ds.attributes.row(static_cast<std::size_t>(c)), true);
      for (int c : spec.new_unseen) model.encounter(c, ds.attributes.row(static_cast<std::size_t>(c)), false);
      for (int c : spec.converted) model.mark_seen(c);
    }

    const TaskData data = task_data(ds, schedule, t);
    BatchObserver observer;
    if (options.observer) observer = [&](const BatchRecord& b) { options.observer(t, b); };
    const auto trace = train_task(model, data, replay, cfg, opt, rng, observer);
    for (const auto& e : trace) task.losses.emplace_back(e.d_total, e.g_total);

    const TaskEvaluation ev = evaluate_task(model, ds, schedule, t);
    task.num_seen = ev.seen.size();
    task.num_unseen = ev.unseen.size();
    task.seen_acc = ev.seen_acc;
    task.unseen_acc = ev.unseen_acc;
    task.harmonic = ev.harmonic;
    task.ausuc = ev.ausuc;
    if (ev.ausuc) ausucs.push_back(*ev.ausuc);
    accuracies.push_back({ev.seen_acc, ev.unseen_acc});
    report.seen_accuracy.push_back(ev.seen_row);
    report.unseen_accuracy.push_back(ev.unseen_row);
    report.harmonic_accuracy.push_back(ev.harmonic_row);
    std::vector<double> h_row;
    for (const auto& c : ev.harmonic_row) h_row.push_back(c.value_or(0.0));
    harmonic_matrix.push_back(std::move(h_row));

    const std::vector<int> enc = schedule.encountered_at(t);
    if (std::find(enc.begin(), enc.end(), tracked) != enc.end()) {
      std::seed_seq probe_seq{cfg.seed, std::uint64_t{0x7ace}, std::uint64_t{t}};
      std::mt19937_64 probe_rng(probe_seq);
      task.similarity = similarity_trace(model, ds, schedule, t, tracked, options.trace_top_k, options.probe_samples,
                                         probe_rng);
    }
    report.tasks.push_back(std::move(task));
  }

  const std::size_t T = schedule.size();
  const eval::Aggregates agg = schedule.setting == Setting::fixed ? eval::aggregate_static(accuracies, T)
                                                                  : eval::aggregate_dynamic(accuracies, T);
  report.mSA = agg.mean_seen;
  report.mUA = agg.mean_unseen;
  report.mH = agg.mean_harmonic;
  report.forgetting = eval::forgetting(harmonic_matrix);
  if (!ausucs.empty()) report.mAUSUC = eval::mausuc(ausucs);
  eval::quantize(report);
  return result;
}

}  // namespace cgzsl::continual
