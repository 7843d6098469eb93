#include "cgzsl/cli/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>

#include "CLI11.hpp"
#include "cgzsl/cli/run_config.hpp"
#include "cgzsl/continual/experiment.hpp"
#include "cgzsl/continual/schedule.hpp"
#include "cgzsl/data/dataset.hpp"
#include "cgzsl/errors.hpp"
#include "cgzsl/eval/report.hpp"
#include "cgzsl/model/model.hpp"

namespace cgzsl::cli {

namespace fs = std::filesystem;

namespace {

struct SynthArgs {
  data::SynthParams params;
  std::string out;
};

struct SplitArgs {
  std::string data_dir;
  std::size_t classes = 0;
  std::string preset;
  std::string setting;
  std::size_t tasks = 0;
  std::optional<std::size_t> seen_per_task;
  std::optional<std::size_t> unseen_per_task;
  std::string out;
};

struct TrainArgs {
  std::string data_dir;
  std::string schedule;
  std::string config;
  std::string out;
  std::string checkpoint;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> replay_per_class;
  std::optional<int> trace_class;
  std::vector<std::string> ablate;
};

struct EvalArgs {
  std::string data_dir;
  std::string schedule;
  std::string checkpoint;
  std::size_t task = 0;
  std::string out;
};

struct ReportArgs {
  std::string in;
  std::string out;
};

std::string summary_line(const eval::ExperimentReport& r) {
  return "mSA=" + eval::fixed9(r.mSA) + " mUA=" + (r.mUA ? eval::fixed9(r.mUA) : "n/a") +
         " mH=" + (r.mH ? eval::fixed9(r.mH) : "n/a");
}

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  if (a.params.num_classes < 4) throw ValidationError("--classes must be >= 4");
  if (a.params.per_class < 4) throw ValidationError("--per-class must be >= 4");
  if (a.params.d_x == 0 || a.params.d_a < 2) throw ValidationError("--dim-x must be >= 1 and --dim-a >= 2");
  if (!(a.params.noise_scale >= 0.0)) throw ValidationError("--noise must be >= 0");
  const data::Dataset ds = data::synth_dataset(a.params);
  data::save_dataset(ds, a.out);
  out << "wrote " << ds.features.rows() << " rows, " << ds.num_classes() << " classes to " << a.out << "\n";
  return kExitOk;
}

int cmd_split(const SplitArgs& a, std::ostream& out) {
  const continual::Setting setting = continual::setting_from_string(a.setting);
  continual::TaskSchedule schedule;
  if (!a.preset.empty()) {
    const auto& preset = continual::find_preset(a.preset);
    if (a.tasks && a.tasks != preset.num_tasks) {
      throw ValidationError("--tasks " + std::to_string(a.tasks) + " conflicts with preset " + preset.name + " (" +
                            std::to_string(preset.num_tasks) + " tasks)");
    }
    schedule = continual::preset_schedule(a.preset, setting);
  } else {
    std::size_t classes = a.classes;
    if (!a.data_dir.empty()) classes = data::load_dataset(a.data_dir).num_classes();
    if (classes == 0) throw ValidationError("give --data, --classes or --preset");
    if (a.tasks == 0) throw ValidationError("--tasks is required without --preset");
    schedule = continual::build_schedule({classes, setting, a.tasks, a.seen_per_task, a.unseen_per_task});
  }
  continual::save_schedule(schedule, a.out);
  for (std::size_t t = 1; t <= schedule.size(); ++t) {
    out << "task " << t << ": seen " << schedule.seen_at(t).size() << " unseen " << schedule.unseen_at(t).size()
        << "\n";
  }
  return kExitOk;
}

// Defaults < config file < CZSL_SEED < flags.
RunConfig resolve_config(const TrainArgs& a) {
  RunConfig cfg = a.config.empty() ? RunConfig{} : load_run_config(a.config);
  if (const char* env = std::getenv("CZSL_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      cfg.seed = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument(env);
    } catch (const std::exception&) {
      throw ValidationError(std::string("CZSL_SEED: not an unsigned integer: ") + env);
    }
  }
  if (a.seed) cfg.seed = *a.seed;
  if (a.epochs) cfg.train.epochs = *a.epochs;
  if (a.batch_size) cfg.train.batch_size = *a.batch_size;
  if (a.replay_per_class) cfg.train.replay_per_class = *a.replay_per_class;
  if (a.trace_class) cfg.trace_class = a.trace_class;
  for (const auto& name : a.ablate) apply_ablation(cfg.train.ablation, name);
  cfg.finalize();
  return cfg;
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
  const RunConfig cfg = resolve_config(a);
  const data::Dataset ds = data::load_dataset(a.data_dir);
  const continual::TaskSchedule schedule = continual::load_schedule(a.schedule);
  const model::ModelConfig mc = cfg.model_config(ds.features.cols(), ds.attributes.cols());
  continual::ExperimentOptions options;
  options.trace_class = cfg.trace_class;
  options.trace_top_k = cfg.trace_top_k;
  auto result = continual::run_experiment(ds, schedule, mc, cfg.train, options);
  result.report.config = run_config_to_json(cfg, mc);
  eval::write_report(result.report, a.out);
  const fs::path ckpt = a.checkpoint.empty() ? fs::path(a.out) / "model.ckpt" : fs::path(a.checkpoint);
  model::save_checkpoint(result.model, ckpt);
  out << summary_line(result.report) << "\n";
  return kExitOk;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const data::Dataset ds = data::load_dataset(a.data_dir);
  const continual::TaskSchedule schedule = continual::load_schedule(a.schedule);
  const model::CgzslModel model = model::load_checkpoint(a.checkpoint);
  if (model.config().d_x != ds.features.cols() || model.config().d_a != ds.attributes.cols()) {
    throw ShapeError("checkpoint expects d_x=" + std::to_string(model.config().d_x) + ", d_a=" +
                     std::to_string(model.config().d_a) + "; dataset has d_x=" + std::to_string(ds.features.cols()) +
                     ", d_a=" + std::to_string(ds.attributes.cols()));
  }
  if (schedule.num_classes != ds.num_classes()) throw ScheduleError("schedule does not match the dataset inventory");
  const std::size_t t = a.task ? a.task : schedule.size();
  if (t > schedule.size()) throw ValidationError("--task " + std::to_string(t) + " beyond the schedule");
  const auto ev = continual::evaluate_task(model, ds, schedule, t);
  out << "t=" << t << " seenAcc=" << eval::fixed9(ev.seen_acc) << " unseenAcc="
      << (ev.unseen_acc ? eval::fixed9(ev.unseen_acc) : "n/a") << " H=" << eval::fixed9(ev.harmonic)
      << " AUSUC=" << (ev.ausuc ? eval::fixed9(ev.ausuc) : "n/a") << "\n";
  if (!a.out.empty()) {
    nlohmann::ordered_json j;
    auto cell = [](const eval::Cell& c) { return c ? nlohmann::ordered_json(eval::quantize(*c)) : nullptr; };
    j["t"] = t;
    j["seen_acc"] = eval::quantize(ev.seen_acc);
    j["unseen_acc"] = cell(ev.unseen_acc);
    j["H"] = eval::quantize(ev.harmonic);
    j["AUSUC"] = cell(ev.ausuc);
    std::ofstream f(a.out, std::ios::binary);
    if (!f) throw IoError("cannot open " + a.out + " for writing");
    f << j.dump(2) << "\n";
  }
  return kExitOk;
}

int cmd_report(const ReportArgs& a, std::ostream& out) {
  const eval::ExperimentReport r = eval::read_report(a.in);
  out << "setting=" << r.setting << " T=" << r.T << " " << summary_line(r)
      << " forgetting=" << eval::fixed9(r.forgetting) << " mAUSUC=" << (r.mAUSUC ? eval::fixed9(r.mAUSUC) : "n/a")
      << "\n";
  out << eval::metrics_csv(r);
  if (!a.out.empty()) eval::write_report(r, a.out);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Continual generalized zero-shot learning toolkit"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Write a synthetic attribute-correlated dataset");
  s->add_option("--classes", synth.params.num_classes, "Number of classes (>= 4)");
  s->add_option("--dim-x", synth.params.d_x, "Visual feature dimension");
  s->add_option("--dim-a", synth.params.d_a, "Attribute dimension");
  s->add_option("--per-class", synth.params.per_class, "Samples per class");
  s->add_option("--noise", synth.params.noise_scale, "Feature noise scale");
  s->add_option("--seed", synth.params.seed, "RNG seed");
  s->add_option("--out", synth.out, "Output dataset directory")->required();

  SplitArgs split;
  auto* p = app.add_subcommand("split", "Write a task schedule");
  p->add_option("--data", split.data_dir, "Dataset directory (class inventory)");
  p->add_option("--classes", split.classes, "Class inventory size when no dataset is given");
  p->add_option("--preset", split.preset, "awa1, awa2, apy, cub or sun");
  p->add_option("--setting", split.setting, "static, dynamic or online")->required();
  p->add_option("--tasks", split.tasks, "Number of tasks");
  p->add_option("--seen-per-task", split.seen_per_task, "New seen classes per task");
  p->add_option("--unseen-per-task", split.unseen_per_task, "New unseen classes per task (dynamic base)");
  p->add_option("--out", split.out, "Output schedule JSON")->required();

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Run the continual experiment and write a report");
  t->add_option("--data", train.data_dir, "Dataset directory")->required();
  t->add_option("--schedule", train.schedule, "Schedule JSON")->required();
  t->add_option("--config", train.config, "Run config JSON");
  t->add_option("--out", train.out, "Report directory")->required();
  t->add_option("--checkpoint", train.checkpoint, "Checkpoint path (default OUT/model.ckpt)");
  t->add_option("--seed", train.seed, "Seed (overrides config and CZSL_SEED)");
  t->add_option("--epochs", train.epochs, "Epochs per task");
  t->add_option("--batch-size", train.batch_size, "Minibatch size");
  t->add_option("--replay-per-class", train.replay_per_class, "Replayed features per previous seen class");
  t->add_option("--trace-class", train.trace_class, "Class whose similarity trace is recorded");
  t->add_option("--ablate", train.ablate, "Disable: replay, sal, nuclear, alignment, rcl, pcl, snl");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint without training");
  e->add_option("--data", ev.data_dir, "Dataset directory")->required();
  e->add_option("--schedule", ev.schedule, "Schedule JSON")->required();
  e->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();
  e->add_option("--task", ev.task, "Evaluate the pools of this task (default: last)");
  e->add_option("--out", ev.out, "Write metrics JSON here");

  ReportArgs rep;
  auto* r = app.add_subcommand("report", "Summarize a report directory");
  r->add_option("--in", rep.in, "Report directory")->required();
  r->add_option("--out", rep.out, "Re-render report files into this directory");

  std::vector<const char*> argv;
  for (const auto& arg : args) argv.push_back(arg.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& ex) {
    err << "usage error: " << ex.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*s) return cmd_synth(synth, out);
    if (*p) return cmd_split(split, out);
    if (*t) return cmd_train(train, out);
    if (*e) return cmd_eval(ev, out);
    if (*r) return cmd_report(rep, out);
  } catch (const NumericError& ex) {
    err << "numerical failure: " << ex.term() << " is not finite\n";
    return kExitNumeric;
  } catch (const IoError& ex) {
    err << "i/o error: " << ex.what() << "\n";
    return kExitIo;
  } catch (const FormatError& ex) {
    err << "format error: " << ex.what() << "\n";
    return kExitIo;
  } catch (const std::exception& ex) {
    // ValidationError, ScheduleError, ShapeError, ContractError, IndexError.
    err << "error: " << ex.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace cgzsl::cli
