#include "cgzsl/cli/run_config.hpp"

#include <fstream>
#include <initializer_list>
#include <set>
#include <string>

#include "cgzsl/errors.hpp"

namespace cgzsl::cli {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

model::ModelConfig RunConfig::model_config(std::size_t d_x, std::size_t d_a) const {
  model::ModelConfig m = model::ModelConfig::with_defaults(d_x, d_a);
  if (d_z) m.d_z = d_z;
  if (hidden_g) m.hidden_g = hidden_g;
  if (hidden_d) m.hidden_d = hidden_d;
  m.temperature = temperature;
  return m;
}

void RunConfig::finalize() {
  train.seed = seed;
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw ValidationError("model.temperature must be > 0");
  if (trace_top_k == 0) throw ValidationError("trace.top_k must be >= 1");
  train.validate();
}

namespace {

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ValidationError(where + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items()) {
    if (!ok.contains(key)) throw ValidationError(where + ": unknown key '" + key + "'");
  }
}

template <class T>
void read(const json& j, const char* key, T& into, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    into = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(where + "." + key + ": wrong type");
  }
}

// Counts must be non-negative integers; get<size_t> would wrap negatives.
void read_count(const json& j, const char* key, std::size_t& into, const std::string& where) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ValidationError(where + "." + key + ": expected a non-negative integer");
  }
  into = v.get<std::size_t>();
}

}  // namespace

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  only_keys(j, "config", {"seed", "model", "train", "weights", "alignment", "optimizer", "ablation", "trace"});
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) throw ValidationError("config.seed: expected a non-negative integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("model")) {
    const json& m = j.at("model");
    only_keys(m, "model", {"d_z", "hidden_g", "hidden_d", "temperature"});
    read_count(m, "d_z", c.d_z, "model");
    read_count(m, "hidden_g", c.hidden_g, "model");
    read_count(m, "hidden_d", c.hidden_d, "model");
    read(m, "temperature", c.temperature, "model");
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    only_keys(t, "train", {"epochs", "batch_size", "replay_per_class", "generated_per_step"});
    read_count(t, "epochs", c.train.epochs, "train");
    read_count(t, "batch_size", c.train.batch_size, "train");
    read_count(t, "replay_per_class", c.train.replay_per_class, "train");
    read_count(t, "generated_per_step", c.train.generated_per_step, "train");
  }
  if (j.contains("weights")) {
    const json& w = j.at("weights");
    only_keys(w, "weights", {"gan", "classification", "seen_normalized", "alignment"});
    read(w, "gan", c.train.weights.gan, "weights");
    read(w, "classification", c.train.weights.classification, "weights");
    read(w, "seen_normalized", c.train.weights.seen_normalized, "weights");
    read(w, "alignment", c.train.weights.alignment, "weights");
  }
  if (j.contains("alignment")) {
    const json& a = j.at("alignment");
    only_keys(a, "alignment", {"epsilon", "neighbors"});
    read(a, "epsilon", c.train.alignment.epsilon, "alignment");
    read_count(a, "neighbors", c.train.alignment.neighbors, "alignment");
  }
  if (j.contains("optimizer")) {
    const json& o = j.at("optimizer");
    only_keys(o, "optimizer", {"learning_rate", "beta1", "beta2", "epsilon", "weight_decay"});
    read(o, "learning_rate", c.train.optimizer.learning_rate, "optimizer");
    read(o, "beta1", c.train.optimizer.beta1, "optimizer");
    read(o, "beta2", c.train.optimizer.beta2, "optimizer");
    read(o, "epsilon", c.train.optimizer.epsilon, "optimizer");
    read(o, "weight_decay", c.train.optimizer.weight_decay, "optimizer");
  }
  if (j.contains("ablation")) {
    const json& a = j.at("ablation");
    only_keys(a, "ablation", {"replay", "sal", "nuclear", "rcl", "pcl", "snl"});
    read(a, "replay", c.train.ablation.replay, "ablation");
    read(a, "sal", c.train.ablation.sal, "ablation");
    read(a, "nuclear", c.train.ablation.nuclear, "ablation");
    read(a, "rcl", c.train.ablation.rcl, "ablation");
    read(a, "pcl", c.train.ablation.pcl, "ablation");
    read(a, "snl", c.train.ablation.snl, "ablation");
  }
  if (j.contains("trace")) {
    const json& t = j.at("trace");
    only_keys(t, "trace", {"class", "top_k"});
    if (t.contains("class")) {
      int cls = 0;
      read(t, "class", cls, "trace");
      c.trace_class = cls;
    }
    read_count(t, "top_k", c.trace_top_k, "trace");
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

ojson run_config_to_json(const RunConfig& c, const model::ModelConfig& m) {
  const auto& t = c.train;
  ojson j;
  j["seed"] = c.seed;
  j["model"] = {{"d_x", m.d_x}, {"d_a", m.d_a}, {"d_z", m.d_z}, {"hidden_g", m.hidden_g},
                {"hidden_d", m.hidden_d}, {"temperature", m.temperature}};
  j["train"] = {{"epochs", t.epochs}, {"batch_size", t.batch_size}, {"replay_per_class", t.replay_per_class},
                {"generated_per_step", t.generated_count()}, {"replay_attempt_factor", continual::kDefaultAttemptFactor}};
  j["weights"] = {{"gan", t.weights.gan}, {"classification", t.weights.classification},
                  {"seen_normalized", t.weights.seen_normalized}, {"alignment", t.weights.alignment}};
  j["alignment"] = {{"epsilon", t.alignment.epsilon}, {"neighbors", t.alignment.neighbors}};
  j["optimizer"] = {{"learning_rate", t.optimizer.learning_rate}, {"beta1", t.optimizer.beta1},
                    {"beta2", t.optimizer.beta2}, {"epsilon", t.optimizer.epsilon},
                    {"weight_decay", t.optimizer.weight_decay}};
  auto flag = [](bool on) { return on ? "on" : "off"; };
  j["ablation"] = {{"replay", flag(t.ablation.replay)}, {"sal", flag(t.ablation.sal)},
                   {"nuclear", flag(t.ablation.nuclear)}, {"rcl", flag(t.ablation.rcl)},
                   {"pcl", flag(t.ablation.pcl)}, {"snl", flag(t.ablation.snl)}};
  j["trace"] = {{"class", c.trace_class ? ojson(*c.trace_class) : ojson(nullptr)}, {"top_k", c.trace_top_k}};
  j["metadata"] = {{"nuclear_reduction", "mean"}, {"forgetting_basis", "harmonic"}};
  return j;
}

void apply_ablation(continual::Ablation& a, std::string_view name) {
  if (name == "replay") a.replay = false;
  else if (name == "sal") a.sal = false;
  else if (name == "nuclear") a.nuclear = false;
  else if (name == "alignment") a.sal = a.nuclear = false;
  else if (name == "rcl") a.rcl = false;
  else if (name == "pcl") a.pcl = false;
  else if (name == "snl") a.snl = false;
  else throw ValidationError("--ablate: unknown mode '" + std::string(name) + "'");
}

}  // namespace cgzsl::cli
