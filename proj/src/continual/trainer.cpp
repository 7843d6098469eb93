#include "cgzsl/continual/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <set>

#include "cgzsl/errors.hpp"
#include "cgzsl/nn/tape.hpp"

namespace cgzsl::continual {

using nn::Tape;
using nn::Var;

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ValidationError(what);
  };
  require(batch_size >= 1, "batch_size must be >= 1");
  require(replay_per_class >= 1, "replay_per_class must be >= 1");
  weights.validate();
  require(std::isfinite(alignment.epsilon) && alignment.epsilon >= 0.0, "alignment.epsilon must be finite and >= 0");
  require(alignment.neighbors >= 1, "alignment.neighbors must be >= 1");
  const auto& o = optimizer;
  require(std::isfinite(o.learning_rate) && o.learning_rate > 0.0, "optimizer.learning_rate must be > 0");
  require(o.beta1 >= 0.0 && o.beta1 < 1.0, "optimizer.beta1 must be in [0, 1)");
  require(o.beta2 >= 0.0 && o.beta2 < 1.0, "optimizer.beta2 must be in [0, 1)");
  require(std::isfinite(o.epsilon) && o.epsilon > 0.0, "optimizer.epsilon must be > 0");
  require(std::isfinite(o.weight_decay) && o.weight_decay >= 0.0, "optimizer.weight_decay must be >= 0");
}

namespace {

// Cyclic labels covering every class at least once.
std::vector<int> cycle(const std::vector<int>& classes, std::size_t count) {
  std::vector<int> out;
  if (classes.empty()) return out;
  count = std::max(count, classes.size());
  for (std::size_t i = 0; i < count; ++i) out.push_back(classes[i % classes.size()]);
  return out;
}

std::vector<Matrix> grads_of(Tape& tape, const std::vector<Var>& params) {
  std::vector<Matrix> g;
  g.reserve(params.size());
  for (Var p : params) g.push_back(tape.grad(p));
  return g;
}

void check(double v, const char* name) {
  if (!std::isfinite(v)) throw NumericError(name);
}

}  // namespace

std::vector<EpochLoss> train_task(model::CgzslModel& model, const TaskData& data, const ReplaySet& replay,
                                  const TrainConfig& cfg, OptimizerState& opt, std::mt19937_64& rng,
                                  const BatchObserver& observer) {
  cfg.validate();
  const auto& mc = model.config();
  if (data.features.rows() + replay.size() == 0) throw ContractError("train_task: empty training set");
  if (data.features.rows() != 0 && data.features.cols() != mc.d_x) throw ShapeError("train_task: feature width");
  if (data.labels.size() != data.features.rows() || data.source_rows.size() != data.features.rows()) {
    throw ShapeError("train_task: label/source count mismatch");
  }
  for (int c : data.labels)
    if (!model.knows(c) || !model.is_seen(c)) throw ContractError("train_task: real row of non-seen class " + std::to_string(c));
  for (int c : replay.labels)
    if (!model.knows(c) || !model.is_seen(c)) throw ContractError("train_task: replay row of non-seen class " + std::to_string(c));

  std::vector<EpochLoss> trace;
  if (cfg.epochs == 0) return trace;

  // Pool real and replayed rows; everything is compared on the unit sphere.
  const Matrix x_all = nn::l2_normalize_rows(
      replay.empty() ? data.features : nn::vconcat(data.features, replay.features));
  std::vector<int> y_all = data.labels;
  y_all.insert(y_all.end(), replay.labels.begin(), replay.labels.end());
  std::vector<std::int64_t> src_all = data.source_rows;
  src_all.insert(src_all.end(), replay.size(), -1);

  const std::vector<int>& encountered = model.encountered_classes();
  const std::vector<int>& seen = model.seen_classes();
  const std::vector<int> unseen = model.unseen_classes();
  const std::size_t N = encountered.size();
  const Matrix attrs_all = model.encountered_attributes();

  auto enc_pos = [&](const std::vector<int>& ids) {
    std::vector<std::size_t> out;
    out.reserve(ids.size());
    for (int c : ids) out.push_back(model.position_of(c));
    return out;
  };
  std::map<int, std::size_t> seen_slot;
  for (std::size_t k = 0; k < seen.size(); ++k) seen_slot[seen[k]] = k;
  auto seen_pos = [&](const std::vector<int>& ids) {
    std::vector<std::size_t> out;
    out.reserve(ids.size());
    for (int c : ids) out.push_back(seen_slot.at(c));
    return out;
  };
  const std::vector<std::size_t> seen_rows = enc_pos(seen);

  // Real class means over current and replayed rows.
  const std::set<int> with_data_set(y_all.begin(), y_all.end());
  const std::vector<int> with_data(with_data_set.begin(), with_data_set.end());
  const Matrix real_means = losses::class_means(x_all, y_all, with_data);
  const std::vector<std::size_t> with_data_rows = enc_pos(with_data);

  // Generated pools: seen and unseen, cyclic so every class is represented.
  const std::size_t g = cfg.generated_count();
  const std::vector<int> labels_s = cycle(seen, g);
  const std::vector<int> labels_u = cycle(unseen, g);
  const Matrix attrs_s = model.attributes_of(labels_s);
  const Matrix attrs_u = model.attributes_of(labels_u);
  const std::vector<std::size_t> labels_s_enc = enc_pos(labels_s), labels_s_seen = seen_pos(labels_s);
  const std::vector<std::size_t> labels_u_enc = enc_pos(labels_u);
  std::vector<std::size_t> gen_group = labels_s_enc;
  gen_group.insert(gen_group.end(), labels_u_enc.begin(), labels_u_enc.end());

  const bool use_sal = cfg.ablation.sal && N >= 2;
  const bool use_snl = cfg.ablation.snl && !unseen.empty();
  std::optional<losses::Neighborhoods> neighbors;
  losses::AlignmentConfig align = cfg.alignment;
  if (use_sal) {
    align.neighbors = std::min(align.neighbors, N - 1);
    neighbors = losses::semantic_neighbors(attrs_all, align.neighbors);
  }

  nn::DenseNet& gen = model.generator();
  nn::DenseNet& disc = model.discriminator();
  if (opt.generator.step_count() == 0) opt.generator = nn::Adam(cfg.optimizer);
  if (opt.discriminator.step_count() == 0) opt.discriminator = nn::Adam(cfg.optimizer);
  const double temp = mc.temperature;
  const auto& w = cfg.weights;

  std::vector<std::size_t> order(x_all.rows());
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    EpochLoss sum;
    std::size_t steps = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size, ++steps) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                         order.begin() + static_cast<std::ptrdiff_t>(end));
      const Matrix x_b = nn::select_rows(x_all, idx);
      std::vector<int> y_b;
      std::vector<std::int64_t> src_b;
      for (std::size_t i : idx) {
        y_b.push_back(y_all[i]);
        src_b.push_back(src_all[i]);
      }
      if (observer) observer({epoch, steps, src_b, y_b});
      const std::vector<std::size_t> y_enc = enc_pos(y_b), y_seen = seen_pos(y_b);

      const Matrix gin_s = nn::hconcat(model::sample_noise(labels_s.size(), mc.d_z, rng), attrs_s);
      const Matrix gin_u = nn::hconcat(model::sample_noise(labels_u.size(), mc.d_z, rng), attrs_u);
      const Matrix fake_s_val = gen.forward(gin_s);
      const Matrix fake_u_val = labels_u.empty() ? Matrix(0, mc.d_x) : gen.forward(gin_u);

      // Discriminator step.
      double nuclear_value = 0.0;
      {
        Tape tape;
        const std::vector<Var> params = disc.bind(tape);
        const Var proj = disc.forward(tape.constant(attrs_all), params);
        const Var x_real = tape.constant(x_b);
        const auto gan = losses::gan_loss(x_real, nn::select_rows(proj, y_enc), tape.constant(fake_s_val),
                                          nn::select_rows(proj, labels_s_enc));
        const Var zero = tape.constant(Matrix(1, 1, 0.0));
        losses::DiscriminatorParts<Var> parts{gan.d_loss, zero, zero};
        if (cfg.ablation.rcl) {
          parts.rcl = losses::classification_loss(x_real, y_seen, nn::select_rows(proj, seen_rows), temp);
        }
        if (use_snl) parts.snl = losses::classification_loss(tape.constant(fake_u_val), labels_u_enc, proj, temp);
        Var objective = losses::total_d_loss(parts, w);
        sum.gan_d += parts.gan.scalar();
        sum.rcl += parts.rcl.scalar();
        sum.snl += parts.snl.scalar();
        sum.d_total += objective.scalar();
        if (cfg.ablation.nuclear) {
          const Var nuc = losses::nuclear_loss(real_means, nn::select_rows(proj, with_data_rows));
          nuclear_value = nuc.scalar();
          check(nuclear_value, "L_nuclear");
          objective = objective + w.alignment * nuc;
        }
        tape.backward(objective);
        const auto grads = grads_of(tape, params);
        const auto targets = disc.parameters();
        opt.discriminator.step(targets, grads);
      }

      // Generator step against the updated discriminator.
      {
        Tape tape;
        const Matrix proj_val = model::project_attributes(model, attrs_all);
        const std::vector<Var> params = gen.bind(tape);
        const Var fake_s = gen.forward(tape.constant(gin_s), params);
        const auto gan = losses::gan_loss(tape.constant(x_b), tape.constant(nn::select_rows(proj_val, y_enc)), fake_s,
                                          tape.constant(nn::select_rows(proj_val, labels_s_enc)));
        const Var zero = tape.constant(Matrix(1, 1, 0.0));
        losses::GeneratorParts<Var> parts{gan.g_loss, zero, zero};
        if (cfg.ablation.pcl) {
          parts.pcl = losses::classification_loss(fake_s, labels_s_seen,
                                                  tape.constant(nn::select_rows(proj_val, seen_rows)), temp);
        }
        if (use_sal) {
          const Var fake_all = labels_u.empty() ? fake_s : nn::vconcat(fake_s, gen.forward(tape.constant(gin_u), params));
          const Var gen_means = nn::segment_mean(nn::l2_normalize_rows(fake_all), gen_group, N);
          Matrix reference = gen_means.value();
          for (std::size_t k = 0; k < with_data_rows.size(); ++k) {
            const auto src = real_means.row(k);
            std::copy(src.begin(), src.end(), reference.row(with_data_rows[k]).begin());
          }
          parts.iba = losses::semantic_alignment_loss(gen_means, reference, *neighbors, align);
        }
        const Var objective = losses::total_g_loss(parts, w);
        sum.gan_g += parts.gan.scalar();
        sum.pcl += parts.pcl.scalar();
        sum.sal += parts.iba.scalar();
        sum.nuclear += nuclear_value;
        sum.g_total += objective.scalar() + w.alignment * nuclear_value;
        tape.backward(objective);
        const auto grads = grads_of(tape, params);
        const auto targets = gen.parameters();
        opt.generator.step(targets, grads);
      }
    }
    const double n = static_cast<double>(steps);
    for (double* v : {&sum.d_total, &sum.g_total, &sum.gan_d, &sum.gan_g, &sum.rcl, &sum.snl, &sum.pcl, &sum.sal,
                      &sum.nuclear}) {
      *v /= n;
    }
    trace.push_back(sum);
  }
  return trace;
}

}  // namespace cgzsl::continual
