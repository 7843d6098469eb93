#include "cgzsl/continual/replay.hpp"

#include <algorithm>

#include "cgzsl/errors.hpp"

namespace cgzsl::continual {

ReplaySet generate_replay(const model::CgzslModel& model, std::span<const int> classes,
                          std::size_t n_per_class, std::mt19937_64& rng, std::size_t attempt_factor) {
  ReplaySet out;
  out.features = Matrix(0, model.config().d_x);
  if (classes.empty() || n_per_class == 0) return out;

  const Matrix projections = model::project_attributes(model, model.encountered_attributes());
  const std::size_t budget = attempt_factor * n_per_class;

  for (int c : classes) {
    const std::size_t target = model.position_of(c);
    const Matrix attr = model.attributes_of(std::span<const int>(&c, 1));
    std::vector<Matrix> kept_rows;
    std::size_t kept = 0, drawn = 0;
    while (kept < n_per_class && drawn < budget) {
      const std::size_t n = std::min(n_per_class, budget - drawn);
      Matrix attrs(n, attr.cols());
      for (std::size_t i = 0; i < n; ++i) std::copy(attr.values().begin(), attr.values().end(), attrs.row(i).begin());
      const Matrix candidates = model::generate(model, model::sample_noise(n, model.config().d_z, rng), attrs);
      drawn += n;
      const auto verdict = model::classify(candidates, projections);
      std::vector<std::size_t> ok;
      for (std::size_t i = 0; i < n && kept + ok.size() < n_per_class; ++i) {
        if (verdict.predicted[i] == target) ok.push_back(i);
      }
      kept += ok.size();
      kept_rows.push_back(nn::select_rows(candidates, ok));
    }
    for (const auto& rows : kept_rows) out.features = nn::vconcat(out.features, rows);
    out.labels.insert(out.labels.end(), kept, c);
    out.counts[c] = kept;
    if (kept < n_per_class) out.shortfall.push_back({c, n_per_class, kept});
  }
  return out;
}

std::size_t count_misfiled(const model::CgzslModel& model, const ReplaySet& replay) {
  if (replay.empty()) return 0;
  if (replay.features.rows() != replay.labels.size()) throw ShapeError("replay: label count");
  const Matrix projections = model::project_attributes(model, model.encountered_attributes());
  const auto verdict = model::classify(replay.features, projections);
  std::size_t bad = 0;
  for (std::size_t i = 0; i < replay.labels.size(); ++i) {
    if (!model.knows(replay.labels[i]) || verdict.predicted[i] != model.position_of(replay.labels[i])) ++bad;
  }
  return bad;
}

}  // namespace cgzsl::continual
