#pragma once

#include <cstddef>
#include <map>
#include <random>
#include <span>
#include <vector>

#include "cgzsl/model/model.hpp"

namespace cgzsl::continual {

using nn::Matrix;

struct Shortfall {
  int class_id = 0;
  std::size_t requested = 0;
  std::size_t kept = 0;

  friend bool operator==(const Shortfall&, const Shortfall&) = default;
};

/// Generated features of previously seen classes that survived the filter.
struct ReplaySet {
  Matrix features;          // rows x d_x
  std::vector<int> labels;  // class id per row
  std::map<int, std::size_t> counts;
  std::vector<Shortfall> shortfall;  // classes that ran out of attempts

  std::size_t size() const noexcept { return labels.size(); }
  bool empty() const noexcept { return labels.empty(); }
};

inline constexpr std::size_t kDefaultAttemptFactor = 10;

/// For each class draws G(z, a_c) in rounds of n_per_class candidates and keeps
/// those that classify to c against the projections of every encountered
/// class, until n_per_class are kept or attempt_factor * n_per_class
/// candidates were drawn.
ReplaySet generate_replay(const model::CgzslModel& model, std::span<const int> classes,
                          std::size_t n_per_class, std::mt19937_64& rng,
                          std::size_t attempt_factor = kDefaultAttemptFactor);

/// Number of rows that do not classify to their own label under `model`.
std::size_t count_misfiled(const model::CgzslModel& model, const ReplaySet& replay);

}  // namespace cgzsl::continual
