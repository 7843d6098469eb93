#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cgzsl/nn/matrix.hpp"

namespace cgzsl::nn {

struct AdamOptions {
  double learning_rate = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 1e-5;  // coupled L2: added to the gradient
};

/// Adam with bias correction. Moments are allocated on the first step and
/// must keep the same shapes afterwards.
class Adam {
 public:
  Adam() = default;
  explicit Adam(AdamOptions options) : options_(options) {}

  void step(std::span<Matrix* const> params, std::span<const Matrix> grads);

  const AdamOptions& options() const noexcept { return options_; }
  std::uint64_t step_count() const noexcept { return step_; }
  const std::vector<Matrix>& first_moments() const noexcept { return m_; }
  const std::vector<Matrix>& second_moments() const noexcept { return v_; }

 private:
  AdamOptions options_{};
  std::uint64_t step_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

}  // namespace cgzsl::nn
