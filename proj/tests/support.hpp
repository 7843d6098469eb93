#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <functional>
#include <random>
#include <vector>

#include "cgzsl/nn/matrix.hpp"
#include "cgzsl/nn/tape.hpp"

namespace testing {

using cgzsl::nn::Matrix;
using cgzsl::nn::Tape;
using cgzsl::nn::Var;

inline Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (double& v : m.values()) v = u(rng);
  return m;
}

/// Builds a scalar loss from parameter nodes registered on a fresh tape.
using LossBuilder = std::function<Var(Tape&, const std::vector<Var>&)>;

inline constexpr double kFdStep = 1e-5;

/// |analytic - numeric| / max(|analytic|, |numeric|, floor), maximized over
/// every entry of every parameter; numeric is the central difference.
inline double max_grad_rel_error(std::vector<Matrix> params, const LossBuilder& build, double floor = 1e-3) {
  std::vector<Matrix> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& p : params) vars.push_back(tape.parameter(p));
    const Var loss = build(tape, vars);
    tape.backward(loss);
    for (Var v : vars) analytic.push_back(tape.grad(v));
  }
  auto eval = [&]() {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& p : params) vars.push_back(tape.parameter(p));
    return build(tape, vars).scalar();
  };
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (std::size_t i = 0; i < params[k].size(); ++i) {
      double& x = params[k].values()[i];
      const double saved = x;
      x = saved + kFdStep;
      const double up = eval();
      x = saved - kFdStep;
      const double down = eval();
      x = saved;
      const double numeric = (up - down) / (2.0 * kFdStep);
      const double a = analytic[k].values()[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), floor});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("cgzsl_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
