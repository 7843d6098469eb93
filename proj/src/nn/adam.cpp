#include "cgzsl/nn/adam.hpp"

#include <cmath>

#include "cgzsl/errors.hpp"

namespace cgzsl::nn {

void Adam::step(std::span<Matrix* const> params, std::span<const Matrix> grads) {
  if (params.size() != grads.size()) throw ShapeError("adam: parameter/gradient count mismatch");
  if (m_.empty()) {
    for (const Matrix* p : params) {
      m_.emplace_back(p->rows(), p->cols());
      v_.emplace_back(p->rows(), p->cols());
    }
  }
  if (m_.size() != params.size()) throw ShapeError("adam: parameter count changed");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->same_shape(grads[i]) || !params[i]->same_shape(m_[i])) {
      throw ShapeError("adam: shape mismatch for parameter " + std::to_string(i));
    }
  }

  ++step_;
  const auto& o = options_;
  const double t = static_cast<double>(step_);
  const double bc1 = 1.0 - std::pow(o.beta1, t);
  const double bc2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->values();
    auto g = grads[i].values();
    auto m = m_[i].values();
    auto v = v_[i].values();
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double gk = g[k] + o.weight_decay * p[k];
      m[k] = o.beta1 * m[k] + (1.0 - o.beta1) * gk;
      v[k] = o.beta2 * v[k] + (1.0 - o.beta2) * gk * gk;
      const double m_hat = m[k] / bc1;
      const double v_hat = v[k] / bc2;
      p[k] -= o.learning_rate * m_hat / (std::sqrt(v_hat) + o.epsilon);
    }
  }
}

}  // namespace cgzsl::nn
