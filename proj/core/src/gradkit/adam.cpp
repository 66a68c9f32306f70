#include "kga/gradkit/adam.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kga::gradkit {

Schedule constant_schedule() {
  return [](std::size_t) { return 1.0; };
}

Schedule inverse_sqrt_schedule(std::size_t warmup) {
  if (warmup == 0) {
    throw std::invalid_argument("inverse_sqrt_schedule: warmup must be positive");
  }
  return [warmup](std::size_t step) {
    const double t = static_cast<double>(std::max<std::size_t>(step, 1));
    const double w = static_cast<double>(warmup);
    return std::min(t / w, 1.0) * std::sqrt(w) / std::sqrt(std::max(t, w));
  };
}

AdamState::AdamState(AdamConfig config, std::span<const DenseArray> params) : config_(config) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const DenseArray& p : params) {
    m_.emplace_back(p.shape(), 0.0);
    v_.emplace_back(p.shape(), 0.0);
  }
}

bool adam_step(std::span<DenseArray> params, std::span<const DenseArray> grads, AdamState& state,
               const Schedule& schedule) {
  if (params.size() != grads.size() || params.size() != state.m_.size()) {
    throw std::invalid_argument("adam_step: parameter, gradient and state counts differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].same_shape(grads[i]) || !params[i].same_shape(state.m_[i])) {
      throw std::invalid_argument("adam_step: shape mismatch at parameter " + std::to_string(i));
    }
    if (!grads[i].all_finite()) {
      return false;
    }
  }

  const AdamConfig& cfg = state.config_;
  const std::size_t t = ++state.step_;
  const double rate = cfg.learning_rate * schedule(t);
  const double correction1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double correction2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  // m_hat / (sqrt(v_hat) + eps) with the bias corrections folded into constants.
  const double step_size = correction1 > 0.0 ? rate / correction1 : rate;
  const double v_scale = correction2 > 0.0 ? 1.0 / std::sqrt(correction2) : 1.0;
  const double b1 = cfg.beta1;
  const double b2 = cfg.beta2;
  const double eps = cfg.epsilon;
  for (std::size_t i = 0; i < params.size(); ++i) {
    double* p = params[i].data().data();
    const double* g = grads[i].data().data();
    double* m = state.m_[i].data().data();
    double* v = state.v_[i].data().data();
    const std::size_t n = params[i].size();
    for (std::size_t k = 0; k < n; ++k) {
      m[k] = b1 * m[k] + (1.0 - b1) * g[k];
      v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
      p[k] -= step_size * m[k] / (std::sqrt(v[k]) * v_scale + eps);
    }
  }
  return true;
}

}  // namespace kga::gradkit
