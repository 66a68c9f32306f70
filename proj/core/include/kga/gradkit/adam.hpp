#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "kga/gradkit/dense_array.hpp"

namespace kga::gradkit {

/// Maps a 1-based step index to a multiplier on the base learning rate.
using Schedule = std::function<double(std::size_t step)>;

Schedule constant_schedule();

/// Linear warmup to the base rate, then decay with the inverse square root
/// of the step: min(t/warmup, 1) * sqrt(warmup / max(t, warmup)).
Schedule inverse_sqrt_schedule(std::size_t warmup);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class AdamState {
 public:
  AdamState() = default;
  AdamState(AdamConfig config, std::span<const DenseArray> params);

  const AdamConfig& config() const noexcept { return config_; }
  std::size_t step() const noexcept { return step_; }
  const std::vector<DenseArray>& first_moment() const noexcept { return m_; }
  const std::vector<DenseArray>& second_moment() const noexcept { return v_; }

 private:
  friend bool adam_step(std::span<DenseArray>, std::span<const DenseArray>, AdamState&, const Schedule&);
  AdamConfig config_;
  std::size_t step_ = 0;
  std::vector<DenseArray> m_;
  std::vector<DenseArray> v_;
};

/// One bias-corrected Adam update in place. Returns false, leaving params
/// and state untouched, when any gradient entry is non-finite.
bool adam_step(std::span<DenseArray> params, std::span<const DenseArray> grads, AdamState& state,
               const Schedule& schedule);

}  // namespace kga::gradkit
