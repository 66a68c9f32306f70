#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "kga/data/corpus.hpp"
#include "kga/gradkit/adam.hpp"
#include "kga/models/model.hpp"

namespace kga::models {

enum class ScheduleKind { kConstant, kInverseSqrt };

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  std::size_t max_steps = std::numeric_limits<std::size_t>::max();
  gradkit::AdamConfig adam{.learning_rate = 1e-2};
  ScheduleKind schedule = ScheduleKind::kInverseSqrt;
  std::size_t warmup = 100;

  gradkit::Schedule make_schedule() const;
  void validate() const;
};

struct TrainResult {
  Model model;
  std::vector<double> loss_trajectory;  // batch loss before each update
  std::size_t steps = 0;
  bool diverged = false;  // loss or gradient went non-finite; model is the last finite state
};

/// A scalar objective and its gradient per parameter slot.
struct LossGradient {
  double value = 0.0;
  std::vector<gradkit::DenseArray> gradient;
};

/// Mean over instances of the per-instance mean negative log-likelihood of
/// the gold tokens (one token for a classifier).
LossGradient cross_entropy(const Model& model, std::span<const EncodedInstance> batch);

/// Fresh initialization from derive_seed(seed, init) followed by minibatch
/// Adam over `corpus`, reshuffled each epoch from the same root seed.
/// Throws std::invalid_argument for an empty corpus.
TrainResult train_supervised(const ModelSpec& spec, std::shared_ptr<const Vocabulary> vocabulary,
                             const data::Corpus& corpus, const TrainConfig& cfg, std::uint64_t seed);

/// Continues training an existing model.
TrainResult train_from(Model model, const data::Corpus& corpus, const TrainConfig& cfg, std::uint64_t seed);

}  // namespace kga::models
