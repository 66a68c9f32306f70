#include "kga/models/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "kga/gradkit/graph.hpp"
#include "kga/models/network.hpp"
#include "kga/util/seed.hpp"

namespace kga::models {

using gradkit::DenseArray;

gradkit::Schedule TrainConfig::make_schedule() const {
  return schedule == ScheduleKind::kInverseSqrt ? gradkit::inverse_sqrt_schedule(warmup) : gradkit::constant_schedule();
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw std::invalid_argument("train config: batch size must be positive");
  if (!(adam.learning_rate > 0.0)) throw std::invalid_argument("train config: learning rate must be positive");
  if (schedule == ScheduleKind::kInverseSqrt && warmup == 0) {
    throw std::invalid_argument("train config: warmup must be positive");
  }
}

LossGradient cross_entropy(const Model& model, std::span<const EncodedInstance> batch) {
  gradkit::Graph g;
  const gradkit::NodeId lp = build_log_probs(g, model, batch);
  const RowLayout layout = layout_of(batch);
  DenseArray weights = DenseArray::matrix(layout.rows(), g.cols(lp));
  const double n = static_cast<double>(batch.size());
  for (std::size_t i = 0; i < layout.instances(); ++i) {
    const std::size_t len = layout.offsets[i + 1] - layout.offsets[i];
    for (std::size_t r = layout.offsets[i]; r < layout.offsets[i + 1]; ++r) {
      weights(r, layout.gold[r]) = -1.0 / (n * static_cast<double>(len));
    }
  }
  const gradkit::NodeId loss = g.sum(g.mul(lp, g.constant(std::move(weights))));
  const gradkit::Evaluation ev = gradkit::forward(g, gradkit::Bindings{{}, model.parameters()});
  return LossGradient{ev.scalar(loss), gradkit::backward(ev, loss)};
}

TrainResult train_from(Model model, const data::Corpus& corpus, const TrainConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (corpus.empty()) throw std::invalid_argument("train_supervised: empty corpus");
  std::vector<EncodedInstance> encoded;
  encoded.reserve(corpus.size());
  for (const auto& inst : corpus) encoded.push_back(encode(model, inst));

  TrainResult result;
  gradkit::AdamState state(cfg.adam, model.parameters());
  const gradkit::Schedule schedule = cfg.make_schedule();
  std::vector<std::size_t> order(encoded.size());
  std::vector<EncodedInstance> batch;
  std::vector<DenseArray> previous;

  for (std::size_t epoch = 0; epoch < cfg.epochs && result.steps < cfg.max_steps; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(util::derive_seed(seed, util::stage::kShuffle, epoch));
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t begin = 0; begin < order.size() && result.steps < cfg.max_steps; begin += cfg.batch_size) {
      batch.clear();
      for (std::size_t k = begin; k < std::min(order.size(), begin + cfg.batch_size); ++k) {
        batch.push_back(encoded[order[k]]);
      }
      LossGradient lg;
      try {
        lg = cross_entropy(model, batch);
      } catch (const gradkit::NonFiniteError&) {
        result.diverged = true;
      }
      if (!result.diverged && !std::isfinite(lg.value)) result.diverged = true;
      if (result.diverged) {
        // The current parameters produce a non-finite loss; fall back to the
        // state before the last update.
        if (!previous.empty()) std::copy(previous.begin(), previous.end(), model.mutable_parameters().begin());
        result.model = std::move(model);
        return result;
      }
      previous.assign(model.parameters().begin(), model.parameters().end());
      if (!gradkit::adam_step(model.mutable_parameters(), lg.gradient, state, schedule)) {
        result.diverged = true;
        result.loss_trajectory.push_back(lg.value);
        result.model = std::move(model);
        return result;
      }
      result.loss_trajectory.push_back(lg.value);
      ++result.steps;
    }
  }
  result.model = std::move(model);
  return result;
}

TrainResult train_supervised(const ModelSpec& spec, std::shared_ptr<const Vocabulary> vocabulary,
                             const data::Corpus& corpus, const TrainConfig& cfg, std::uint64_t seed) {
  if (corpus.empty()) throw std::invalid_argument("train_supervised: empty corpus");
  Model model = initialize(spec, std::move(vocabulary), util::derive_seed(seed, util::stage::kInit));
  return train_from(std::move(model), corpus, cfg, seed);
}

}  // namespace kga::models
