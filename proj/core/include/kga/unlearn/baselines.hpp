#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kga/data/split.hpp"
#include "kga/models/model.hpp"
#include "kga/models/network.hpp"
#include "kga/models/training.hpp"
#include "kga/unlearn/kga.hpp"

namespace kga::unlearn {

/// Fresh training on D_r with the seed used for A_D, so an empty forget set
/// reproduces A_D exactly.
models::TrainResult retrain(const data::SplitSet& split, const models::ModelSpec& spec,
                            std::shared_ptr<const models::Vocabulary> vocabulary, const models::TrainConfig& cfg,
                            std::uint64_t seed);

/// Shard-isolated ensemble. Shard s holds `shards[s]` (instances in corpus
/// order) and, unless the shard is empty, a model trained on it alone with
/// `seeds[s]`. Inference averages the shard models' output distributions.
struct ShardedModel {
  models::ModelSpec spec;
  std::shared_ptr<const models::Vocabulary> vocabulary;
  models::TrainConfig train;
  std::vector<data::Corpus> shards;
  std::vector<std::optional<models::Model>> models;
  std::vector<std::uint64_t> seeds;

  std::size_t shard_count() const noexcept { return shards.size(); }
  /// Shard index holding `id`, or nullopt.
  std::optional<std::size_t> shard_of(std::string_view id) const;
  std::vector<std::vector<std::string>> assignment() const;
};

/// Balanced assignment: a seeded shuffle of the ids dealt round-robin, so
/// shard sizes differ by at most one. Ids keep corpus order within a shard.
std::vector<std::vector<std::string>> sisa_assignment(const data::Corpus& corpus, std::size_t shard_count,
                                                      std::uint64_t seed);

/// Trains one model per shard of an explicit assignment. Any shard count of
/// at least one is accepted; shard s uses seeds[s].
ShardedModel sisa_train_assigned(const data::Corpus& corpus, const std::vector<std::vector<std::string>>& assignment,
                                 const std::vector<std::uint64_t>& seeds, const models::ModelSpec& spec,
                                 std::shared_ptr<const models::Vocabulary> vocabulary, const models::TrainConfig& cfg);

/// Seeded balanced assignment plus per-shard seeds derived from `seed`.
/// Throws std::invalid_argument for fewer than two shards.
ShardedModel sisa_train(const data::Corpus& corpus, const models::ModelSpec& spec,
                        std::shared_ptr<const models::Vocabulary> vocabulary, const models::TrainConfig& cfg,
                        std::size_t shard_count, std::uint64_t seed);

/// Retrains, from scratch and with their original seeds, only the shards
/// holding a forgotten id. Throws std::invalid_argument for an unknown id.
ShardedModel sisa_forget(const ShardedModel& sharded, std::span<const std::string> forget_ids);

/// Indices of shards that sisa_forget would retrain.
std::vector<std::size_t> affected_shards(const ShardedModel& sharded, std::span<const std::string> forget_ids);

/// Aggregated log-probabilities: log of the mean shard distribution,
/// floored at 1e-300 before the log.
models::Scores sisa_score(const ShardedModel& sharded, std::span<const data::Instance* const> instances);
models::Scores sisa_score(const ShardedModel& sharded, const data::Corpus& corpus);

struct BadTeacherResult {
  models::Model model;
  std::vector<double> loss_trajectory;
  std::vector<GapPoint> teacher_gap;  // mean KL(A*(y) || teacher(y)) over D_f at validation steps
  std::size_t steps = 0;
  double seconds = 0.0;
};

/// The frozen teacher: an untrained model with a random output layer.
models::Model bad_teacher(const models::Model& original, std::uint64_t seed);

/// Runs badt_steps Adam steps on mean KL(A*(y) || teacher(y)) over a D_f
/// batch plus alpha times the retain loss on a D_r batch.
BadTeacherResult badt_unlearn(const models::Model& original, const data::SplitSet& split, const UnlearnConfig& cfg);

}  // namespace kga::unlearn
