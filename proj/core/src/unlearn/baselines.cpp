#include "kga/unlearn/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <unordered_set>

#include "kga/gradkit/adam.hpp"
#include "kga/unlearn/distance.hpp"
#include "kga/util/parallel.hpp"
#include "kga/util/seed.hpp"
#include "kga/util/stopwatch.hpp"
#include "objective.hpp"

namespace kga::unlearn {

using gradkit::DenseArray;
using models::EncodedInstance;
using models::Model;

models::TrainResult retrain(const data::SplitSet& split, const models::ModelSpec& spec,
                            std::shared_ptr<const models::Vocabulary> vocabulary, const models::TrainConfig& cfg,
                            std::uint64_t seed) {
  return models::train_supervised(spec, std::move(vocabulary), split.retain, cfg, seed);
}

std::optional<std::size_t> ShardedModel::shard_of(std::string_view id) const {
  for (std::size_t s = 0; s < shards.size(); ++s) {
    if (shards[s].contains(id)) return s;
  }
  return std::nullopt;
}

std::vector<std::vector<std::string>> ShardedModel::assignment() const {
  std::vector<std::vector<std::string>> out;
  for (const auto& shard : shards) out.push_back(shard.ids());
  return out;
}

std::vector<std::vector<std::string>> sisa_assignment(const data::Corpus& corpus, std::size_t shard_count,
                                                      std::uint64_t seed) {
  if (shard_count == 0) throw std::invalid_argument("sisa_assignment: shard count must be positive");
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> positions(shard_count);
  for (std::size_t k = 0; k < order.size(); ++k) positions[k % shard_count].push_back(order[k]);
  std::vector<std::vector<std::string>> out(shard_count);
  for (std::size_t s = 0; s < shard_count; ++s) {
    std::sort(positions[s].begin(), positions[s].end());
    for (std::size_t i : positions[s]) out[s].push_back(corpus[i].id);
  }
  return out;
}

ShardedModel sisa_train_assigned(const data::Corpus& corpus, const std::vector<std::vector<std::string>>& assignment,
                                 const std::vector<std::uint64_t>& seeds, const models::ModelSpec& spec,
                                 std::shared_ptr<const models::Vocabulary> vocabulary, const models::TrainConfig& cfg) {
  if (assignment.empty()) throw std::invalid_argument("sisa_train: no shards");
  if (seeds.size() != assignment.size()) throw std::invalid_argument("sisa_train: one seed per shard required");
  std::unordered_set<std::string> seen;
  std::size_t assigned = 0;
  for (const auto& shard : assignment) {
    for (const auto& id : shard) {
      if (!corpus.contains(id)) throw std::invalid_argument("sisa_train: id '" + id + "' is not in the corpus");
      if (!seen.insert(id).second) throw std::invalid_argument("sisa_train: id '" + id + "' assigned twice");
      ++assigned;
    }
  }
  if (assigned != corpus.size()) throw std::invalid_argument("sisa_train: shards do not cover the corpus");

  ShardedModel sharded{spec, vocabulary, cfg, {}, {}, seeds};
  for (std::size_t s = 0; s < assignment.size(); ++s) {
    sharded.shards.push_back(corpus.select(assignment[s], "shard " + std::to_string(s)));
  }
  sharded.models = util::ordered_map(assignment.size(), [&](std::size_t s) -> std::optional<Model> {
    if (sharded.shards[s].empty()) return std::nullopt;
    auto r = models::train_supervised(spec, vocabulary, sharded.shards[s], cfg, seeds[s]);
    if (r.diverged) throw std::runtime_error("sisa_train: shard " + std::to_string(s) + " diverged");
    return std::move(r.model);
  });
  return sharded;
}

ShardedModel sisa_train(const data::Corpus& corpus, const models::ModelSpec& spec,
                        std::shared_ptr<const models::Vocabulary> vocabulary, const models::TrainConfig& cfg,
                        std::size_t shard_count, std::uint64_t seed) {
  if (shard_count < 2) throw std::invalid_argument("sisa_train: shard count must be at least 2");
  if (corpus.empty()) throw std::invalid_argument("sisa_train: empty corpus");
  std::vector<std::uint64_t> seeds;
  for (std::size_t s = 0; s < shard_count; ++s) seeds.push_back(util::derive_seed(seed, util::stage::kSisa, s + 1));
  return sisa_train_assigned(corpus, sisa_assignment(corpus, shard_count, util::derive_seed(seed, util::stage::kSisa, 0)),
                             seeds, spec, std::move(vocabulary), cfg);
}

std::vector<std::size_t> affected_shards(const ShardedModel& sharded, std::span<const std::string> forget_ids) {
  std::vector<char> hit(sharded.shard_count(), 0);
  for (const auto& id : forget_ids) {
    const auto s = sharded.shard_of(id);
    if (!s) throw std::invalid_argument("sisa_forget: id '" + id + "' is not in any shard");
    hit[*s] = 1;
  }
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < hit.size(); ++s) {
    if (hit[s]) out.push_back(s);
  }
  return out;
}

ShardedModel sisa_forget(const ShardedModel& sharded, std::span<const std::string> forget_ids) {
  const std::vector<std::size_t> affected = affected_shards(sharded, forget_ids);
  ShardedModel out = sharded;
  for (std::size_t s : affected) {
    out.shards[s] = sharded.shards[s].exclude(forget_ids, sharded.shards[s].provenance());
  }
  const auto retrained = util::ordered_map(affected.size(), [&](std::size_t k) -> std::optional<Model> {
    const std::size_t s = affected[k];
    if (out.shards[s].empty()) return std::nullopt;
    auto r = models::train_supervised(out.spec, out.vocabulary, out.shards[s], out.train, out.seeds[s]);
    if (r.diverged) throw std::runtime_error("sisa_forget: shard " + std::to_string(s) + " diverged");
    return std::move(r.model);
  });
  for (std::size_t k = 0; k < affected.size(); ++k) out.models[affected[k]] = retrained[k];
  return out;
}

models::Scores sisa_score(const ShardedModel& sharded, std::span<const data::Instance* const> instances) {
  std::vector<models::Scores> parts;
  for (const auto& m : sharded.models) {
    if (m) parts.push_back(models::score(*m, instances));
  }
  if (parts.empty()) throw std::logic_error("sisa_score: every shard is empty");
  models::Scores out = parts.front();
  auto agg = out.log_probs.data();
  const double n = static_cast<double>(parts.size());
  for (std::size_t k = 0; k < agg.size(); ++k) {
    double mean = 0.0;
    for (const auto& p : parts) mean += std::exp(p.log_probs[k]);
    agg[k] = std::log(std::max(mean / n, 1e-300));
  }
  return out;
}

models::Scores sisa_score(const ShardedModel& sharded, const data::Corpus& corpus) {
  const auto ptrs = corpus.pointers();
  return sisa_score(sharded, std::span<const data::Instance* const>(ptrs));
}

Model bad_teacher(const Model& original, std::uint64_t seed) {
  return models::initialize(original.spec(), original.shared_vocabulary(),
                            util::derive_seed(seed, util::stage::kTeacher), models::OutputInit::kRandom);
}

BadTeacherResult badt_unlearn(const Model& original, const data::SplitSet& split, const UnlearnConfig& cfg) {
  cfg.validate();
  if (split.forget.empty()) throw std::invalid_argument("badt_unlearn: empty forget set");
  if (split.retain.empty() && cfg.alpha > 0.0) throw std::invalid_argument("badt_unlearn: empty retain set");
  util::Stopwatch clock;
  const Model teacher = bad_teacher(original, cfg.seed);
  const auto forget_ptrs = split.forget.pointers();
  const auto retain_ptrs = split.retain.pointers();
  const std::vector<EncodedInstance> forget = models::encode_all(original, forget_ptrs);
  const std::vector<EncodedInstance> retain = models::encode_all(original, retain_ptrs);
  const models::Scores teacher_scores = models::score(teacher, std::span<const EncodedInstance>(forget));

  BadTeacherResult result{original, {}, {}, 0, 0.0};
  Model& star = result.model;
  auto teacher_gap = [&] {
    return mean_gap(models::score(star, std::span<const EncodedInstance>(forget)), teacher_scores);
  };
  result.teacher_gap.push_back({0, teacher_gap()});

  gradkit::AdamState state(gradkit::AdamConfig{.learning_rate = cfg.learning_rate}, star.parameters());
  const gradkit::Schedule schedule = gradkit::constant_schedule();
  std::mt19937_64 rng(util::derive_seed(cfg.seed, util::stage::kTeacher, 1));
  for (std::size_t step = 1; step <= cfg.badt_steps; ++step) {
    const auto ys = detail::sample_indices(forget.size(), cfg.batch_size, rng);
    std::vector<detail::ObjectiveTerm> terms;
    terms.push_back({detail::pick(forget, ys), detail::gather_rows(teacher_scores, ys), std::nullopt, 1.0});
    if (cfg.alpha > 0.0) {
      auto batch = detail::pick(retain, detail::sample_indices(retain.size(), cfg.batch_size, rng));
      DenseArray reference = models::score(original, std::span<const EncodedInstance>(batch)).log_probs;
      terms.push_back({std::move(batch), std::move(reference), std::nullopt, cfg.alpha});
    }
    const LossGradient total = detail::kl_objective(star, std::move(terms));
    if (!std::isfinite(total.value) || !gradkit::adam_step(star.mutable_parameters(), total.gradient, state, schedule)) {
      throw std::runtime_error("badt_unlearn: non-finite loss at step " + std::to_string(step));
    }
    result.loss_trajectory.push_back(total.value);
    result.steps = step;
    if (step % cfg.valid_steps == 0 || step == cfg.badt_steps) result.teacher_gap.push_back({step, teacher_gap()});
  }
  result.seconds = clock.seconds();
  return result;
}

}  // namespace kga::unlearn
