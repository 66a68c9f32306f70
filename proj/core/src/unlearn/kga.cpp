#include "kga/unlearn/kga.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "kga/gradkit/adam.hpp"
#include "kga/models/network.hpp"
#include "kga/unlearn/distance.hpp"
#include "kga/util/seed.hpp"
#include "kga/util/stopwatch.hpp"
#include "objective.hpp"

namespace kga::unlearn {

using gradkit::DenseArray;
using models::EncodedInstance;
using models::Model;

namespace {

std::vector<EncodedInstance> encode_corpus(const Model& model, const data::Corpus& corpus) {
  const auto ptrs = corpus.pointers();
  return models::encode_all(model, ptrs);
}

void require_support(const Model& a, const Model& b, const char* what) {
  if (!a.same_support(b)) throw std::invalid_argument(std::string(what) + ": models do not share a support");
}

// D_f (or D_n) plus an independent random share of D_r.
data::Corpus helper_corpus(const data::Corpus& base, const data::Corpus& retain, const HelperConfig& cfg,
                           std::uint64_t seed, const char* name) {
  std::vector<data::Instance> instances(base.begin(), base.end());
  if (cfg.augment && !retain.empty()) {
    const auto count = static_cast<std::size_t>(std::llround(cfg.augment_fraction * static_cast<double>(retain.size())));
    std::vector<std::size_t> order(retain.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(std::min(count, order.size()));
    std::sort(order.begin(), order.end());
    for (std::size_t i : order) instances.push_back(retain[i]);
  }
  return data::Corpus(base.kind(), std::move(instances), name);
}

}  // namespace

const char* termination_name(Termination t) noexcept {
  return t == Termination::kGapMet ? "gap-met" : "step-cap";
}

void UnlearnConfig::validate() const {
  if (!(sigma > 0.0 && sigma < 1.0)) throw std::invalid_argument("unlearn config: sigma must lie in (0, 1)");
  if (!(alpha >= 0.0)) throw std::invalid_argument("unlearn config: alpha must be non-negative");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("unlearn config: learning rate must be positive");
  if (batch_size == 0 || max_steps == 0 || inner_steps == 0 || valid_steps == 0 || badt_steps == 0) {
    throw std::invalid_argument("unlearn config: step limits and batch size must be positive");
  }
}

Helpers train_helpers(const data::SplitSet& split, const models::ModelSpec& spec,
                      std::shared_ptr<const models::Vocabulary> vocabulary, const HelperConfig& cfg,
                      std::uint64_t seed) {
  if (split.forget.empty()) throw std::invalid_argument("train_helpers: empty forget set");
  if (split.extra.empty()) throw std::invalid_argument("train_helpers: empty extra set");
  util::Stopwatch clock;
  const data::Corpus forget = helper_corpus(split.forget, split.retain, cfg, util::derive_seed(seed, util::stage::kHelpers, 0), "A_f data");
  const data::Corpus extra = helper_corpus(split.extra, split.retain, cfg, util::derive_seed(seed, util::stage::kHelpers, 1), "A_n data");
  auto f = models::train_supervised(spec, vocabulary, forget, cfg.train, util::derive_seed(seed, util::stage::kHelpers, 2));
  if (f.diverged) throw std::runtime_error("train_helpers: A_f training diverged");
  auto n = models::train_supervised(spec, vocabulary, extra, cfg.train, util::derive_seed(seed, util::stage::kHelpers, 3));
  if (n.diverged) throw std::runtime_error("train_helpers: A_n training diverged");
  return Helpers{std::move(f.model), std::move(n.model), clock.seconds()};
}

LossGradient alignment_loss(const Model& a_star, const Model& a_f, const Model& a_d, const Model& a_n,
                            std::span<const data::Instance* const> ys, std::span<const data::Instance* const> zs) {
  if (ys.empty() || ys.size() != zs.size()) {
    throw std::invalid_argument("alignment_loss: need a non-empty batch of (y, z) pairs");
  }
  require_support(a_star, a_f, "alignment_loss");
  require_support(a_star, a_d, "alignment_loss");
  require_support(a_star, a_n, "alignment_loss");
  const std::vector<double> targets = instance_distances(models::score(a_d, zs), models::score(a_n, zs));
  const std::vector<EncodedInstance> batch = models::encode_all(a_star, ys);
  DenseArray reference = models::score(a_f, std::span<const EncodedInstance>(batch)).log_probs;
  return detail::kl_objective(a_star, batch, std::move(reference), targets);
}

LossGradient retain_loss(const Model& a_star, const Model& a_d, std::span<const data::Instance* const> xs) {
  if (xs.empty()) throw std::invalid_argument("retain_loss: empty batch");
  require_support(a_star, a_d, "retain_loss");
  const std::vector<EncodedInstance> batch = models::encode_all(a_star, xs);
  DenseArray reference = models::score(a_d, std::span<const EncodedInstance>(batch)).log_probs;
  return detail::kl_objective(a_star, batch, std::move(reference), std::nullopt);
}

KGAResult kga_unlearn(const Model& original, const Helpers& helpers, const data::SplitSet& split,
                      const UnlearnConfig& cfg) {
  cfg.validate();
  if (split.forget.empty()) throw std::invalid_argument("kga_unlearn: empty forget set");
  if (split.extra.empty()) throw std::invalid_argument("kga_unlearn: empty extra set");
  if (split.retain.empty() && cfg.alpha > 0.0) throw std::invalid_argument("kga_unlearn: empty retain set");
  require_support(original, helpers.forget_model, "kga_unlearn");
  require_support(original, helpers.extra_model, "kga_unlearn");

  util::Stopwatch clock;
  KGAResult result{original, {}};
  KGAReport& report = result.report;
  report.helper_seconds = helpers.seconds;

  const std::vector<EncodedInstance> forget = encode_corpus(original, split.forget);
  const std::vector<EncodedInstance> retain = encode_corpus(original, split.retain);
  const std::vector<double> extra_distances =
      instance_distances(models::score(original, split.extra), models::score(helpers.extra_model, split.extra));
  const models::Scores forget_reference = models::score(helpers.forget_model, std::span<const EncodedInstance>(forget));

  report.extra_gap = std::accumulate(extra_distances.begin(), extra_distances.end(), 0.0) /
                     static_cast<double>(extra_distances.size());
  report.forget_gap = mean_gap(models::score(original, std::span<const EncodedInstance>(forget)), forget_reference);
  report.initial_gap = std::abs(report.extra_gap - report.forget_gap);
  report.trajectory.push_back({0, report.initial_gap});

  auto current_gap = [&](const Model& m) {
    return std::abs(report.extra_gap - mean_gap(models::score(m, std::span<const EncodedInstance>(forget)), forget_reference));
  };

  if (report.initial_gap == 0.0) {
    // Nothing to align: G* = G = 0 already satisfies G* <= sigma * G.
    report.final_gap = 0.0;
    report.termination = Termination::kGapMet;
    report.unlearn_seconds = clock.seconds();
    return result;
  }

  Model& star = result.model;
  std::vector<DenseArray> best(star.parameters().begin(), star.parameters().end());
  double best_gap = report.initial_gap;
  const double threshold = cfg.sigma * report.initial_gap;

  gradkit::AdamState state(gradkit::AdamConfig{.learning_rate = cfg.learning_rate}, star.parameters());
  const gradkit::Schedule schedule = gradkit::constant_schedule();
  std::mt19937_64 rng(util::derive_seed(cfg.seed, util::stage::kUnlearn));
  report.termination = Termination::kStepCap;

  for (std::size_t step = 1; step <= cfg.max_steps; ++step) {
    const auto ys = detail::sample_indices(forget.size(), cfg.batch_size, rng);
    const auto zs = detail::sample_indices(extra_distances.size(), cfg.batch_size, rng);
    std::vector<double> targets;
    targets.reserve(zs.size());
    for (std::size_t z : zs) targets.push_back(extra_distances[z]);
    std::vector<detail::ObjectiveTerm> terms;
    terms.push_back({detail::pick(forget, ys), detail::gather_rows(forget_reference, ys), std::move(targets), 1.0});
    if (cfg.alpha > 0.0) {
      // INNER_STEP retain batches, averaged.
      const double weight = cfg.alpha / static_cast<double>(cfg.inner_steps);
      for (std::size_t inner = 0; inner < cfg.inner_steps; ++inner) {
        auto batch = detail::pick(retain, detail::sample_indices(retain.size(), cfg.batch_size, rng));
        DenseArray reference = models::score(original, std::span<const EncodedInstance>(batch)).log_probs;
        terms.push_back({std::move(batch), std::move(reference), std::nullopt, weight});
      }
    }
    const LossGradient total = detail::kl_objective(star, std::move(terms));
    if (!std::isfinite(total.value)) {
      throw std::runtime_error("kga_unlearn: non-finite loss at step " + std::to_string(step));
    }
    if (!gradkit::adam_step(star.mutable_parameters(), total.gradient, state, schedule)) {
      throw std::runtime_error("kga_unlearn: non-finite gradient at step " + std::to_string(step));
    }
    report.loss_trajectory.push_back(total.value);
    report.steps = step;

    if (step % cfg.valid_steps == 0 || step == cfg.max_steps) {
      const double gap = current_gap(star);
      report.trajectory.push_back({step, gap});
      if (gap < best_gap) {
        best_gap = gap;
        report.best_step = step;
        best.assign(star.parameters().begin(), star.parameters().end());
      }
      if (gap <= threshold) {
        report.termination = Termination::kGapMet;
        report.final_gap = gap;
        report.best_step = step;
        break;
      }
    }
  }
  if (report.termination == Termination::kStepCap) {
    std::copy(best.begin(), best.end(), star.mutable_parameters().begin());
    report.final_gap = best_gap;
  }
  report.unlearn_seconds = clock.seconds();
  return result;
}

}  // namespace kga::unlearn
