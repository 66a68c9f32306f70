#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kga/data/split.hpp"
#include "kga/models/model.hpp"
#include "kga/models/training.hpp"

namespace kga::unlearn {

using models::LossGradient;

struct HelperConfig {
  models::TrainConfig train;
  bool augment = true;             // mix a random share of D_r into each helper's data
  double augment_fraction = 0.1;   // share of |D_r|
};

/// A_f trained on D_f and A_n trained on D_n, both with A_D's architecture.
struct Helpers {
  models::Model forget_model;  // A_f
  models::Model extra_model;   // A_n
  double seconds = 0.0;
};

/// Trains both helpers from fresh initializations. The two augmentation
/// samples of D_r are drawn independently from the seed. Throws when D_f or
/// D_n is empty or a helper diverges.
Helpers train_helpers(const data::SplitSet& split, const models::ModelSpec& spec,
                      std::shared_ptr<const models::Vocabulary> vocabulary, const HelperConfig& cfg,
                      std::uint64_t seed);

/// Mean over pairs of |KL(A*(y) || A_f(y)) - KL(A_D(z) || A_n(z))| with y
/// from D_f and z from D_n. Only A* receives a gradient.
LossGradient alignment_loss(const models::Model& a_star, const models::Model& a_f, const models::Model& a_d,
                            const models::Model& a_n, std::span<const data::Instance* const> ys,
                            std::span<const data::Instance* const> zs);

/// Mean over the batch of KL(A*(x) || A_D(x)). Only A* receives a gradient.
LossGradient retain_loss(const models::Model& a_star, const models::Model& a_d,
                         std::span<const data::Instance* const> xs);

struct UnlearnConfig {
  double alpha = 0.1;
  double sigma = 0.1;
  double learning_rate = 5e-5;
  std::size_t batch_size = 16;
  std::size_t max_steps = 2000;
  std::size_t inner_steps = 1;
  std::size_t valid_steps = 10;
  std::size_t badt_steps = 200;  // update count for the bad-teacher baseline
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument unless 0 < sigma < 1, alpha >= 0, the
  /// learning rate is positive and every step count is positive.
  void validate() const;
};

enum class Termination { kGapMet, kStepCap };
const char* termination_name(Termination t) noexcept;

struct GapPoint {
  std::size_t step = 0;
  double gap = 0.0;  // G* at this step
};

struct KGAReport {
  double extra_gap = 0.0;   // mean_gap(A_D, A_n, D_n)
  double forget_gap = 0.0;  // mean_gap(A_D, A_f, D_f)
  double initial_gap = 0.0; // G = |extra_gap - forget_gap|
  double final_gap = 0.0;   // G* of the returned model
  std::vector<GapPoint> trajectory;  // step 0 and every validation step
  std::vector<double> loss_trajectory;
  std::size_t steps = 0;
  std::size_t best_step = 0;
  Termination termination = Termination::kStepCap;
  double unlearn_seconds = 0.0;
  double helper_seconds = 0.0;

  double total_seconds() const noexcept { return unlearn_seconds + helper_seconds; }
};

struct KGAResult {
  models::Model model;
  KGAReport report;
};

/// Knowledge-gap alignment. A* starts as a copy of A_D; each step samples
/// batch_size (y, z) pairs uniformly with replacement, adds alpha times the
/// mean of inner_steps retain losses on random D_r batches, and takes one
/// Adam step at a constant rate. Every valid_steps steps the current gap
/// G* = |mean_gap(A_D, A_n, D_n) - mean_gap(A*, A_f, D_f)| is measured on
/// the full sets; the run stops once G* <= sigma * G. At the step cap the
/// model with the smallest measured G* is returned.
KGAResult kga_unlearn(const models::Model& original, const Helpers& helpers, const data::SplitSet& split,
                      const UnlearnConfig& cfg);

}  // namespace kga::unlearn
