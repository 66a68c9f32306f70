#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "kga/data/corpus.hpp"
#include "kga/models/model.hpp"

namespace kga::models {

/// Probability vector over a finite support; non-negative, sums to 1.
struct Distribution {
  std::vector<double> probs;

  std::size_t support_size() const noexcept { return probs.size(); }
  std::size_t argmax() const;  // lowest index among ties
  double operator[](std::size_t i) const { return probs[i]; }
};

/// Exponentiates a row of log-probabilities.
Distribution from_log_probs(std::span<const double> log_probs);

/// Output distribution over labels. Unknown tokens map to the unknown id.
Distribution class_distribution(const Model& model, const data::Instance& instance);

/// Teacher-forced next-token distributions, one per gold token including
/// the end token. Throws std::invalid_argument past the position cap.
std::vector<Distribution> token_distributions(const Model& model, const data::Instance& instance);

struct Perplexity {
  double value = 1.0;
  bool clamped = false;  // some gold probability was below 1e-300 and was raised to it
};

/// exp of the mean negative log-probability of the gold tokens.
Perplexity perplexity_from_log_probs(std::span<const double> gold_log_probs);
Perplexity sequence_perplexity(const Model& model, const data::Instance& instance);

}  // namespace kga::models
