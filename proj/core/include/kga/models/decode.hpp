#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "kga/models/model.hpp"

namespace kga::models {

/// Given the prefixes of the live hypotheses, returns one row of next-token
/// log-probabilities per prefix.
using StepFunction =
    std::function<std::vector<std::vector<double>>(const std::vector<std::vector<std::size_t>>& prefixes)>;

struct Hypothesis {
  std::vector<std::size_t> tokens;  // excludes the end token
  double log_prob = 0.0;
  bool finished = false;  // ended with the end token rather than the length cap
};

/// Beam search over a generic step function. Candidates are ranked by
/// accumulated log-probability, ties broken by the lexicographically smaller
/// token sequence. A hypothesis finishes when it emits `end_token`; search
/// stops once no live hypothesis can beat the best finished one, or at
/// `max_length` tokens, where live hypotheses are closed as they are.
/// beam_width 1 is greedy decoding.
Hypothesis beam_search(const StepFunction& step, std::size_t end_token, std::size_t beam_width, std::size_t max_length);

/// Generates a target for `source` with the model's teacher-forced scorer.
/// max_length 0 picks min(position cap - 1, 2 * source length + 10).
/// Padding and start tokens are never emitted.
std::vector<std::string> beam_generate(const Model& model, const std::vector<std::string>& source,
                                       std::size_t beam_width, std::size_t max_length = 0);

}  // namespace kga::models
