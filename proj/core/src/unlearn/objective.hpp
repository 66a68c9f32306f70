#pragma once

// Graph pieces shared by the KL-based unlearning objectives.

#include <optional>
#include <random>
#include <span>
#include <vector>

#include "kga/gradkit/graph.hpp"
#include "kga/models/network.hpp"
#include "kga/models/training.hpp"

namespace kga::unlearn::detail {

/// Rows of `scores` belonging to the listed instances, stacked in order.
gradkit::DenseArray gather_rows(const models::Scores& scores, std::span<const std::size_t> instances);

/// Loss over a batch scored by the trainable model against frozen reference
/// log-probabilities. Without offsets: mean_i KL_i. With offsets c:
/// mean_i |KL_i - c_i|. KL_i is the mean over instance i's rows of
/// KL(model row || reference row).
models::LossGradient kl_objective(const models::Model& model, std::span<const models::EncodedInstance> batch,
                                  gradkit::DenseArray reference, const std::optional<std::vector<double>>& offsets);

/// One weighted term of a fused objective: weight * kl_objective(batch,
/// reference, offsets). Fusing terms shares one forward and backward pass.
struct ObjectiveTerm {
  std::vector<models::EncodedInstance> batch;
  gradkit::DenseArray reference;
  std::optional<std::vector<double>> offsets;
  double weight = 1.0;
};

models::LossGradient kl_objective(const models::Model& model, std::vector<ObjectiveTerm> terms);

std::vector<std::size_t> sample_indices(std::size_t population, std::size_t count, std::mt19937_64& rng);

std::vector<models::EncodedInstance> pick(const std::vector<models::EncodedInstance>& all,
                                          std::span<const std::size_t> idx);

}  // namespace kga::unlearn::detail
