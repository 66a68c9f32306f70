#pragma once

#include <span>
#include <vector>

#include "kga/data/corpus.hpp"
#include "kga/models/model.hpp"
#include "kga/models/network.hpp"

namespace kga::unlearn {

/// KL(p || q) from log-probabilities over a common support, in nats.
double kl_from_log_probs(std::span<const double> log_p, std::span<const double> log_q);

/// KL(Pr_A(x) || Pr_B(x)) for a classifier; for a generative model the mean
/// over target positions of the per-position KL under teacher forcing.
/// Throws std::invalid_argument when the supports differ.
double distribution_distance(const models::Model& a, const models::Model& b, const data::Instance& instance);

/// Per-instance distances between two score sets over the same instances.
std::vector<double> instance_distances(const models::Scores& a, const models::Scores& b);

/// Mean distribution_distance over a corpus. Throws for an empty corpus.
double mean_gap(const models::Model& a, const models::Model& b, const data::Corpus& corpus);
double mean_gap(const models::Scores& a, const models::Scores& b);

}  // namespace kga::unlearn
