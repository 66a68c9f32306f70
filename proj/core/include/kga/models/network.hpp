#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "kga/data/corpus.hpp"
#include "kga/gradkit/graph.hpp"
#include "kga/models/model.hpp"

namespace kga::models {

/// Output rows of a batch laid out instance-major: instance i owns rows
/// [offsets[i], offsets[i+1]). A classifier instance owns one row; a
/// generative instance owns one row per gold token (teacher forcing).
struct RowLayout {
  std::vector<std::size_t> offsets;
  std::vector<std::size_t> gold;  // gold id per row

  std::size_t instances() const noexcept { return offsets.empty() ? 0 : offsets.size() - 1; }
  std::size_t rows() const noexcept { return gold.size(); }
};

RowLayout layout_of(std::span<const EncodedInstance> batch);

/// Appends the model's log-probability computation for `batch` to `graph`
/// and returns a node of shape rows x support. Parameter slot i is the
/// model's i-th parameter; bind model.parameters() when evaluating.
gradkit::NodeId build_log_probs(gradkit::Graph& graph, const Model& model, std::span<const EncodedInstance> batch);

/// Forward-only log-probabilities for a set of instances.
struct Scores {
  gradkit::DenseArray log_probs;  // rows x support
  RowLayout layout;

  std::size_t instances() const noexcept { return layout.instances(); }
  std::span<const double> row(std::size_t r) const { return log_probs.row(r); }
  /// Sum of gold-token log-probabilities of instance i.
  double gold_log_prob(std::size_t i) const;
  /// Mean gold-token log-probability of instance i.
  double mean_gold_log_prob(std::size_t i) const;
};

Scores score(const Model& model, std::span<const EncodedInstance> batch);
/// Scores every instance, fanning chunks out over the evaluator threads.
/// Instance order is preserved.
Scores score(const Model& model, std::span<const data::Instance* const> instances);
Scores score(const Model& model, const data::Corpus& corpus);

std::vector<EncodedInstance> encode_all(const Model& model, std::span<const data::Instance* const> instances);

}  // namespace kga::models
