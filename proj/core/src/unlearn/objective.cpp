#include "objective.hpp"

#include <stdexcept>

namespace kga::unlearn::detail {

using gradkit::DenseArray;
using gradkit::NodeId;

DenseArray gather_rows(const models::Scores& scores, std::span<const std::size_t> instances) {
  const std::size_t cols = scores.log_probs.cols();
  std::vector<double> data;
  std::size_t rows = 0;
  for (std::size_t i : instances) {
    for (std::size_t r = scores.layout.offsets.at(i); r < scores.layout.offsets.at(i + 1); ++r) {
      const auto row = scores.row(r);
      data.insert(data.end(), row.begin(), row.end());
      ++rows;
    }
  }
  return DenseArray({rows, cols}, std::move(data));
}

models::LossGradient kl_objective(const models::Model& model, std::span<const models::EncodedInstance> batch,
                                  DenseArray reference, const std::optional<std::vector<double>>& offsets) {
  std::vector<ObjectiveTerm> terms;
  terms.push_back({std::vector<models::EncodedInstance>(batch.begin(), batch.end()), std::move(reference), offsets, 1.0});
  return kl_objective(model, std::move(terms));
}

models::LossGradient kl_objective(const models::Model& model, std::vector<ObjectiveTerm> terms) {
  std::vector<models::EncodedInstance> batch;
  std::vector<double> reference;
  std::size_t reference_rows = 0;
  for (const ObjectiveTerm& t : terms) {
    if (t.batch.empty()) throw std::invalid_argument("unlearning objective: empty batch");
    if (t.offsets && t.offsets->size() != t.batch.size()) {
      throw std::invalid_argument("unlearning objective: offset count mismatch");
    }
    batch.insert(batch.end(), t.batch.begin(), t.batch.end());
    reference.insert(reference.end(), t.reference.data().begin(), t.reference.data().end());
    reference_rows += t.reference.rows();
  }
  if (batch.empty()) throw std::invalid_argument("unlearning objective: no terms");

  gradkit::Graph g;
  const NodeId lp = models::build_log_probs(g, model, batch);
  if (reference_rows != g.rows(lp) || reference.size() != g.rows(lp) * g.cols(lp)) {
    throw std::invalid_argument("unlearning objective: reference does not match the model's output rows");
  }
  const models::RowLayout layout = models::layout_of(batch);
  const NodeId ref = g.constant(DenseArray({reference_rows, g.cols(lp)}, std::move(reference)));
  const NodeId row_kl = g.row_sum(g.mul(g.exp(lp), g.sub(lp, ref)));
  const NodeId per_instance = g.segment_mean(row_kl, layout.offsets);

  std::optional<NodeId> loss;
  std::size_t first = 0;
  for (const ObjectiveTerm& t : terms) {
    const std::size_t n = t.batch.size();
    NodeId part = per_instance;
    if (terms.size() > 1) {
      std::vector<std::size_t> rows(n);
      for (std::size_t i = 0; i < n; ++i) rows[i] = first + i;
      part = g.row_lookup(per_instance, std::move(rows));
    }
    if (t.offsets) part = g.abs(g.sub(part, g.constant(DenseArray({n, 1}, *t.offsets))));
    NodeId term = g.mean(part);
    if (t.weight != 1.0) term = g.scale(term, t.weight);
    loss = loss ? g.add(*loss, term) : term;
    first += n;
  }
  const gradkit::Evaluation ev = gradkit::forward(g, gradkit::Bindings{{}, model.parameters()});
  return models::LossGradient{ev.scalar(*loss), gradkit::backward(ev, *loss)};
}

std::vector<std::size_t> sample_indices(std::size_t population, std::size_t count, std::mt19937_64& rng) {
  if (population == 0) throw std::invalid_argument("sample_indices: empty population");
  std::uniform_int_distribution<std::size_t> pick(0, population - 1);
  std::vector<std::size_t> out(count);
  for (auto& i : out) i = pick(rng);
  return out;
}

std::vector<models::EncodedInstance> pick(const std::vector<models::EncodedInstance>& all,
                                          std::span<const std::size_t> idx) {
  std::vector<models::EncodedInstance> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(all.at(i));
  return out;
}

}  // namespace kga::unlearn::detail
