#include "kga/models/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kga/models/network.hpp"

namespace kga::models {
namespace {

constexpr double kFloorProb = 1e-300;

Scores score_one(const Model& model, const data::Instance& instance) {
  const EncodedInstance enc[] = {encode(model, instance)};
  return score(model, std::span<const EncodedInstance>(enc));
}

}  // namespace

std::size_t Distribution::argmax() const {
  if (probs.empty()) throw std::logic_error("argmax of an empty distribution");
  return static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

Distribution from_log_probs(std::span<const double> log_probs) {
  Distribution d;
  d.probs.reserve(log_probs.size());
  for (double lp : log_probs) d.probs.push_back(std::exp(lp));
  return d;
}

Distribution class_distribution(const Model& model, const data::Instance& instance) {
  if (model.spec().generative()) throw std::invalid_argument("class_distribution: model is generative");
  const Scores s = score_one(model, instance);
  return from_log_probs(s.row(0));
}

std::vector<Distribution> token_distributions(const Model& model, const data::Instance& instance) {
  if (!model.spec().generative()) throw std::invalid_argument("token_distributions: model is a classifier");
  const Scores s = score_one(model, instance);
  std::vector<Distribution> out;
  out.reserve(s.layout.rows());
  for (std::size_t r = 0; r < s.layout.rows(); ++r) out.push_back(from_log_probs(s.row(r)));
  return out;
}

Perplexity perplexity_from_log_probs(std::span<const double> gold_log_probs) {
  if (gold_log_probs.empty()) throw std::invalid_argument("perplexity: no gold tokens");
  const double floor = std::log(kFloorProb);
  Perplexity p;
  double nll = 0.0;
  for (double lp : gold_log_probs) {
    if (lp < floor) {
      lp = floor;
      p.clamped = true;
    }
    nll -= lp;
  }
  p.value = std::exp(nll / static_cast<double>(gold_log_probs.size()));
  return p;
}

Perplexity sequence_perplexity(const Model& model, const data::Instance& instance) {
  const Scores s = score_one(model, instance);
  std::vector<double> gold;
  for (std::size_t r = 0; r < s.layout.rows(); ++r) gold.push_back(s.log_probs(r, s.layout.gold[r]));
  return perplexity_from_log_probs(gold);
}

}  // namespace kga::models
