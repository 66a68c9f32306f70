#include "kga/unlearn/distance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace kga::unlearn {

double kl_from_log_probs(std::span<const double> log_p, std::span<const double> log_q) {
  if (log_p.size() != log_q.size()) throw std::invalid_argument("kl: supports differ in size");
  double total = 0.0;
  for (std::size_t k = 0; k < log_p.size(); ++k) {
    const double p = std::exp(log_p[k]);
    if (p > 0.0) total += p * (log_p[k] - log_q[k]);
  }
  return std::max(total, 0.0);
}

std::vector<double> instance_distances(const models::Scores& a, const models::Scores& b) {
  if (a.layout.offsets != b.layout.offsets || a.log_probs.cols() != b.log_probs.cols()) {
    throw std::invalid_argument("instance_distances: score sets do not cover the same rows and support");
  }
  std::vector<double> out;
  out.reserve(a.instances());
  for (std::size_t i = 0; i < a.instances(); ++i) {
    const std::size_t lo = a.layout.offsets[i];
    const std::size_t hi = a.layout.offsets[i + 1];
    double total = 0.0;
    for (std::size_t r = lo; r < hi; ++r) total += kl_from_log_probs(a.row(r), b.row(r));
    out.push_back(total / static_cast<double>(hi - lo));
  }
  return out;
}

double distribution_distance(const models::Model& a, const models::Model& b, const data::Instance& instance) {
  if (!a.same_support(b)) throw std::invalid_argument("distribution_distance: models do not share a support");
  const data::Instance* one[] = {&instance};
  return instance_distances(models::score(a, one), models::score(b, one)).front();
}

double mean_gap(const models::Scores& a, const models::Scores& b) {
  const std::vector<double> d = instance_distances(a, b);
  if (d.empty()) throw std::invalid_argument("mean_gap: empty corpus");
  return std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
}

double mean_gap(const models::Model& a, const models::Model& b, const data::Corpus& corpus) {
  if (corpus.empty()) throw std::invalid_argument("mean_gap: empty corpus");
  if (!a.same_support(b)) throw std::invalid_argument("mean_gap: models do not share a support");
  return mean_gap(models::score(a, corpus), models::score(b, corpus));
}

}  // namespace kga::unlearn
