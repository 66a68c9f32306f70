#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "kga/models/distribution.hpp"
#include "kga/models/network.hpp"

namespace kga::eval {

/// Weight of the uniform distribution mixed into both arguments before any
/// log, so divergences stay finite on disjoint supports.
inline constexpr double kSmoothing = 1e-9;

/// KL(p || q) in nats after smoothing. Throws std::invalid_argument when the
/// supports differ in size or are empty.
double kl(const models::Distribution& p, const models::Distribution& q);
double kl(std::span<const double> p, std::span<const double> q);

/// Symmetric KL: 0.5 KL(p||q) + 0.5 KL(q||p), smoothed. This is not the
/// midpoint Jensen-Shannon divergence.
double jsd(const models::Distribution& p, const models::Distribution& q);
double jsd(std::span<const double> p, std::span<const double> q);

/// Per-instance jsd between two scorings of the same instances, averaged
/// over each instance's output rows.
std::vector<double> instance_jsd(const models::Scores& a, const models::Scores& b);
/// Mean of instance_jsd. Throws std::invalid_argument on an empty set.
double corpus_jsd(const models::Scores& a, const models::Scores& b);

/// |x - y| / y. Throws std::invalid_argument unless y > 0.
double lpd(double x, double y);
/// Mean of lpd over aligned per-instance perplexities.
double lpd(std::span<const double> x, std::span<const double> y);

/// Teacher-forced perplexity of every instance (gold probabilities floored
/// at 1e-300).
std::vector<double> instance_perplexity(const models::Scores& s);

/// Percentage of instances whose gold-sequence log-probability under
/// `after` is strictly below that under `before`. Throws
/// std::invalid_argument on an empty set or a layout mismatch.
double pdlp(const models::Scores& after, const models::Scores& before);

/// Argmax label of every single-row instance (lowest index among ties).
std::vector<std::size_t> predictions(const models::Scores& s);

/// Fraction of matching labels, in [0, 1].
double accuracy(std::span<const std::size_t> predictions, std::span<const std::size_t> golds);
/// Accuracy of the argmax labels in percent.
double accuracy(const models::Scores& s);

/// Micro-averaged F1 over labels for single-label data; equals accuracy.
double micro_f1(std::span<const std::size_t> predictions, std::span<const std::size_t> golds);
/// Micro-averaged F1 for label sets: pooled true positives, false positives
/// and false negatives. Two empty pools give 1.
double micro_f1(const std::vector<std::vector<std::size_t>>& predictions,
                const std::vector<std::vector<std::size_t>>& golds);

/// Corpus BLEU-4 in [0, 100] with brevity penalty. Clipped counts use the
/// maximum over an instance's references; the reference length is the
/// closest one (shorter on ties). Orders 2-4 are add-one smoothed when they
/// have no match; a unigram precision of zero gives 0.
double bleu4(const std::vector<std::vector<std::string>>& candidates,
             const std::vector<std::vector<std::vector<std::string>>>& references);
/// Single reference per candidate.
double bleu4(const std::vector<std::vector<std::string>>& candidates,
             const std::vector<std::vector<std::string>>& references);

}  // namespace kga::eval
