#include "kga/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <map>
#include <stdexcept>

namespace kga::eval {
namespace {

void require_same_layout(const models::Scores& a, const models::Scores& b, const char* what) {
  if (a.layout.offsets != b.layout.offsets || a.log_probs.cols() != b.log_probs.cols()) {
    throw std::invalid_argument(std::string(what) + ": scorings do not cover the same rows and support");
  }
}

double row_kl(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("kl: supports differ");
  if (p.empty()) throw std::invalid_argument("kl: empty support");
  const double u = kSmoothing / static_cast<double>(p.size());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double ps = (1.0 - kSmoothing) * p[i] + u;
    const double qs = (1.0 - kSmoothing) * q[i] + u;
    total += ps * (std::log(ps) - std::log(qs));
  }
  return std::max(total, 0.0);
}

std::vector<double> exp_row(std::span<const double> lp) {
  std::vector<double> out(lp.size());
  for (std::size_t i = 0; i < lp.size(); ++i) out[i] = std::exp(lp[i]);
  return out;
}

using Ngrams = std::map<std::vector<std::string>, std::size_t>;

Ngrams ngrams(const std::vector<std::string>& tokens, std::size_t n) {
  Ngrams out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++out[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                   tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return out;
}

}  // namespace

double kl(std::span<const double> p, std::span<const double> q) { return row_kl(p, q); }

double kl(const models::Distribution& p, const models::Distribution& q) { return row_kl(p.probs, q.probs); }

double jsd(std::span<const double> p, std::span<const double> q) { return 0.5 * row_kl(p, q) + 0.5 * row_kl(q, p); }

double jsd(const models::Distribution& p, const models::Distribution& q) { return jsd(p.probs, q.probs); }

std::vector<double> instance_jsd(const models::Scores& a, const models::Scores& b) {
  require_same_layout(a, b, "jsd");
  std::vector<double> out;
  out.reserve(a.instances());
  for (std::size_t i = 0; i < a.instances(); ++i) {
    double total = 0.0;
    const std::size_t lo = a.layout.offsets[i];
    const std::size_t hi = a.layout.offsets[i + 1];
    for (std::size_t r = lo; r < hi; ++r) total += jsd(exp_row(a.row(r)), exp_row(b.row(r)));
    out.push_back(hi > lo ? total / static_cast<double>(hi - lo) : 0.0);
  }
  return out;
}

double corpus_jsd(const models::Scores& a, const models::Scores& b) {
  const std::vector<double> v = instance_jsd(a, b);
  if (v.empty()) throw std::invalid_argument("jsd: empty instance set");
  double total = 0.0;
  for (double x : v) total += x;
  return total / static_cast<double>(v.size());
}

double lpd(double x, double y) {
  if (!(y > 0.0)) throw std::invalid_argument("lpd: reference perplexity must be positive");
  return std::abs(x - y) / y;
}

double lpd(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("lpd: length mismatch");
  if (x.empty()) throw std::invalid_argument("lpd: empty instance set");
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) total += lpd(x[i], y[i]);
  return total / static_cast<double>(x.size());
}

std::vector<double> instance_perplexity(const models::Scores& s) {
  std::vector<double> out;
  out.reserve(s.instances());
  std::vector<double> gold;
  for (std::size_t i = 0; i < s.instances(); ++i) {
    gold.clear();
    for (std::size_t r = s.layout.offsets[i]; r < s.layout.offsets[i + 1]; ++r) gold.push_back(s.row(r)[s.layout.gold[r]]);
    out.push_back(models::perplexity_from_log_probs(gold).value);
  }
  return out;
}

double pdlp(const models::Scores& after, const models::Scores& before) {
  require_same_layout(after, before, "pdlp");
  if (after.layout.gold != before.layout.gold) throw std::invalid_argument("pdlp: gold tokens differ");
  if (after.instances() == 0) throw std::invalid_argument("pdlp: empty instance set");
  std::size_t dropped = 0;
  for (std::size_t i = 0; i < after.instances(); ++i) {
    if (after.gold_log_prob(i) < before.gold_log_prob(i)) ++dropped;
  }
  return 100.0 * static_cast<double>(dropped) / static_cast<double>(after.instances());
}

std::vector<std::size_t> predictions(const models::Scores& s) {
  std::vector<std::size_t> out;
  out.reserve(s.instances());
  for (std::size_t i = 0; i < s.instances(); ++i) {
    if (s.layout.offsets[i + 1] - s.layout.offsets[i] != 1) {
      throw std::invalid_argument("predictions: instance " + std::to_string(i) + " does not have exactly one row");
    }
    const auto row = s.row(s.layout.offsets[i]);
    out.push_back(static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin()));
  }
  return out;
}

double accuracy(std::span<const std::size_t> predictions, std::span<const std::size_t> golds) {
  if (predictions.size() != golds.size()) throw std::invalid_argument("accuracy: length mismatch");
  if (golds.empty()) throw std::invalid_argument("accuracy: empty instance set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) hits += predictions[i] == golds[i];
  return static_cast<double>(hits) / static_cast<double>(golds.size());
}

double accuracy(const models::Scores& s) {
  const auto pred = predictions(s);
  std::vector<std::size_t> gold;
  gold.reserve(s.instances());
  for (std::size_t i = 0; i < s.instances(); ++i) gold.push_back(s.layout.gold[s.layout.offsets[i]]);
  return 100.0 * accuracy(pred, gold);
}

double micro_f1(std::span<const std::size_t> predictions, std::span<const std::size_t> golds) {
  if (predictions.size() != golds.size()) throw std::invalid_argument("micro_f1: length mismatch");
  if (golds.empty()) throw std::invalid_argument("micro_f1: empty instance set");
  // One predicted and one gold label per instance: every miss is one false
  // positive and one false negative, so precision = recall = accuracy.
  std::size_t tp = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) tp += predictions[i] == golds[i];
  return static_cast<double>(tp) / static_cast<double>(golds.size());
}

double micro_f1(const std::vector<std::vector<std::size_t>>& predictions,
                const std::vector<std::vector<std::size_t>>& golds) {
  if (predictions.size() != golds.size()) throw std::invalid_argument("micro_f1: length mismatch");
  if (golds.empty()) throw std::invalid_argument("micro_f1: empty instance set");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    std::vector<std::size_t> p = predictions[i];
    std::vector<std::size_t> g = golds[i];
    std::sort(p.begin(), p.end());
    p.erase(std::unique(p.begin(), p.end()), p.end());
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    std::vector<std::size_t> common;
    std::set_intersection(p.begin(), p.end(), g.begin(), g.end(), std::back_inserter(common));
    tp += common.size();
    fp += p.size() - common.size();
    fn += g.size() - common.size();
  }
  if (tp + fp + fn == 0) return 1.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

double bleu4(const std::vector<std::vector<std::string>>& candidates,
             const std::vector<std::vector<std::vector<std::string>>>& references) {
  if (candidates.size() != references.size()) throw std::invalid_argument("bleu4: candidate/reference count mismatch");
  if (candidates.empty()) throw std::invalid_argument("bleu4: empty corpus");
  std::size_t matches[4] = {0, 0, 0, 0};
  std::size_t totals[4] = {0, 0, 0, 0};
  std::size_t cand_len = 0;
  std::size_t ref_len = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& cand = candidates[i];
    const auto& refs = references[i];
    if (refs.empty()) throw std::invalid_argument("bleu4: instance " + std::to_string(i) + " has no reference");
    cand_len += cand.size();
    std::size_t closest = refs.front().size();
    for (const auto& r : refs) {
      const auto d = [&](std::size_t len) { return len > cand.size() ? len - cand.size() : cand.size() - len; };
      if (d(r.size()) < d(closest) || (d(r.size()) == d(closest) && r.size() < closest)) closest = r.size();
    }
    ref_len += closest;
    for (std::size_t n = 1; n <= 4; ++n) {
      const Ngrams c = ngrams(cand, n);
      Ngrams max_ref;
      for (const auto& r : refs) {
        for (const auto& [gram, count] : ngrams(r, n)) max_ref[gram] = std::max(max_ref[gram], count);
      }
      for (const auto& [gram, count] : c) {
        const auto it = max_ref.find(gram);
        matches[n - 1] += std::min(count, it == max_ref.end() ? std::size_t{0} : it->second);
        totals[n - 1] += count;
      }
    }
  }
  if (matches[0] == 0) return 0.0;
  double log_sum = std::log(static_cast<double>(matches[0]) / static_cast<double>(totals[0]));
  for (std::size_t n = 1; n < 4; ++n) {
    const double p = matches[n] == 0 ? 1.0 / static_cast<double>(totals[n] + 1)
                                     : static_cast<double>(matches[n]) / static_cast<double>(totals[n]);
    log_sum += std::log(p);
  }
  const double bp = cand_len >= ref_len ? 1.0 : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len));
  return 100.0 * bp * std::exp(log_sum / 4.0);
}

double bleu4(const std::vector<std::vector<std::string>>& candidates,
             const std::vector<std::vector<std::string>>& references) {
  std::vector<std::vector<std::vector<std::string>>> wrapped;
  wrapped.reserve(references.size());
  for (const auto& r : references) wrapped.push_back({r});
  return bleu4(candidates, wrapped);
}

}  // namespace kga::eval
