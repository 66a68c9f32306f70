#include "kga/models/decode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "kga/models/network.hpp"

namespace kga::models {
namespace {

bool better(const Hypothesis& a, const Hypothesis& b) {
  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
  return a.tokens < b.tokens;
}

}  // namespace

Hypothesis beam_search(const StepFunction& step, std::size_t end_token, std::size_t beam_width, std::size_t max_length) {
  if (beam_width == 0) throw std::invalid_argument("beam_search: beam width must be at least 1");
  std::vector<Hypothesis> alive{Hypothesis{}};
  std::vector<Hypothesis> finished;
  for (std::size_t length = 0; length < max_length && !alive.empty(); ++length) {
    std::vector<std::vector<std::size_t>> prefixes;
    prefixes.reserve(alive.size());
    for (const auto& h : alive) prefixes.push_back(h.tokens);
    const std::vector<std::vector<double>> rows = step(prefixes);
    if (rows.size() != alive.size()) throw std::logic_error("beam_search: step returned the wrong row count");

    std::vector<Hypothesis> candidates;
    for (std::size_t a = 0; a < alive.size(); ++a) {
      for (std::size_t k = 0; k < rows[a].size(); ++k) {
        if (!std::isfinite(rows[a][k])) continue;
        Hypothesis c{alive[a].tokens, alive[a].log_prob + rows[a][k], false};
        c.tokens.push_back(k);
        candidates.push_back(std::move(c));
      }
    }
    const std::size_t keep = std::min(beam_width, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep), candidates.end(),
                      better);
    candidates.resize(keep);

    alive.clear();
    for (auto& c : candidates) {
      if (c.tokens.back() == end_token) {
        c.tokens.pop_back();
        c.finished = true;
        finished.push_back(std::move(c));
      } else {
        alive.push_back(std::move(c));
      }
    }
    if (!finished.empty() && !alive.empty()) {
      const auto best_done = std::min_element(finished.begin(), finished.end(), better);
      const auto best_live = std::min_element(alive.begin(), alive.end(), better);
      // Log-probabilities only decrease as hypotheses grow.
      if (best_done->log_prob >= best_live->log_prob) break;
    }
  }
  // Hypotheses still live at the length cap compete as they are.
  for (auto& h : alive) finished.push_back(std::move(h));
  if (finished.empty()) return Hypothesis{};
  return *std::min_element(finished.begin(), finished.end(), better);
}

std::vector<std::string> beam_generate(const Model& model, const std::vector<std::string>& source,
                                       std::size_t beam_width, std::size_t max_length) {
  if (!model.spec().generative()) throw std::invalid_argument("beam_generate: model is a classifier");
  const Vocabulary& vocab = model.vocabulary();
  const std::size_t cap = model.spec().max_positions;
  if (source.size() + 1 > cap) throw std::invalid_argument("beam_generate: source exceeds the position cap");
  if (max_length == 0) max_length = std::min(cap - 1, 2 * source.size() + 10);
  max_length = std::min(max_length, cap - 1);

  std::vector<std::size_t> src = vocab.encode(source);
  src.push_back(Vocabulary::kEos);
  const StepFunction step = [&](const std::vector<std::vector<std::size_t>>& prefixes) {
    std::vector<EncodedInstance> batch;
    batch.reserve(prefixes.size());
    for (const auto& prefix : prefixes) {
      EncodedInstance e;
      e.source = src;
      e.decoder_input.push_back(Vocabulary::kBos);
      e.decoder_input.insert(e.decoder_input.end(), prefix.begin(), prefix.end());
      e.gold = prefix;
      e.gold.push_back(Vocabulary::kEos);
      batch.push_back(std::move(e));
    }
    const Scores s = score(model, std::span<const EncodedInstance>(batch));
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < prefixes.size(); ++i) {
      const auto row = s.row(s.layout.offsets[i + 1] - 1);
      std::vector<double> out(row.begin(), row.end());
      out[Vocabulary::kPad] = -std::numeric_limits<double>::infinity();
      out[Vocabulary::kBos] = -std::numeric_limits<double>::infinity();
      rows.push_back(std::move(out));
    }
    return rows;
  };
  const Hypothesis best = beam_search(step, Vocabulary::kEos, beam_width, max_length);
  return vocab.decode(best.tokens);
}

}  // namespace kga::models
