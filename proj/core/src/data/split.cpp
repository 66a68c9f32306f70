#include "kga/data/split.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <stdexcept>
#include <unordered_set>

#include "json.hpp"

namespace kga::data {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Chooses `count` of `candidates` with a seeded shuffle; returns the chosen
// positions sorted so the caller can keep corpus order.
std::vector<std::size_t> sample_positions(std::vector<std::size_t> candidates, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::shuffle(candidates.begin(), candidates.end(), rng);
  candidates.resize(std::min(count, candidates.size()));
  std::sort(candidates.begin(), candidates.end());
  return candidates;
}

}  // namespace

std::vector<std::string> select_forget_ids(const Corpus& corpus, const ForgetSpec& spec, std::uint64_t seed) {
  std::vector<std::size_t> chosen;
  std::visit(Overloaded{
                 [&](const ExplicitIds& s) {
                   std::unordered_set<std::string> wanted;
                   for (const std::string& id : s.ids) {
                     if (!corpus.contains(id)) {
                       throw std::invalid_argument("partition: forget id '" + id + "' is not in the corpus");
                     }
                     wanted.insert(id);
                   }
                   for (std::size_t i = 0; i < corpus.size(); ++i) {
                     if (wanted.contains(corpus[i].id)) chosen.push_back(i);
                   }
                 },
                 [&](const RandomCount& s) {
                   if (s.count > corpus.size()) {
                     throw std::invalid_argument("partition: cannot forget " + std::to_string(s.count) + " of " +
                                                 std::to_string(corpus.size()) + " instances");
                   }
                   std::vector<std::size_t> all(corpus.size());
                   std::iota(all.begin(), all.end(), std::size_t{0});
                   chosen = sample_positions(std::move(all), s.count, seed);
                 },
                 [&](const TokenMatch& s) {
                   for (std::size_t i = 0; i < corpus.size(); ++i) {
                     if (corpus[i].contains_token(s.token)) chosen.push_back(i);
                   }
                 },
                 [&](const ScoreBand& s) {
                   if (s.bands == 0 || s.band >= s.bands) {
                     throw std::invalid_argument("partition: band " + std::to_string(s.band) + " outside 0.." +
                                                 std::to_string(s.bands) + "-1");
                   }
                   std::vector<std::size_t> scored;
                   for (std::size_t i = 0; i < corpus.size(); ++i) {
                     if (s.scores.contains(corpus[i].id)) scored.push_back(i);
                   }
                   std::stable_sort(scored.begin(), scored.end(), [&](std::size_t a, std::size_t b) {
                     const double sa = s.scores.at(corpus[a].id);
                     const double sb = s.scores.at(corpus[b].id);
                     return sa != sb ? sa < sb : corpus[a].id < corpus[b].id;
                   });
                   const std::size_t lo = s.band * scored.size() / s.bands;
                   const std::size_t hi = (s.band + 1) * scored.size() / s.bands;
                   std::vector<std::size_t> fragment(scored.begin() + static_cast<std::ptrdiff_t>(lo),
                                                     scored.begin() + static_cast<std::ptrdiff_t>(hi));
                   chosen = sample_positions(std::move(fragment), s.count, seed);
                 },
             },
             spec);
  std::vector<std::string> ids;
  ids.reserve(chosen.size());
  for (std::size_t i : chosen) ids.push_back(corpus[i].id);
  return ids;
}

SplitSet partition(const Corpus& corpus, const ForgetSpec& spec, const Corpus& extra, std::uint64_t seed) {
  if (corpus.empty()) {
    throw std::invalid_argument("partition: empty corpus");
  }
  if (!extra.empty() && extra.kind() != corpus.kind()) {
    throw std::invalid_argument("partition: extra set payload kind differs from the corpus");
  }
  for (const Instance& inst : extra) {
    if (corpus.contains(inst.id)) {
      throw std::invalid_argument("partition: extra instance '" + inst.id + "' overlaps the training corpus");
    }
  }
  const std::vector<std::string> forget_ids = select_forget_ids(corpus, spec, seed);
  if (forget_ids.size() == corpus.size()) {
    throw std::invalid_argument("partition: forget spec selects every instance; D_f must be a strict subset");
  }
  SplitSet split{
      .full = corpus,
      .forget = corpus.select(forget_ids, "D_f"),
      .retain = corpus.exclude(forget_ids, "D_r"),
      .extra = extra,
  };
  split.validate();
  return split;
}

void SplitSet::validate() const {
  for (const Instance& inst : forget) {
    if (!full.contains(inst.id)) throw std::logic_error("split: forget id '" + inst.id + "' not in D");
    if (retain.contains(inst.id)) throw std::logic_error("split: id '" + inst.id + "' in both D_f and D_r");
  }
  for (const Instance& inst : retain) {
    if (!full.contains(inst.id)) throw std::logic_error("split: retain id '" + inst.id + "' not in D");
  }
  if (forget.size() + retain.size() != full.size()) {
    throw std::logic_error("split: D_f and D_r do not cover D");
  }
  if (forget.size() == full.size()) {
    throw std::logic_error("split: D_f equals D");
  }
  for (const Instance& inst : extra) {
    if (full.contains(inst.id)) throw std::logic_error("split: extra id '" + inst.id + "' overlaps D");
  }
}

std::string describe_spec(const ForgetSpec& spec) {
  nlohmann::json j;
  std::visit(Overloaded{
                 [&](const ExplicitIds& s) {
                   j["kind"] = "ids";
                   j["ids"] = s.ids;
                 },
                 [&](const RandomCount& s) {
                   j["kind"] = "random";
                   j["count"] = s.count;
                 },
                 [&](const TokenMatch& s) {
                   j["kind"] = "token";
                   j["token"] = s.token;
                 },
                 [&](const ScoreBand& s) {
                   j["kind"] = "band";
                   j["band"] = s.band;
                   j["bands"] = s.bands;
                   j["count"] = s.count;
                 },
             },
             spec);
  return j.dump();
}

std::string SplitManifest::to_json() const {
  nlohmann::json j;
  j["forget_ids"] = forget_ids;
  j["extra_path"] = extra_path;
  j["seed"] = seed;
  j["spec"] = nlohmann::json::parse(spec_json);
  return j.dump(2) + "\n";
}

SplitManifest SplitManifest::from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  SplitManifest m;
  m.forget_ids = j.at("forget_ids").get<std::vector<std::string>>();
  m.extra_path = j.value("extra_path", std::string{});
  m.seed = j.value("seed", std::uint64_t{0});
  m.spec_json = j.contains("spec") ? j.at("spec").dump() : "{}";
  return m;
}

}  // namespace kga::data
