#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "kga/data/corpus.hpp"

namespace kga::data {

/// Forget exactly these ids.
struct ExplicitIds {
  std::vector<std::string> ids;
};

/// Forget `count` instances drawn uniformly without replacement.
struct RandomCount {
  std::size_t count = 0;
};

/// Forget every instance whose content (target side) contains `token`.
struct TokenMatch {
  std::string token;
};

/// Rank instances by a per-instance score, cut the ranking into `bands`
/// equal fragments (lowest scores first) and forget `count` random
/// instances of fragment `band` (0-based). Instances without a score are
/// never selected.
struct ScoreBand {
  std::map<std::string, double> scores;
  std::size_t band = 0;
  std::size_t bands = 5;
  std::size_t count = 100;
};

using ForgetSpec = std::variant<ExplicitIds, RandomCount, TokenMatch, ScoreBand>;

/// The training set D, the forget set D_f within it, the retain set
/// D_r = D \ D_f, and the extra set D_n disjoint from D.
struct SplitSet {
  Corpus full;
  Corpus forget;
  Corpus retain;
  Corpus extra;

  /// Re-checks the id algebra: D_f within D, D_r and D_f partition D, and
  /// D_n shares no id with D. Throws std::logic_error on violation.
  void validate() const;
};

/// Builds the split set. Throws std::invalid_argument when `extra` overlaps
/// `corpus` by id, when the spec selects every instance, when an explicit
/// id is unknown, or when payload kinds differ.
SplitSet partition(const Corpus& corpus, const ForgetSpec& spec, const Corpus& extra, std::uint64_t seed);

/// Ids selected by `spec`, in corpus order.
std::vector<std::string> select_forget_ids(const Corpus& corpus, const ForgetSpec& spec, std::uint64_t seed);

/// On-disk record of a partition: {"forget_ids":[...], "extra_path":"...",
/// "seed":n, "spec":{...}}.
struct SplitManifest {
  std::vector<std::string> forget_ids;
  std::string extra_path;
  std::uint64_t seed = 0;
  std::string spec_json = "{}";  // canonical JSON object describing the ForgetSpec

  std::string to_json() const;
  static SplitManifest from_json(const std::string& text);
};

std::string describe_spec(const ForgetSpec& spec);  // canonical JSON object

}  // namespace kga::data
