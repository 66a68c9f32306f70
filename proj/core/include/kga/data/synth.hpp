#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "kga/data/corpus.hpp"

namespace kga::data {

/// Desk-scale labeled-text generator. Each label owns a cluster of
/// `cluster_size` tokens; the remaining vocabulary is a background pool.
/// A token is drawn from the instance's own cluster with probability
/// 1 - noise_ratio; otherwise it is noise, taken from another label's cluster
/// with probability `confusion` and from the background pool otherwise.
/// A large background pool makes many noise tokens rare, which gives a
/// trained model instance-specific evidence to memorize.
struct ClassificationSynthConfig {
  std::size_t labels = 4;
  std::size_t per_label = 100;
  std::size_t vocab_size = 2000;
  std::size_t cluster_size = 8;
  std::size_t tokens_per_instance = 8;
  double noise_ratio = 0.5;
  double confusion = 0.3;
};

/// Instances are interleaved by label (label of instance i is i mod k) so any
/// prefix is close to balanced. Ids are "c000000", "c000001", ...
Corpus synth_classification(const ClassificationSynthConfig& cfg, std::uint64_t seed);

/// Toy translation language. Source words s0..s{V-1} are drawn with Zipfian
/// frequencies (rank^-zipf_exponent), so high-index words are rare. Each
/// source word maps to one target word through a seeded bijection; with
/// `reorder`, each adjacent pair of positions (0,1), (2,3), ... is swapped.
/// A `synonym_ratio` share of source words have a second target form and
/// pick one of the two at random per occurrence, which only memorization can
/// predict.
struct TranslationSynthConfig {
  std::size_t instances = 1000;
  std::size_t source_vocab = 40;
  std::size_t min_length = 3;
  std::size_t max_length = 10;
  double zipf_exponent = 1.0;
  bool reorder = true;
  double synonym_ratio = 0.0;
};

/// The generator's deterministic rule, usable as an oracle decoder. Source
/// words with synonyms translate to their primary form.
struct TranslationRule {
  std::vector<std::size_t> mapping;   // source index -> target index
  std::vector<char> has_synonym;
  bool reorder = true;

  std::string source_word(std::size_t i) const;
  std::string target_word(std::size_t i) const;     // primary form of source word i
  std::string synonym_word(std::size_t i) const;    // alternate form of source word i
  std::vector<std::string> apply(const std::vector<std::string>& source) const;
};

TranslationRule translation_rule(const TranslationSynthConfig& cfg, std::uint64_t seed);

/// Ids are "t000000", "t000001", ...
Corpus synth_translation(const TranslationSynthConfig& cfg, std::uint64_t seed);

}  // namespace kga::data
