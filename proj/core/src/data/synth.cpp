#include "kga/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <stdexcept>

#include "kga/util/seed.hpp"

namespace kga::data {
namespace {

std::string numbered(char prefix, std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%c%06zu", prefix, n);
  return buf;
}

}  // namespace

Corpus synth_classification(const ClassificationSynthConfig& cfg, std::uint64_t seed) {
  if (cfg.labels < 2) throw std::invalid_argument("synth_classification: need at least 2 labels");
  if (cfg.cluster_size == 0 || cfg.tokens_per_instance == 0) {
    throw std::invalid_argument("synth_classification: cluster size and tokens per instance must be positive");
  }
  if (cfg.noise_ratio < 0.0 || cfg.noise_ratio > 1.0 || cfg.confusion < 0.0 || cfg.confusion > 1.0) {
    throw std::invalid_argument("synth_classification: noise ratio and confusion must lie in [0, 1]");
  }
  const std::size_t cluster_tokens = cfg.labels * cfg.cluster_size;
  const bool needs_background = cfg.noise_ratio > 0.0 && cfg.confusion < 1.0;
  if (cfg.vocab_size < cluster_tokens + (needs_background ? 1 : 0)) {
    throw std::invalid_argument("synth_classification: vocabulary of " + std::to_string(cfg.vocab_size) +
                                " is too small for " + std::to_string(cfg.labels) + " clusters of " +
                                std::to_string(cfg.cluster_size));
  }
  const std::size_t background = cfg.vocab_size - cluster_tokens;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick_cluster_token(0, cfg.cluster_size - 1);
  std::uniform_int_distribution<std::size_t> pick_other_label(0, cfg.labels - 2);
  std::uniform_int_distribution<std::size_t> pick_background(0, background > 0 ? background - 1 : 0);

  auto cluster_word = [&](std::size_t label, std::size_t j) {
    return "c" + std::to_string(label) + "_" + std::to_string(j);
  };

  const std::size_t total = cfg.labels * cfg.per_label;
  std::vector<Instance> instances;
  instances.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    const std::size_t label = i % cfg.labels;
    LabeledText text;
    text.label = "L" + std::to_string(label);
    for (std::size_t t = 0; t < cfg.tokens_per_instance; ++t) {
      if (unit(rng) >= cfg.noise_ratio) {
        text.tokens.push_back(cluster_word(label, pick_cluster_token(rng)));
      } else if (unit(rng) < cfg.confusion) {
        std::size_t other = pick_other_label(rng);
        if (other >= label) ++other;
        text.tokens.push_back(cluster_word(other, pick_cluster_token(rng)));
      } else {
        text.tokens.push_back("w" + std::to_string(pick_background(rng)));
      }
    }
    instances.push_back(Instance{numbered('c', i), std::move(text)});
  }
  return Corpus(PayloadKind::kClassification, std::move(instances), "synth-classification");
}

std::string TranslationRule::source_word(std::size_t i) const { return "s" + std::to_string(i); }
std::string TranslationRule::target_word(std::size_t i) const { return "t" + std::to_string(mapping.at(i)); }
std::string TranslationRule::synonym_word(std::size_t i) const { return "t" + std::to_string(mapping.at(i)) + "x"; }

std::vector<std::string> TranslationRule::apply(const std::vector<std::string>& source) const {
  std::vector<std::string> out;
  out.reserve(source.size());
  for (const std::string& word : source) {
    if (word.size() < 2 || word[0] != 's') {
      throw std::invalid_argument("translation rule: '" + word + "' is not a source word");
    }
    out.push_back(target_word(std::stoul(word.substr(1))));
  }
  if (reorder) {
    for (std::size_t i = 0; i + 1 < out.size(); i += 2) std::swap(out[i], out[i + 1]);
  }
  return out;
}

TranslationRule translation_rule(const TranslationSynthConfig& cfg, std::uint64_t seed) {
  if (cfg.source_vocab < 2) throw std::invalid_argument("synth_translation: need at least 2 source words");
  if (cfg.min_length == 0 || cfg.min_length > cfg.max_length) {
    throw std::invalid_argument("synth_translation: invalid length range");
  }
  if (cfg.synonym_ratio < 0.0 || cfg.synonym_ratio > 1.0) {
    throw std::invalid_argument("synth_translation: synonym ratio must lie in [0, 1]");
  }
  TranslationRule rule;
  rule.reorder = cfg.reorder;
  rule.mapping.resize(cfg.source_vocab);
  std::iota(rule.mapping.begin(), rule.mapping.end(), std::size_t{0});
  std::mt19937_64 rng(util::derive_seed(seed, 1));
  std::shuffle(rule.mapping.begin(), rule.mapping.end(), rng);
  rule.has_synonym.assign(cfg.source_vocab, 0);
  const auto synonyms = static_cast<std::size_t>(std::llround(cfg.synonym_ratio * static_cast<double>(cfg.source_vocab)));
  std::vector<std::size_t> order(cfg.source_vocab);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t k = 0; k < synonyms; ++k) rule.has_synonym[order[k]] = 1;
  return rule;
}

Corpus synth_translation(const TranslationSynthConfig& cfg, std::uint64_t seed) {
  const TranslationRule rule = translation_rule(cfg, seed);
  std::vector<double> weights(cfg.source_vocab);
  for (std::size_t i = 0; i < cfg.source_vocab; ++i) {
    weights[i] = std::pow(static_cast<double>(i + 1), -cfg.zipf_exponent);
  }
  std::mt19937_64 rng(util::derive_seed(seed, 2));
  std::discrete_distribution<std::size_t> word(weights.begin(), weights.end());
  std::uniform_int_distribution<std::size_t> length(cfg.min_length, cfg.max_length);
  std::bernoulli_distribution coin(0.5);

  std::vector<Instance> instances;
  instances.reserve(cfg.instances);
  for (std::size_t n = 0; n < cfg.instances; ++n) {
    const std::size_t len = length(rng);
    SequencePair pair;
    std::vector<std::size_t> words(len);
    for (std::size_t& w : words) w = word(rng);
    for (std::size_t w : words) pair.source.push_back(rule.source_word(w));
    for (std::size_t w : words) {
      const bool alternate = rule.has_synonym[w] && coin(rng);
      pair.target.push_back(alternate ? rule.synonym_word(w) : rule.target_word(w));
    }
    if (rule.reorder) {
      for (std::size_t i = 0; i + 1 < pair.target.size(); i += 2) std::swap(pair.target[i], pair.target[i + 1]);
    }
    instances.push_back(Instance{numbered('t', n), std::move(pair)});
  }
  return Corpus(PayloadKind::kSeq2Seq, std::move(instances), "synth-translation");
}

}  // namespace kga::data
