#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kga/data/corpus.hpp"

namespace kga::models {

/// Token and label support shared by every model in one experiment.
///
/// Ids 0..3 are reserved for padding, unknown, sequence start and sequence
/// end. Remaining words are ordered by descending frequency, ties broken by
/// the token text, so the same corpora and cutoff always give the same ids.
class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnknown = 1;
  static constexpr std::size_t kBos = 2;
  static constexpr std::size_t kEos = 3;
  static constexpr std::size_t kReserved = 4;

  Vocabulary();
  /// `words` excludes the reserved entries and is taken in id order.
  Vocabulary(std::vector<std::string> words, std::vector<std::string> labels);

  static Vocabulary build(std::span<const data::Corpus* const> corpora, std::size_t min_frequency = 1);

  std::size_t size() const noexcept { return words_.size(); }
  std::size_t id(std::string_view token) const;
  const std::string& token(std::size_t id) const { return words_.at(id); }
  std::vector<std::size_t> encode(std::span<const std::string> tokens) const;
  std::vector<std::string> decode(std::span<const std::size_t> ids) const;

  std::size_t label_count() const noexcept { return labels_.size(); }
  /// Throws std::out_of_range for a label outside the support.
  std::size_t label_id(std::string_view label) const;
  const std::string& label(std::size_t id) const { return labels_.at(id); }

  const std::vector<std::string>& words() const noexcept { return words_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  /// FNV-1a over words and labels; equal hashes mean equal supports.
  std::uint64_t hash() const noexcept { return hash_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.words_ == b.words_ && a.labels_ == b.labels_;
  }

 private:
  void reindex();

  std::vector<std::string> words_;
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::size_t> word_ids_;
  std::unordered_map<std::string, std::size_t> label_ids_;
  std::uint64_t hash_ = 0;
};

}  // namespace kga::models
