#include "kga/models/vocabulary.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

namespace kga::models {
namespace {

const std::vector<std::string> kReservedWords = {"<pad>", "<unk>", "<s>", "</s>"};

void fnv_mix(std::uint64_t& h, std::string_view s) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  h ^= 0xff;  // separator so ("ab","c") != ("a","bc")
  h *= 0x100000001b3ULL;
}

}  // namespace

Vocabulary::Vocabulary() : words_(kReservedWords) { reindex(); }

Vocabulary::Vocabulary(std::vector<std::string> words, std::vector<std::string> labels)
    : words_(kReservedWords), labels_(std::move(labels)) {
  words_.insert(words_.end(), std::make_move_iterator(words.begin()), std::make_move_iterator(words.end()));
  reindex();
}

void Vocabulary::reindex() {
  word_ids_.clear();
  label_ids_.clear();
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (!word_ids_.emplace(words_[i], i).second) {
      throw std::invalid_argument("vocabulary: duplicate token '" + words_[i] + "'");
    }
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (!label_ids_.emplace(labels_[i], i).second) {
      throw std::invalid_argument("vocabulary: duplicate label '" + labels_[i] + "'");
    }
  }
  hash_ = 0xcbf29ce484222325ULL;
  for (const auto& w : words_) fnv_mix(hash_, w);
  fnv_mix(hash_, "\x01labels");
  for (const auto& l : labels_) fnv_mix(hash_, l);
}

Vocabulary Vocabulary::build(std::span<const data::Corpus* const> corpora, std::size_t min_frequency) {
  std::map<std::string, std::size_t> counts;
  std::set<std::string> labels;
  for (const data::Corpus* corpus : corpora) {
    for (const data::Instance& inst : *corpus) {
      if (inst.kind() == data::PayloadKind::kClassification) {
        for (const auto& t : inst.text().tokens) ++counts[t];
        labels.insert(inst.text().label);
      } else {
        for (const auto& t : inst.pair().source) ++counts[t];
        for (const auto& t : inst.pair().target) ++counts[t];
      }
    }
  }
  std::vector<std::pair<std::string, std::size_t>> entries;
  for (auto& [token, count] : counts) {
    const bool reserved = std::find(kReservedWords.begin(), kReservedWords.end(), token) != kReservedWords.end();
    if (count >= min_frequency && !reserved) entries.emplace_back(token, count);
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> words;
  words.reserve(entries.size());
  for (auto& e : entries) words.push_back(std::move(e.first));
  return Vocabulary(std::move(words), std::vector<std::string>(labels.begin(), labels.end()));
}

std::size_t Vocabulary::id(std::string_view token) const {
  auto it = word_ids_.find(std::string(token));
  return it == word_ids_.end() ? kUnknown : it->second;
}

std::vector<std::size_t> Vocabulary::encode(std::span<const std::string> tokens) const {
  std::vector<std::size_t> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::vector<std::string> Vocabulary::decode(std::span<const std::size_t> ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (std::size_t i : ids) out.push_back(token(i));
  return out;
}

std::size_t Vocabulary::label_id(std::string_view label) const {
  auto it = label_ids_.find(std::string(label));
  if (it == label_ids_.end()) {
    throw std::out_of_range("vocabulary: unknown label '" + std::string(label) + "'");
  }
  return it->second;
}

}  // namespace kga::models
