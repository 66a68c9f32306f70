#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace kga::data {

enum class PayloadKind { kClassification, kSeq2Seq };

const char* payload_kind_name(PayloadKind kind) noexcept;

struct LabeledText {
  std::vector<std::string> tokens;
  std::string label;
  friend bool operator==(const LabeledText&, const LabeledText&) = default;
};

struct SequencePair {
  std::vector<std::string> source;
  std::vector<std::string> target;
  friend bool operator==(const SequencePair&, const SequencePair&) = default;
};

/// One element of the example space: a labeled text or a source/target pair.
struct Instance {
  std::string id;
  std::variant<LabeledText, SequencePair> payload;

  PayloadKind kind() const noexcept {
    return std::holds_alternative<LabeledText>(payload) ? PayloadKind::kClassification : PayloadKind::kSeq2Seq;
  }
  const LabeledText& text() const { return std::get<LabeledText>(payload); }
  const SequencePair& pair() const { return std::get<SequencePair>(payload); }

  /// Tokens the model is asked to produce or that carry the content: the
  /// target side of a pair, or the text of a labeled instance.
  const std::vector<std::string>& content_tokens() const;
  bool contains_token(std::string_view token) const;

  friend bool operator==(const Instance&, const Instance&) = default;
};

/// Ordered, immutable collection of instances sharing one payload kind.
/// Ids are unique. An empty corpus is representable (an empty forget set is
/// legal); training entry points reject it.
class Corpus {
 public:
  Corpus() = default;
  Corpus(PayloadKind kind, std::vector<Instance> instances, std::string provenance = {});

  PayloadKind kind() const noexcept { return kind_; }
  std::size_t size() const noexcept { return instances_.size(); }
  bool empty() const noexcept { return instances_.empty(); }
  const std::string& provenance() const noexcept { return provenance_; }
  const std::vector<Instance>& instances() const noexcept { return instances_; }
  const Instance& operator[](std::size_t i) const { return instances_[i]; }
  auto begin() const noexcept { return instances_.begin(); }
  auto end() const noexcept { return instances_.end(); }

  bool contains(std::string_view id) const;
  const Instance* find(std::string_view id) const;
  std::vector<std::string> ids() const;

  /// Instances whose ids are in `ids`, kept in corpus order.
  Corpus select(std::span<const std::string> ids, std::string provenance = {}) const;
  /// Instances whose ids are not in `ids`, kept in corpus order.
  Corpus exclude(std::span<const std::string> ids, std::string provenance = {}) const;
  Corpus slice(std::size_t begin, std::size_t end, std::string provenance = {}) const;
  /// Pointers into this corpus, for batch-oriented APIs.
  std::vector<const Instance*> pointers() const;

 private:
  PayloadKind kind_ = PayloadKind::kClassification;
  std::vector<Instance> instances_;
  std::string provenance_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Whitespace tokenization; runs of spaces, tabs and newlines separate tokens.
std::vector<std::string> tokenize(std::string_view text);
std::string join_tokens(std::span<const std::string> tokens);

}  // namespace kga::data
