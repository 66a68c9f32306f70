#include "kga/data/corpus.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

namespace kga::data {

const char* payload_kind_name(PayloadKind kind) noexcept {
  return kind == PayloadKind::kClassification ? "classification" : "seq2seq";
}

const std::vector<std::string>& Instance::content_tokens() const {
  if (const auto* pair = std::get_if<SequencePair>(&payload)) {
    return pair->target;
  }
  return std::get<LabeledText>(payload).tokens;
}

bool Instance::contains_token(std::string_view token) const {
  const auto& tokens = content_tokens();
  return std::find(tokens.begin(), tokens.end(), token) != tokens.end();
}

Corpus::Corpus(PayloadKind kind, std::vector<Instance> instances, std::string provenance)
    : kind_(kind), instances_(std::move(instances)), provenance_(std::move(provenance)) {
  index_.reserve(instances_.size());
  for (std::size_t i = 0; i < instances_.size(); ++i) {
    const Instance& inst = instances_[i];
    if (inst.kind() != kind_) {
      throw std::invalid_argument("corpus: instance '" + inst.id + "' is " + payload_kind_name(inst.kind()) +
                                  " but the corpus is " + payload_kind_name(kind_));
    }
    if (!index_.emplace(inst.id, i).second) {
      throw std::invalid_argument("corpus: duplicate id '" + inst.id + "'");
    }
  }
}

bool Corpus::contains(std::string_view id) const { return find(id) != nullptr; }

const Instance* Corpus::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &instances_[it->second];
}

std::vector<std::string> Corpus::ids() const {
  std::vector<std::string> out;
  out.reserve(instances_.size());
  for (const Instance& inst : instances_) out.push_back(inst.id);
  return out;
}

Corpus Corpus::select(std::span<const std::string> ids, std::string provenance) const {
  std::unordered_set<std::string> wanted(ids.begin(), ids.end());
  std::vector<Instance> out;
  for (const Instance& inst : instances_) {
    if (wanted.contains(inst.id)) out.push_back(inst);
  }
  return Corpus(kind_, std::move(out), std::move(provenance));
}

Corpus Corpus::exclude(std::span<const std::string> ids, std::string provenance) const {
  std::unordered_set<std::string> dropped(ids.begin(), ids.end());
  std::vector<Instance> out;
  for (const Instance& inst : instances_) {
    if (!dropped.contains(inst.id)) out.push_back(inst);
  }
  return Corpus(kind_, std::move(out), std::move(provenance));
}

Corpus Corpus::slice(std::size_t begin, std::size_t end, std::string provenance) const {
  end = std::min(end, instances_.size());
  begin = std::min(begin, end);
  return Corpus(kind_, std::vector<Instance>(instances_.begin() + static_cast<std::ptrdiff_t>(begin),
                                             instances_.begin() + static_cast<std::ptrdiff_t>(end)),
                std::move(provenance));
}

std::vector<const Instance*> Corpus::pointers() const {
  std::vector<const Instance*> out;
  out.reserve(instances_.size());
  for (const Instance& inst : instances_) out.push_back(&inst);
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) tokens.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return tokens;
}

std::string join_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

}  // namespace kga::data
