#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "kga/data/corpus.hpp"

namespace kga::data {

class CorpusFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads a JSONL corpus. Classification lines are {"id"?, "text", "label"};
/// seq2seq lines are {"id"?, "source", "target"}. Blank lines are skipped;
/// missing ids become the 1-based line number. Throws CorpusFormatError for
/// unreadable files, malformed lines (message carries the line number),
/// duplicate ids, and empty files ("empty corpus").
Corpus load_corpus(const std::filesystem::path& path, PayloadKind schema);

/// Parses JSONL text already in memory; `origin` is used in messages.
Corpus parse_corpus(const std::string& text, PayloadKind schema, const std::string& origin = "<memory>");

std::string serialize_corpus(const Corpus& corpus);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

}  // namespace kga::data
