#include "kga/data/jsonl.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "kga/util/atomic_file.hpp"

namespace kga::data {
namespace {

using nlohmann::json;

std::string text_field(const json& line, const char* key, std::size_t line_no) {
  auto it = line.find(key);
  if (it == line.end()) {
    throw CorpusFormatError("line " + std::to_string(line_no) + ": missing field \"" + key + "\"");
  }
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  throw CorpusFormatError("line " + std::to_string(line_no) + ": field \"" + key + "\" must be a string");
}

}  // namespace

Corpus parse_corpus(const std::string& text, PayloadKind schema, const std::string& origin) {
  std::istringstream in(text);
  std::string raw;
  std::vector<Instance> instances;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
    json line;
    try {
      line = json::parse(raw);
    } catch (const json::parse_error& e) {
      throw CorpusFormatError(origin + ": line " + std::to_string(line_no) + ": malformed JSON (" + e.what() + ")");
    }
    if (!line.is_object()) {
      throw CorpusFormatError(origin + ": line " + std::to_string(line_no) + ": expected a JSON object");
    }
    Instance inst;
    try {
      inst.id = line.contains("id") ? text_field(line, "id", line_no) : std::to_string(line_no);
      if (schema == PayloadKind::kClassification) {
        inst.payload = LabeledText{tokenize(text_field(line, "text", line_no)), text_field(line, "label", line_no)};
      } else {
        SequencePair pair{tokenize(text_field(line, "source", line_no)), tokenize(text_field(line, "target", line_no))};
        inst.payload = std::move(pair);
      }
    } catch (const CorpusFormatError& e) {
      throw CorpusFormatError(origin + ": " + e.what());
    }
    instances.push_back(std::move(inst));
  }
  if (instances.empty()) {
    throw CorpusFormatError(origin + ": empty corpus");
  }
  try {
    return Corpus(schema, std::move(instances), origin);
  } catch (const std::invalid_argument& e) {
    throw CorpusFormatError(origin + ": " + e.what());
  }
}

Corpus load_corpus(const std::filesystem::path& path, PayloadKind schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw CorpusFormatError("cannot open corpus file " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_corpus(buffer.str(), schema, path.string());
}

std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const Instance& inst : corpus) {
    json line;
    line["id"] = inst.id;
    if (inst.kind() == PayloadKind::kClassification) {
      line["text"] = join_tokens(inst.text().tokens);
      line["label"] = inst.text().label;
    } else {
      line["source"] = join_tokens(inst.pair().source);
      line["target"] = join_tokens(inst.pair().target);
    }
    out += line.dump();
    out += '\n';
  }
  return out;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  util::write_file_atomic(path, serialize_corpus(corpus));
}

}  // namespace kga::data
