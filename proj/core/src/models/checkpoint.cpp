#include "kga/models/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "kga/util/atomic_file.hpp"

namespace kga::models {
namespace {

constexpr const char* kMagic = "KGAC1";
constexpr int kFormatVersion = 1;

void put_f64(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>(bits & 0xff));
    bits >>= 8;
  }
}

double get_f64(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | p[i];
  return std::bit_cast<double>(bits);
}

}  // namespace

std::string serialize_checkpoint(const Model& model) {
  nlohmann::json header;
  header["format_version"] = kFormatVersion;
  header["architecture"] = {
      {"family", architecture_name(model.spec().architecture)},
      {"embedding", model.spec().embedding},
      {"hidden", model.spec().hidden},
      {"max_positions", model.spec().max_positions},
  };
  header["vocabulary_hash"] = model.vocabulary().hash();
  header["seed"] = model.seed();
  const auto& words = model.vocabulary().words();
  header["vocabulary"] = {
      {"words", std::vector<std::string>(words.begin() + Vocabulary::kReserved, words.end())},
      {"labels", model.vocabulary().labels()},
  };
  nlohmann::json params = nlohmann::json::array();
  for (std::size_t i = 0; i < model.parameters().size(); ++i) {
    params.push_back({{"name", model.parameter_names()[i]}, {"shape", model.parameters()[i].shape()}});
  }
  header["parameters"] = params;

  std::string out = std::string(kMagic) + "\n" + header.dump() + "\n";
  out.reserve(out.size() + model.parameter_count() * 8);
  for (const auto& p : model.parameters()) {
    for (double v : p.data()) put_f64(out, v);
  }
  return out;
}

Model deserialize_checkpoint(const std::string& bytes) {
  const std::size_t magic_end = bytes.find('\n');
  if (magic_end == std::string::npos || bytes.compare(0, magic_end, kMagic) != 0) {
    throw CheckpointError("checkpoint: missing KGAC1 magic");
  }
  const std::size_t header_end = bytes.find('\n', magic_end + 1);
  if (header_end == std::string::npos) throw CheckpointError("checkpoint: truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(magic_end + 1, header_end - magic_end - 1));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint: bad header: ") + e.what());
  }
  try {
    if (header.at("format_version").get<int>() != kFormatVersion) {
      throw CheckpointError("checkpoint: unsupported format version");
    }
    const auto& arch = header.at("architecture");
    ModelSpec spec;
    spec.architecture = parse_architecture(arch.at("family").get<std::string>());
    spec.embedding = arch.at("embedding").get<std::size_t>();
    spec.hidden = arch.at("hidden").get<std::size_t>();
    spec.max_positions = arch.at("max_positions").get<std::size_t>();
    auto vocab = std::make_shared<const Vocabulary>(header.at("vocabulary").at("words").get<std::vector<std::string>>(),
                                                    header.at("vocabulary").at("labels").get<std::vector<std::string>>());
    if (vocab->hash() != header.at("vocabulary_hash").get<std::uint64_t>()) {
      throw CheckpointError("checkpoint: vocabulary hash mismatch");
    }
    std::vector<std::string> names;
    std::vector<gradkit::DenseArray> params;
    std::size_t offset = header_end + 1;
    const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
    for (const auto& entry : header.at("parameters")) {
      names.push_back(entry.at("name").get<std::string>());
      const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
      gradkit::DenseArray a(shape);
      if (offset + a.size() * 8 > bytes.size()) throw CheckpointError("checkpoint: truncated parameter block");
      for (double& v : a.data()) {
        v = get_f64(raw + offset);
        offset += 8;
      }
      params.push_back(std::move(a));
    }
    if (offset != bytes.size()) throw CheckpointError("checkpoint: trailing bytes after parameter block");
    Model model(spec, std::move(vocab), std::move(names), std::move(params), header.at("seed").get<std::uint64_t>());
    // Reject blocks that do not match the architecture's declared layout.
    const Model reference = initialize(spec, model.shared_vocabulary(), 0);
    if (reference.parameter_names() != model.parameter_names()) {
      throw CheckpointError("checkpoint: parameter names do not match the architecture");
    }
    for (std::size_t i = 0; i < reference.parameters().size(); ++i) {
      if (!reference.parameters()[i].same_shape(model.parameters()[i])) {
        throw CheckpointError("checkpoint: parameter '" + model.parameter_names()[i] + "' has the wrong shape");
      }
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint: bad header: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  util::write_file_atomic(path, serialize_checkpoint(model));
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("checkpoint: cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_checkpoint(buf.str());
}

}  // namespace kga::models
