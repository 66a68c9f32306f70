#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "kga/models/model.hpp"

namespace kga::models {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Layout: the line "KGAC1", one line of JSON header (architecture spec,
/// vocabulary hash, seed, format version, vocabulary, parameter names and
/// shapes), then every parameter as little-endian 64-bit floats in declared
/// order.
std::string serialize_checkpoint(const Model& model);
Model deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace kga::models
