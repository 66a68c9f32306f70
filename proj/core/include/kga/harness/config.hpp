#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "kga/data/synth.hpp"
#include "kga/eval/mia.hpp"
#include "kga/models/model.hpp"
#include "kga/models/training.hpp"
#include "kga/unlearn/kga.hpp"

namespace kga::harness {

/// Invalid or unreadable configuration. The CLI maps it to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TaskKind { kClassification, kTranslation };
enum class Method { kKga, kRetrain, kSisa, kBadt };
enum class ForgetMode { kRandom, kIds, kToken, kBand };

const char* task_name(TaskKind t) noexcept;
const char* method_name(Method m) noexcept;
const char* forget_mode_name(ForgetMode m) noexcept;
/// These throw ConfigError for unknown names.
TaskKind parse_task(std::string_view name);
Method parse_method(std::string_view name);
ForgetMode parse_forget_mode(std::string_view name);

struct DataConfig {
  // JSONL corpora; all three set or none (synthetic data).
  std::filesystem::path train_path;
  std::filesystem::path extra_path;
  std::filesystem::path test_path;
  // A synthetic corpus is cut in order into D, the D_n pool and the test set.
  std::size_t train_size = 5000;
  std::size_t extra_pool = 100;
  std::size_t test_size = 1000;
  data::ClassificationSynthConfig classification;
  data::TranslationSynthConfig translation;

  bool synthetic() const noexcept { return train_path.empty(); }
};

struct SplitConfig {
  ForgetMode mode = ForgetMode::kRandom;
  std::size_t count = 100;          // random and band modes
  std::string token;                // token mode
  std::vector<std::string> ids;     // ids mode
  std::size_t band = 0;             // band mode: fragment index, lowest scores first
  std::size_t bands = 5;
  std::size_t extra_count = 0;      // |D_n|; 0 means |D_f|
};

struct EvalConfig {
  std::vector<std::string> metrics{"task", "perplexity", "jsd", "lpd", "pdlp"};
  std::size_t beam = 1;  // decoding width for BLEU and the lexical probe
};

struct MiaSettings {
  bool enabled = false;
  double shadow_fraction = 0.3;
  std::size_t nonmembers = 100;  // taken from the front of the test set
  eval::AttackerConfig attacker;
};

struct ExperimentConfig {
  std::string name = "experiment";
  TaskKind task = TaskKind::kClassification;
  DataConfig data;
  SplitConfig split;
  models::ModelSpec model;
  models::TrainConfig train;
  unlearn::HelperConfig helpers;
  unlearn::UnlearnConfig unlearn;
  unlearn::UnlearnConfig badt;  // only alpha, learning_rate, batch_size and badt_steps are read
  std::size_t sisa_shards = 5;
  std::vector<Method> methods{Method::kKga};
  EvalConfig eval;
  MiaSettings mia;
  std::filesystem::path output_dir;  // empty: nothing is persisted
  bool checkpoints = true;
  std::vector<std::uint64_t> seeds{1};

  bool wants(std::string_view metric) const;
  /// Throws ConfigError on inconsistent settings or missing input files.
  void validate() const;
};

/// Flat key-value text with one section per module:
///
///   [train]
///   epochs = 3
///
/// Keys are addressed as "section.key" by set_option. Unknown sections or
/// keys and malformed values throw ConfigError.
ExperimentConfig parse_config(const std::string& text, const ExperimentConfig& base = {});
ExperimentConfig load_config(const std::filesystem::path& path, const ExperimentConfig& base = {});

/// Canonical text: every key, fixed order, shortest round-trip numbers.
/// parse_config(to_ini(c)) reproduces c.
std::string to_ini(const ExperimentConfig& config);

void set_option(ExperimentConfig& config, std::string_view key, const std::string& value);
std::string get_option(const ExperimentConfig& config, std::string_view key);
std::vector<std::string> option_keys();

}  // namespace kga::harness
