#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kga/eval/mia.hpp"
#include "kga/unlearn/kga.hpp"

namespace kga::harness {

/// Metrics of one model on one split. Reference-relative values are absent
/// where they are meaningless (JSD and LPD of the Retrain oracle against
/// itself, PDLP of the original against itself) or were not requested.
struct SplitMetrics {
  std::string split;            // "forget" or "test"
  std::size_t instances = 0;
  std::optional<double> task;        // accuracy in percent, or corpus BLEU-4
  std::optional<double> perplexity;  // mean per-instance perplexity
  std::optional<double> jsd;         // to Retrain
  std::optional<double> lpd;         // to Retrain
  std::optional<double> pdlp;        // against the original model
};

/// One model of a seed: "original", "retrain", or an unlearning method.
struct MetricsReport {
  std::string model;
  std::vector<SplitMetrics> splits;
  std::optional<eval::AttackResult> attack;  // D_f as members
  std::optional<std::size_t> token_count;    // lexical probe: chosen token in generations
  // Wall time. Excluded from the canonical report.
  double seconds = 0.0;         // training or unlearning call, helpers included
  double helper_seconds = 0.0;  // KGA only

  const SplitMetrics* split(std::string_view name) const;
};

struct SeedReport {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;  // set when !ok
  std::size_t forget_size = 0;
  std::size_t retain_size = 0;
  std::size_t extra_size = 0;
  std::size_t probe_prompts = 0;  // held-out prompts used by the lexical probe
  std::vector<MetricsReport> models;
  std::optional<unlearn::KGAReport> kga;

  const MetricsReport* model(std::string_view name) const;
};

struct ReportBundle {
  std::string name;
  std::string task_metric;  // "accuracy" or "bleu4"
  std::string config;       // canonical config text
  std::vector<SeedReport> seeds;
};

/// Canonical JSON: sorted keys, shortest round-trip numbers, no timings, so
/// identical configs give identical bytes.
std::string to_json(const ReportBundle& bundle);
/// Wall-clock table: one record per seed and model.
std::string timings_json(const ReportBundle& bundle);
/// Inverse of to_json, optionally merging a timings_json document.
ReportBundle bundle_from_json(const std::string& report, const std::string& timings = {});

/// One row per seed, model and split.
std::string to_csv(const ReportBundle& bundle);

/// Plot series as (file name, CSV contents): time bars, PDLP table, gap
/// trajectory.
std::vector<std::pair<std::string, std::string>> plot_files(const ReportBundle& bundle);

/// Sweep curve over related bundles: x is the bundle name, y the mean over
/// successful seeds of each model's forget and test metrics.
std::string sweep_csv(std::span<const ReportBundle> bundles);

enum class ReportFormat { kJson, kCsv, kPlot };
const char* format_name(ReportFormat f) noexcept;
/// Throws ConfigError for an unknown name.
ReportFormat parse_format(std::string_view name);

/// Writes the requested formats into `dir` atomically and returns the paths
/// written: report.json and timings.json, metrics.csv, plot_*.csv. Throws
/// std::runtime_error when the directory cannot be written.
std::vector<std::filesystem::path> emit_report(const ReportBundle& bundle, const std::filesystem::path& dir,
                                               std::span<const ReportFormat> formats);

}  // namespace kga::harness
