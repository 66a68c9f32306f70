#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "kga/data/corpus.hpp"
#include "kga/harness/config.hpp"
#include "kga/harness/report.hpp"
#include "kga/models/model.hpp"
#include "kga/models/vocabulary.hpp"

namespace kga::harness {

/// D, the pool D_n is drawn from, the held-out test set, and a vocabulary
/// over D and the pool.
struct Corpora {
  data::Corpus train;
  data::Corpus pool;
  data::Corpus test;
  std::shared_ptr<const models::Vocabulary> vocabulary;
};

/// Synthetic data comes from derive_seed(seed, data); JSONL data is read
/// as is. Throws ConfigError when the synthetic corpus is too small for
/// the requested cuts.
Corpora build_corpora(const ExperimentConfig& config, std::uint64_t seed);

/// Occurrences of `token` in the beam outputs of `model` on the sources of
/// `prompts`.
std::size_t token_frequency(const models::Model& model, const data::Corpus& prompts, const std::string& token,
                            std::size_t beam);

/// Sentence BLEU-4 of each instance's beam output against its gold target.
std::vector<double> sentence_bleu(const models::Model& model, const data::Corpus& corpus, std::size_t beam);

/// The full protocol per seed: corpora, split, the original model A_D, the
/// Retrain oracle, every configured method, metrics on D_f and the test
/// set, the optional attack and lexical probe, and checkpoints under
/// output_dir/seed-N when enabled. A failing seed is recorded and the
/// remaining seeds still run. Throws ConfigError for an invalid config.
ReportBundle run_experiment(const ExperimentConfig& config);

}  // namespace kga::harness
