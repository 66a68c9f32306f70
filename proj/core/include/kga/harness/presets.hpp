#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kga/harness/config.hpp"

namespace kga::harness {

/// Desk-scale binary classification: 5k training instances, 100 removals,
/// a 32-wide classifier, KGA with sigma 0.1 and alpha 0.1.
ExperimentConfig toy_classification();

/// Desk-scale translation: 1000 pairs, 100 removals, an attention
/// encoder-decoder. Every source word has a second target form.
ExperimentConfig toy_translation();

using Overrides = std::vector<std::pair<std::string, std::string>>;

/// Names accepted by preset().
std::vector<std::string> preset_names();

/// Experiment configs for a named preset, with "section.key" overrides
/// applied to each:
///   toy-classification, toy-translation  one config each;
///   removal-sweep      |D_f| in 10, 50, 100, 200 on toy classification;
///   difficulty-sweep   5 BLEU bands R1..R5 of A_D on toy translation;
///   lexical-removal    forget every pair whose target holds split.token;
///   basemodel-sweep    recurrent and attention translators.
/// Throws ConfigError for an unknown name, a malformed override, or a
/// lexical-removal without a token.
std::vector<ExperimentConfig> preset(std::string_view name, const Overrides& overrides = {});

}  // namespace kga::harness
