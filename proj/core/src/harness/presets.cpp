#include "kga/harness/presets.hpp"

namespace kga::harness {
namespace {

void apply(ExperimentConfig& config, const Overrides& overrides) {
  for (const auto& [key, value] : overrides) set_option(config, key, value);
}

std::vector<ExperimentConfig> finish(std::vector<ExperimentConfig> configs, const Overrides& overrides) {
  for (auto& c : configs) apply(c, overrides);
  return configs;
}

}  // namespace

ExperimentConfig toy_classification() {
  ExperimentConfig c;
  c.name = "toy-classification";
  c.task = TaskKind::kClassification;
  c.data.train_size = 5000;
  c.data.extra_pool = 100;
  c.data.test_size = 1000;
  c.data.classification = {.labels = 2, .per_label = 3200, .vocab_size = 20000, .cluster_size = 8,
                           .tokens_per_instance = 8, .noise_ratio = 0.7, .confusion = 0.1};
  c.split.mode = ForgetMode::kRandom;
  c.split.count = 100;
  c.model = {.architecture = models::Architecture::kClassifier, .embedding = 32, .hidden = 32};
  c.train.epochs = 3;
  c.train.batch_size = 16;
  c.train.adam.learning_rate = 1e-2;
  c.train.warmup = 100;
  // Helpers see only their own set, long enough to be more confident on it
  // than A_D is.
  c.helpers.train = c.train;
  c.helpers.train.epochs = 30;
  c.helpers.train.batch_size = 32;
  c.helpers.augment = false;
  c.unlearn.learning_rate = 3e-3;
  c.unlearn.max_steps = 100;
  c.unlearn.batch_size = 16;
  c.badt = c.unlearn;
  c.badt.alpha = 10.0;
  c.badt.badt_steps = 200;
  c.methods = {Method::kKga};
  return c;
}

ExperimentConfig toy_translation() {
  ExperimentConfig c;
  c.name = "toy-translation";
  c.task = TaskKind::kTranslation;
  c.data.train_size = 1000;
  c.data.extra_pool = 400;
  c.data.test_size = 300;
  c.data.translation.instances = 1700;
  c.data.translation.source_vocab = 40;
  c.data.translation.synonym_ratio = 1.0;
  c.split.mode = ForgetMode::kRandom;
  c.split.count = 100;
  c.model = {.architecture = models::Architecture::kAttention, .embedding = 32, .hidden = 64};
  c.train.epochs = 20;
  c.train.batch_size = 16;
  c.train.adam.learning_rate = 1e-2;
  c.train.warmup = 100;
  c.helpers.train = c.train;
  c.helpers.train.epochs = 30;
  c.helpers.augment = false;
  c.unlearn.learning_rate = 1e-3;
  c.unlearn.max_steps = 100;
  c.unlearn.batch_size = 16;
  c.badt = c.unlearn;
  c.badt.alpha = 10.0;
  c.methods = {Method::kKga};
  return c;
}

std::vector<std::string> preset_names() {
  return {"toy-classification", "toy-translation", "removal-sweep", "difficulty-sweep", "lexical-removal",
          "basemodel-sweep"};
}

std::vector<ExperimentConfig> preset(std::string_view name, const Overrides& overrides) {
  if (name == "toy-classification") return finish({toy_classification()}, overrides);
  if (name == "toy-translation") return finish({toy_translation()}, overrides);
  if (name == "removal-sweep") {
    std::vector<ExperimentConfig> out;
    for (std::size_t n : {10, 50, 100, 200}) {
      ExperimentConfig c = toy_classification();
      c.name = "removal-sweep/" + std::to_string(n);
      c.data.extra_pool = 200;
      c.split.count = n;
      out.push_back(std::move(c));
    }
    return finish(std::move(out), overrides);
  }
  if (name == "difficulty-sweep") {
    std::vector<ExperimentConfig> out;
    for (std::size_t band = 0; band < 5; ++band) {
      ExperimentConfig c = toy_translation();
      c.name = "difficulty-sweep/R" + std::to_string(band + 1);
      c.split.mode = ForgetMode::kBand;
      c.split.band = band;
      c.split.bands = 5;
      c.split.count = 100;
      out.push_back(std::move(c));
    }
    return finish(std::move(out), overrides);
  }
  if (name == "lexical-removal") {
    ExperimentConfig c = toy_translation();
    c.name = "lexical-removal";
    c.split.mode = ForgetMode::kToken;
    c.unlearn.max_steps = 300;
    c.eval.beam = 4;
    auto out = finish({std::move(c)}, overrides);
    if (out.front().split.token.empty()) throw ConfigError("lexical-removal needs a token (split.token)");
    return out;
  }
  if (name == "basemodel-sweep") {
    std::vector<ExperimentConfig> out;
    for (auto arch : {models::Architecture::kRecurrent, models::Architecture::kAttention}) {
      ExperimentConfig c = toy_translation();
      c.name = std::string("basemodel-sweep/") + models::architecture_name(arch);
      c.model.architecture = arch;
      out.push_back(std::move(c));
    }
    return finish(std::move(out), overrides);
  }
  std::string known;
  for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
  throw ConfigError("unknown preset '" + std::string(name) + "' (expected one of: " + known + ")");
}

}  // namespace kga::harness
