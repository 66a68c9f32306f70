#include "kga/harness/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>

#include "kga/data/jsonl.hpp"
#include "kga/data/split.hpp"
#include "kga/data/synth.hpp"
#include "kga/eval/metrics.hpp"
#include "kga/eval/mia.hpp"
#include "kga/models/checkpoint.hpp"
#include "kga/models/decode.hpp"
#include "kga/models/network.hpp"
#include "kga/models/training.hpp"
#include "kga/unlearn/baselines.hpp"
#include "kga/unlearn/kga.hpp"
#include "kga/util/atomic_file.hpp"
#include "kga/util/seed.hpp"
#include "kga/util/stopwatch.hpp"

namespace kga::harness {
namespace {

namespace stage = util::stage;

// A model under evaluation: a single network or a SISA ensemble.
struct Target {
  std::string name;
  std::optional<models::Model> model;
  std::optional<unlearn::ShardedModel> sharded;
  double seconds = 0.0;
  double helper_seconds = 0.0;

  models::Scores score(const data::Corpus& corpus) const {
    return model ? models::score(*model, corpus) : unlearn::sisa_score(*sharded, corpus);
  }
};

double mean(const std::vector<double>& v) {
  double total = 0.0;
  for (double x : v) total += x;
  return v.empty() ? 0.0 : total / static_cast<double>(v.size());
}

std::vector<std::vector<std::string>> decode_all(const models::Model& model, const data::Corpus& corpus, std::size_t beam) {
  std::vector<std::vector<std::string>> out;
  out.reserve(corpus.size());
  for (const auto& inst : corpus) out.push_back(models::beam_generate(model, inst.pair().source, beam));
  return out;
}

std::vector<std::vector<std::string>> gold_targets(const data::Corpus& corpus) {
  std::vector<std::vector<std::string>> out;
  out.reserve(corpus.size());
  for (const auto& inst : corpus) out.push_back(inst.pair().target);
  return out;
}

// Per-instance difficulty of D under A_D: gold probability for a
// classifier, sentence BLEU for a translator.
std::map<std::string, double> difficulty_scores(const ExperimentConfig& cfg, const models::Model& original,
                                                const data::Corpus& train) {
  std::map<std::string, double> scores;
  if (cfg.task == TaskKind::kTranslation) {
    const std::vector<double> bleu = sentence_bleu(original, train, cfg.eval.beam);
    for (std::size_t i = 0; i < train.size(); ++i) scores[train[i].id] = bleu[i];
  } else {
    const models::Scores s = models::score(original, train);
    for (std::size_t i = 0; i < train.size(); ++i) scores[train[i].id] = std::exp(s.gold_log_prob(i));
  }
  return scores;
}

data::ForgetSpec forget_spec(const ExperimentConfig& cfg, const models::Model& original, const data::Corpus& train) {
  switch (cfg.split.mode) {
    case ForgetMode::kRandom: return data::RandomCount{cfg.split.count};
    case ForgetMode::kIds: return data::ExplicitIds{cfg.split.ids};
    case ForgetMode::kToken: return data::TokenMatch{cfg.split.token};
    case ForgetMode::kBand:
      return data::ScoreBand{difficulty_scores(cfg, original, train), cfg.split.band, cfg.split.bands, cfg.split.count};
  }
  throw std::logic_error("unhandled forget mode");
}

SplitMetrics split_metrics(const ExperimentConfig& cfg, const std::string& name, const data::Corpus& corpus,
                           const Target& target, const models::Scores& scores, const models::Scores& reference,
                           const models::Scores& original) {
  SplitMetrics m;
  m.split = name;
  m.instances = corpus.size();
  if (cfg.wants("task")) {
    if (cfg.task == TaskKind::kClassification) {
      m.task = eval::accuracy(scores);
    } else if (target.model) {
      m.task = eval::bleu4(decode_all(*target.model, corpus, cfg.eval.beam), gold_targets(corpus));
    }
  }
  const bool need_ppl = cfg.wants("perplexity") || cfg.wants("lpd");
  const std::vector<double> ppl = need_ppl ? eval::instance_perplexity(scores) : std::vector<double>{};
  if (cfg.wants("perplexity")) m.perplexity = mean(ppl);
  const bool is_reference = target.name == method_name(Method::kRetrain);
  if (!is_reference && cfg.wants("jsd")) m.jsd = eval::corpus_jsd(scores, reference);
  if (!is_reference && cfg.wants("lpd")) m.lpd = eval::lpd(ppl, eval::instance_perplexity(reference));
  if (target.name != "original" && cfg.wants("pdlp")) m.pdlp = eval::pdlp(scores, original);
  return m;
}

void save_checkpoints(const std::filesystem::path& dir, const std::vector<Target>& targets, const data::SplitSet& split,
                      std::uint64_t seed) {
  for (const auto& t : targets) {
    if (t.model) {
      models::save_checkpoint(*t.model, dir / (t.name + ".ckpt"));
    } else {
      for (std::size_t s = 0; s < t.sharded->models.size(); ++s) {
        if (t.sharded->models[s]) models::save_checkpoint(*t.sharded->models[s], dir / (t.name + "-shard" + std::to_string(s) + ".ckpt"));
      }
    }
  }
  data::SplitManifest manifest;
  manifest.forget_ids = split.forget.ids();
  manifest.seed = seed;
  util::write_file_atomic(dir / "split.json", manifest.to_json());
}

SeedReport run_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  SeedReport report;
  report.seed = seed;
  const Corpora c = build_corpora(cfg, seed);

  std::vector<Target> targets;
  util::Stopwatch sw;
  auto trained = models::train_supervised(cfg.model, c.vocabulary, c.train, cfg.train, util::derive_seed(seed, stage::kOriginal));
  if (trained.diverged) throw std::runtime_error("original model diverged");
  const models::Model original = std::move(trained.model);
  targets.push_back(Target{"original", original, std::nullopt, sw.seconds()});

  const auto ids = data::select_forget_ids(c.train, forget_spec(cfg, original, c.train), util::derive_seed(seed, stage::kSplit));
  const std::size_t extra_count = cfg.split.extra_count ? cfg.split.extra_count : ids.size();
  if (extra_count > c.pool.size()) {
    throw std::runtime_error("D_n needs " + std::to_string(extra_count) + " instances but the pool holds " +
                             std::to_string(c.pool.size()));
  }
  const data::SplitSet split =
      data::partition(c.train, data::ExplicitIds{ids}, c.pool.slice(0, extra_count, "D_n"), util::derive_seed(seed, stage::kSplit));
  report.forget_size = split.forget.size();
  report.retain_size = split.retain.size();
  report.extra_size = split.extra.size();

  sw.reset();
  auto retrained = unlearn::retrain(split, cfg.model, c.vocabulary, cfg.train, util::derive_seed(seed, stage::kOriginal));
  if (retrained.diverged) throw std::runtime_error("retrain diverged");
  targets.push_back(Target{method_name(Method::kRetrain), std::move(retrained.model), std::nullopt, sw.seconds()});

  for (Method method : cfg.methods) {
    switch (method) {
      case Method::kRetrain:
        break;
      case Method::kKga: {
        auto helpers = unlearn::train_helpers(split, cfg.model, c.vocabulary, cfg.helpers, seed);
        unlearn::UnlearnConfig uc = cfg.unlearn;
        uc.seed = seed;
        auto result = unlearn::kga_unlearn(original, helpers, split, uc);
        targets.push_back(Target{method_name(method), std::move(result.model), std::nullopt, result.report.total_seconds(),
                                 helpers.seconds});
        report.kga = std::move(result.report);
        break;
      }
      case Method::kSisa: {
        auto sharded = unlearn::sisa_train(c.train, cfg.model, c.vocabulary, cfg.train, cfg.sisa_shards,
                                           util::derive_seed(seed, stage::kSisa));
        const auto forget_ids = split.forget.ids();
        sw.reset();
        auto forgotten = unlearn::sisa_forget(sharded, forget_ids);
        targets.push_back(Target{method_name(method), std::nullopt, std::move(forgotten), sw.seconds()});
        break;
      }
      case Method::kBadt: {
        unlearn::UnlearnConfig bc = cfg.badt;
        bc.seed = seed;
        auto result = unlearn::badt_unlearn(original, split, bc);
        targets.push_back(Target{method_name(method), std::move(result.model), std::nullopt, result.seconds});
        break;
      }
    }
  }

  std::vector<std::pair<std::string, const data::Corpus*>> splits;
  if (!split.forget.empty()) splits.emplace_back("forget", &split.forget);
  splits.emplace_back("test", &c.test);
  std::vector<models::Scores> reference, base;
  for (const auto& [name, corpus] : splits) {
    reference.push_back(targets[1].score(*corpus));
    base.push_back(targets[0].score(*corpus));
  }

  std::optional<eval::ShadowAttack> attack;
  data::Corpus nonmembers;
  if (cfg.mia.enabled && !split.forget.empty()) {
    eval::MiaConfig mc{cfg.mia.shadow_fraction, cfg.train, cfg.mia.attacker};
    attack = eval::train_shadow_attack(c.train, cfg.model, c.vocabulary, mc, seed);
    nonmembers = c.test.slice(0, std::min(cfg.mia.nonmembers, c.test.size()), "MIA non-members");
  }

  data::Corpus prompts;
  const bool probe = cfg.split.mode == ForgetMode::kToken && cfg.task == TaskKind::kTranslation;
  if (probe) {
    std::vector<std::string> hits;
    for (const auto& inst : c.test) {
      if (inst.contains_token(cfg.split.token)) hits.push_back(inst.id);
    }
    prompts = c.test.select(hits, "probe prompts");
    report.probe_prompts = prompts.size();
  }

  for (const auto& t : targets) {
    MetricsReport m;
    m.model = t.name;
    m.seconds = t.seconds;
    m.helper_seconds = t.helper_seconds;
    for (std::size_t k = 0; k < splits.size(); ++k) {
      const auto& [name, corpus] = splits[k];
      const models::Scores scores = t.name == "original" ? base[k] : t.name == method_name(Method::kRetrain) ? reference[k] : t.score(*corpus);
      m.splits.push_back(split_metrics(cfg, name, *corpus, t, scores, reference[k], base[k]));
    }
    if (attack) m.attack = eval::mia_run(*attack, t.score(split.forget), t.score(nonmembers));
    if (probe && t.model) m.token_count = token_frequency(*t.model, prompts, cfg.split.token, cfg.eval.beam);
    report.models.push_back(std::move(m));
  }

  if (!cfg.output_dir.empty() && cfg.checkpoints) {
    save_checkpoints(cfg.output_dir / ("seed-" + std::to_string(seed)), targets, split, seed);
  }
  report.ok = true;
  return report;
}

}  // namespace

Corpora build_corpora(const ExperimentConfig& cfg, std::uint64_t seed) {
  Corpora c;
  const data::PayloadKind kind =
      cfg.task == TaskKind::kClassification ? data::PayloadKind::kClassification : data::PayloadKind::kSeq2Seq;
  if (cfg.data.synthetic()) {
    const std::uint64_t data_seed = util::derive_seed(seed, stage::kData);
    const data::Corpus all = cfg.task == TaskKind::kClassification
                                 ? data::synth_classification(cfg.data.classification, data_seed)
                                 : data::synth_translation(cfg.data.translation, data_seed);
    const std::size_t a = cfg.data.train_size;
    const std::size_t b = a + cfg.data.extra_pool;
    const std::size_t e = b + cfg.data.test_size;
    if (e > all.size()) {
      throw ConfigError("data: the synthetic corpus holds " + std::to_string(all.size()) + " instances but " +
                        std::to_string(e) + " are requested");
    }
    c.train = all.slice(0, a, "D");
    c.pool = all.slice(a, b, "D_n pool");
    c.test = all.slice(b, e, "test");
  } else {
    c.train = data::load_corpus(cfg.data.train_path, kind);
    c.pool = data::load_corpus(cfg.data.extra_path, kind);
    c.test = data::load_corpus(cfg.data.test_path, kind);
  }
  const data::Corpus* sources[] = {&c.train, &c.pool};
  c.vocabulary = std::make_shared<const models::Vocabulary>(models::Vocabulary::build(sources));
  return c;
}

std::size_t token_frequency(const models::Model& model, const data::Corpus& prompts, const std::string& token,
                            std::size_t beam) {
  std::size_t count = 0;
  for (const auto& inst : prompts) {
    const auto out = models::beam_generate(model, inst.pair().source, beam);
    count += static_cast<std::size_t>(std::count(out.begin(), out.end(), token));
  }
  return count;
}

std::vector<double> sentence_bleu(const models::Model& model, const data::Corpus& corpus, std::size_t beam) {
  std::vector<double> out;
  out.reserve(corpus.size());
  for (const auto& inst : corpus) {
    out.push_back(eval::bleu4({models::beam_generate(model, inst.pair().source, beam)},
                              std::vector<std::vector<std::string>>{inst.pair().target}));
  }
  return out;
}

ReportBundle run_experiment(const ExperimentConfig& config) {
  config.validate();
  ReportBundle bundle;
  bundle.name = config.name;
  bundle.task_metric = config.task == TaskKind::kClassification ? "accuracy" : "bleu4";
  bundle.config = to_ini(config);
  for (std::uint64_t seed : config.seeds) {
    try {
      bundle.seeds.push_back(run_seed(config, seed));
    } catch (const std::exception& e) {
      SeedReport failed;
      failed.seed = seed;
      failed.error = e.what();
      bundle.seeds.push_back(std::move(failed));
    }
  }
  if (!config.output_dir.empty()) {
    const ReportFormat json[] = {ReportFormat::kJson};
    emit_report(bundle, config.output_dir, json);
  }
  return bundle;
}

}  // namespace kga::harness
