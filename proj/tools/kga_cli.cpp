// kga: command line front end for the unlearning experiments.
//
// Exit codes: 0 success, 1 configuration or usage error, 2 runtime failure
// (including any seed that failed inside an experiment).

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "kga/data/jsonl.hpp"
#include "kga/eval/metrics.hpp"
#include "kga/eval/mia.hpp"
#include "kga/harness/config.hpp"
#include "kga/harness/experiment.hpp"
#include "kga/harness/presets.hpp"
#include "kga/harness/report.hpp"
#include "kga/models/checkpoint.hpp"
#include "kga/models/decode.hpp"
#include "kga/models/network.hpp"
#include "kga/models/training.hpp"
#include "kga/util/atomic_file.hpp"
#include "kga/util/seed.hpp"

namespace fs = std::filesystem;
using namespace kga;
using harness::ConfigError;

namespace {

constexpr int kConfigFailure = 1;
constexpr int kRuntimeFailure = 2;

struct Common {
  std::string base = "toy-classification";
  std::string config;
  std::vector<std::string> sets;
  std::vector<std::uint64_t> seeds;
  std::string method;
  std::size_t forget_count = 0;
  std::string forget_token;
  std::string out;
  std::vector<std::string> formats;
};

void add_common(CLI::App* cmd, Common& c, bool experiment) {
  cmd->add_option("--base", c.base, "Preset providing defaults before --config")->capture_default_str();
  cmd->add_option("--config", c.config, "Config file (sections per module)")->check(CLI::ExistingFile);
  cmd->add_option("--set", c.sets, "Override as section.key=value (repeatable)");
  cmd->add_option("--seed", c.seeds, "Seed; repeat for several");
  cmd->add_option("--out", c.out, "Output directory");
  if (experiment) {
    cmd->add_option("--method", c.method, "Unlearning method")->check(CLI::IsMember({"kga", "retrain", "sisa", "badt"}));
    cmd->add_option("--forget-count", c.forget_count, "Forget this many random instances");
    cmd->add_option("--forget-token", c.forget_token, "Forget every instance whose target holds this token");
    cmd->add_option("--format", c.formats, "Report formats: json, csv, plot")->check(CLI::IsMember({"json", "csv", "plot"}));
  }
}

harness::Overrides overrides_of(const Common& c) {
  harness::Overrides out;
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects section.key=value, got '" + s + "'");
    out.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  if (!c.seeds.empty()) {
    std::string joined;
    for (auto s : c.seeds) joined += (joined.empty() ? "" : ",") + std::to_string(s);
    out.emplace_back("experiment.seeds", joined);
  }
  if (!c.method.empty()) out.emplace_back("experiment.methods", c.method);
  if (c.forget_count > 0) {
    out.emplace_back("split.mode", "random");
    out.emplace_back("split.count", std::to_string(c.forget_count));
  }
  if (!c.forget_token.empty()) {
    out.emplace_back("split.mode", "token");
    out.emplace_back("split.token", c.forget_token);
  }
  if (!c.out.empty()) out.emplace_back("experiment.output_dir", c.out);
  return out;
}

// Base preset, then the config file, then flags.
harness::ExperimentConfig resolve(const Common& c) {
  auto configs = harness::preset(c.base);
  if (configs.size() != 1) throw ConfigError("--base must name a single-config preset");
  harness::ExperimentConfig cfg = configs.front();
  if (!c.config.empty()) cfg = harness::load_config(c.config, cfg);
  for (const auto& [k, v] : overrides_of(c)) harness::set_option(cfg, k, v);
  cfg.validate();
  return cfg;
}

std::vector<harness::ReportFormat> formats_of(const Common& c) {
  std::vector<harness::ReportFormat> out;
  for (const auto& f : c.formats) out.push_back(harness::parse_format(f));
  if (out.empty()) out.push_back(harness::ReportFormat::kJson);
  return out;
}

fs::path require_out(const Common& c) {
  if (c.out.empty()) throw ConfigError("--out is required");
  return c.out;
}

data::PayloadKind schema_of(const models::Model& m) {
  return m.spec().generative() ? data::PayloadKind::kSeq2Seq : data::PayloadKind::kClassification;
}

void write_or_print(const std::string& out, const std::string& name, const std::string& text) {
  if (out.empty()) {
    std::cout << text;
  } else {
    util::write_file_atomic(fs::path(out) / name, text);
    std::cout << "wrote " << (fs::path(out) / name).string() << "\n";
  }
}

int summarize(const harness::ReportBundle& bundle) {
  int failures = 0;
  for (const auto& s : bundle.seeds) {
    if (!s.ok) {
      std::cerr << bundle.name << " seed " << s.seed << " failed: " << s.error << "\n";
      ++failures;
      continue;
    }
    for (const auto& m : s.models) {
      std::printf("%s seed %llu %-8s", bundle.name.c_str(), static_cast<unsigned long long>(s.seed), m.model.c_str());
      for (const auto& sp : m.splits) {
        std::printf("  %s %s=%.3f", sp.split.c_str(), bundle.task_metric.c_str(), sp.task.value_or(0.0));
        if (sp.jsd) std::printf(" jsd=%.4f", *sp.jsd);
        if (sp.pdlp) std::printf(" pdlp=%.1f", *sp.pdlp);
      }
      if (m.attack) std::printf("  mia-f1=%.3f", m.attack->f1);
      if (m.token_count) std::printf("  token-count=%zu", *m.token_count);
      std::printf("  %.2fs\n", m.seconds);
    }
  }
  return failures == 0 ? 0 : kRuntimeFailure;
}

int run_gen_data(const Common& c) {
  const auto cfg = resolve(c);
  const fs::path out = require_out(c);
  if (!cfg.data.synthetic()) throw ConfigError("gen-data needs a synthetic data section");
  const auto corpora = harness::build_corpora(cfg, cfg.seeds.front());
  data::save_corpus(corpora.train, out / "train.jsonl");
  data::save_corpus(corpora.pool, out / "extra.jsonl");
  data::save_corpus(corpora.test, out / "test.jsonl");
  std::printf("train %zu, extra pool %zu, test %zu instances in %s\n", corpora.train.size(), corpora.pool.size(),
              corpora.test.size(), out.string().c_str());
  return 0;
}

int run_train(const Common& c) {
  const auto cfg = resolve(c);
  const fs::path out = require_out(c);
  const std::uint64_t seed = cfg.seeds.front();
  const auto corpora = harness::build_corpora(cfg, seed);
  auto result = models::train_supervised(cfg.model, corpora.vocabulary, corpora.train, cfg.train,
                                         util::derive_seed(seed, util::stage::kOriginal));
  models::save_checkpoint(result.model, out / "original.ckpt");
  std::printf("%zu steps, final batch loss %.4f%s -> %s\n", result.steps,
              result.loss_trajectory.empty() ? 0.0 : result.loss_trajectory.back(), result.diverged ? " (diverged)" : "",
              (out / "original.ckpt").string().c_str());
  return result.diverged ? kRuntimeFailure : 0;
}

int run_unlearn(const Common& c) {
  const auto cfg = resolve(c);
  require_out(c);
  const auto bundle = harness::run_experiment(cfg);
  harness::emit_report(bundle, cfg.output_dir, formats_of(c));
  return summarize(bundle);
}

struct EvaluateArgs {
  std::string model, reference, original, data, out;
  std::size_t beam = 1;
};

int run_evaluate(const EvaluateArgs& a) {
  const models::Model model = models::load_checkpoint(a.model);
  const data::Corpus corpus = data::load_corpus(a.data, schema_of(model));
  const models::Scores scores = models::score(model, corpus);
  nlohmann::json j;
  j["instances"] = corpus.size();
  const auto ppl = eval::instance_perplexity(scores);
  double total = 0.0;
  for (double p : ppl) total += p;
  j["perplexity"] = total / static_cast<double>(ppl.size());
  if (model.spec().generative()) {
    std::vector<std::vector<std::string>> cands, refs;
    for (const auto& inst : corpus) {
      cands.push_back(models::beam_generate(model, inst.pair().source, a.beam));
      refs.push_back(inst.pair().target);
    }
    j["bleu4"] = eval::bleu4(cands, refs);
  } else {
    j["accuracy"] = eval::accuracy(scores);
  }
  if (!a.reference.empty()) {
    const models::Scores ref = models::score(models::load_checkpoint(a.reference), corpus);
    j["jsd"] = eval::corpus_jsd(scores, ref);
    j["lpd"] = eval::lpd(ppl, eval::instance_perplexity(ref));
  }
  if (!a.original.empty()) j["pdlp"] = eval::pdlp(scores, models::score(models::load_checkpoint(a.original), corpus));
  write_or_print(a.out, "evaluation.json", j.dump(2) + "\n");
  return 0;
}

struct MiaArgs {
  std::string model, members, nonmembers;
};

int run_mia(const Common& c, const MiaArgs& a) {
  const auto cfg = resolve(c);
  const std::uint64_t seed = cfg.seeds.front();
  const models::Model target = models::load_checkpoint(a.model);
  const auto corpora = harness::build_corpora(cfg, seed);
  const eval::MiaConfig mc{cfg.mia.shadow_fraction, cfg.train, cfg.mia.attacker};
  const auto attack = eval::train_shadow_attack(corpora.train, cfg.model, corpora.vocabulary, mc, seed);
  const auto members = data::load_corpus(a.members, schema_of(target));
  const auto nonmembers = data::load_corpus(a.nonmembers, schema_of(target));
  const auto r = eval::mia_run(attack, target, members, nonmembers);
  const nlohmann::json j{{"f1", r.f1}, {"false_negative_rate", r.false_negative_rate}, {"accuracy", r.accuracy}};
  write_or_print(c.out, "mia.json", j.dump(2) + "\n");
  return 0;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + p.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int run_report(const Common& c, const std::string& in) {
  const fs::path dir(in);
  const std::string timings = fs::exists(dir / "timings.json") ? read_file(dir / "timings.json") : std::string();
  const auto bundle = harness::bundle_from_json(read_file(dir / "report.json"), timings);
  for (const auto& p : harness::emit_report(bundle, require_out(c), formats_of(c))) std::cout << "wrote " << p.string() << "\n";
  return 0;
}

int run_preset(const Common& c, const std::string& name, bool print_only) {
  harness::Overrides overrides = overrides_of(c);
  // Each config of a sweep writes under its own subdirectory.
  std::erase_if(overrides, [](const auto& kv) { return kv.first == "experiment.output_dir"; });
  auto configs = harness::preset(name, overrides);
  if (!c.config.empty()) {
    for (auto& cfg : configs) cfg = harness::load_config(c.config, cfg);
  }
  for (auto& cfg : configs) {
    if (!c.out.empty()) {
      std::string sub = cfg.name;
      std::replace(sub.begin(), sub.end(), '/', '-');
      cfg.output_dir = fs::path(c.out) / sub;
    }
    cfg.validate();
  }
  if (print_only) {
    for (const auto& cfg : configs) std::cout << "# " << cfg.name << "\n" << harness::to_ini(cfg) << "\n";
    return 0;
  }
  require_out(c);
  std::vector<harness::ReportBundle> bundles;
  int status = 0;
  for (const auto& cfg : configs) {
    bundles.push_back(harness::run_experiment(cfg));
    harness::emit_report(bundles.back(), cfg.output_dir, formats_of(c));
    status = std::max(status, summarize(bundles.back()));
  }
  if (bundles.size() > 1) util::write_file_atomic(fs::path(c.out) / "plot_sweep.csv", harness::sweep_csv(bundles));
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-gap alignment unlearning experiments"};
  app.require_subcommand(1);

  Common gen, train, unlearn_opts, mia_opts, report_opts, preset_opts;
  auto* gen_cmd = app.add_subcommand("gen-data", "Write the synthetic corpora as JSONL");
  add_common(gen_cmd, gen, false);
  auto* train_cmd = app.add_subcommand("train", "Train the original model and save its checkpoint");
  add_common(train_cmd, train, false);
  auto* unlearn_cmd = app.add_subcommand("unlearn", "Run the full protocol: train, retrain, unlearn, evaluate");
  add_common(unlearn_cmd, unlearn_opts, true);

  EvaluateArgs eval_args;
  auto* eval_cmd = app.add_subcommand("evaluate", "Metrics of a checkpoint on a JSONL corpus");
  eval_cmd->add_option("--model", eval_args.model, "Checkpoint to evaluate")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--data", eval_args.data, "JSONL corpus")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--reference", eval_args.reference, "Reference checkpoint for JSD and LPD")->check(CLI::ExistingFile);
  eval_cmd->add_option("--original", eval_args.original, "Checkpoint before unlearning, for PDLP")->check(CLI::ExistingFile);
  eval_cmd->add_option("--beam", eval_args.beam, "Beam width for BLEU")->capture_default_str();
  eval_cmd->add_option("--out", eval_args.out, "Output directory (default: stdout)");

  MiaArgs mia_args;
  auto* mia_cmd = app.add_subcommand("mia", "Membership-inference attack on a checkpoint");
  add_common(mia_cmd, mia_opts, false);
  mia_cmd->add_option("--model", mia_args.model, "Target checkpoint")->required()->check(CLI::ExistingFile);
  mia_cmd->add_option("--members", mia_args.members, "Member JSONL")->required()->check(CLI::ExistingFile);
  mia_cmd->add_option("--nonmembers", mia_args.nonmembers, "Non-member JSONL")->required()->check(CLI::ExistingFile);

  std::string report_in;
  auto* report_cmd = app.add_subcommand("report", "Re-emit a saved report in other formats");
  report_cmd->add_option("--in", report_in, "Directory holding report.json")->required()->check(CLI::ExistingDirectory);
  report_cmd->add_option("--out", report_opts.out, "Output directory")->required();
  report_cmd->add_option("--format", report_opts.formats, "json, csv, plot")->check(CLI::IsMember({"json", "csv", "plot"}));

  std::string preset_name;
  bool print_only = false;
  auto* preset_cmd = app.add_subcommand("preset", "Run a named experiment preset");
  preset_cmd->add_option("name", preset_name, "Preset name")->required();
  add_common(preset_cmd, preset_opts, true);
  preset_cmd->add_flag("--print-config", print_only, "Print the resolved configs and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigFailure;
  }

  try {
    if (gen_cmd->parsed()) return run_gen_data(gen);
    if (train_cmd->parsed()) return run_train(train);
    if (unlearn_cmd->parsed()) return run_unlearn(unlearn_opts);
    if (eval_cmd->parsed()) return run_evaluate(eval_args);
    if (mia_cmd->parsed()) return run_mia(mia_opts, mia_args);
    if (report_cmd->parsed()) return run_report(report_opts, report_in);
    if (preset_cmd->parsed()) return run_preset(preset_opts, preset_name, print_only);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  return kConfigFailure;
}
