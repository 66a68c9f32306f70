#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "kga/harness/config.hpp"
#include "kga/harness/experiment.hpp"
#include "kga/harness/presets.hpp"
#include "kga/harness/report.hpp"

using namespace kga;
using namespace kga::harness;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny_config() {
  ExperimentConfig c = toy_classification();
  c.name = "tiny";
  c.data.train_size = 60;
  c.data.extra_pool = 20;
  c.data.test_size = 30;
  c.data.classification = {.labels = 2, .per_label = 55, .vocab_size = 80, .cluster_size = 6,
                           .tokens_per_instance = 6, .noise_ratio = 0.4, .confusion = 0.0};
  c.split.count = 8;
  c.model.embedding = 6;
  c.model.hidden = 8;
  c.train.epochs = 2;
  c.train.batch_size = 8;
  c.helpers.train = c.train;
  c.helpers.train.epochs = 5;
  c.unlearn.max_steps = 10;
  c.unlearn.valid_steps = 5;
  c.unlearn.batch_size = 4;
  c.badt = c.unlearn;
  c.badt.badt_steps = 5;
  c.sisa_shards = 2;
  c.methods = {Method::kKga, Method::kRetrain, Method::kSisa, Method::kBadt};
  c.seeds = {1, 2};
  return c;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("kga_harness_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST(Config, IniRoundTripIsExact) {
  for (const auto& name : preset_names()) {
    const Overrides o = name == "lexical-removal" ? Overrides{{"split.token", "t3"}} : Overrides{};
    for (const auto& c : preset(name, o)) {
      const std::string text = to_ini(c);
      EXPECT_EQ(to_ini(parse_config(text)), text) << c.name;
    }
  }
}

TEST(Config, EveryKeyReadsBackWhatWasSet) {
  ExperimentConfig c = tiny_config();
  for (const auto& key : option_keys()) {
    const std::string v = get_option(c, key);
    set_option(c, key, v);
    EXPECT_EQ(get_option(c, key), v) << key;
  }
  set_option(c, "unlearn.sigma", "0.25");
  EXPECT_DOUBLE_EQ(c.unlearn.sigma, 0.25);
  set_option(c, "experiment.methods", "kga,badt");
  EXPECT_EQ(c.methods, (std::vector<Method>{Method::kKga, Method::kBadt}));
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  ExperimentConfig c;
  EXPECT_THROW(set_option(c, "train.nope", "1"), ConfigError);
  EXPECT_THROW(set_option(c, "nosection", "1"), ConfigError);
  EXPECT_THROW(set_option(c, "train.epochs", "three"), ConfigError);
  EXPECT_THROW(set_option(c, "train.epochs", "3x"), ConfigError);
  EXPECT_THROW(set_option(c, "experiment.task", "regression"), ConfigError);
  EXPECT_THROW(parse_config("[bogus]\nx = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("epochs = 1\n"), ConfigError);
  const ExperimentConfig p = parse_config("[train]\nepochs = 7\n\n[empty]\n", tiny_config());
  EXPECT_EQ(p.train.epochs, 7u);
}

TEST(Config, ValidateRejectsInconsistentSettings) {
  const auto expect_invalid = [](const std::function<void(ExperimentConfig&)>& edit) {
    ExperimentConfig c = tiny_config();
    edit(c);
    EXPECT_THROW(c.validate(), ConfigError);
  };
  EXPECT_NO_THROW(tiny_config().validate());
  expect_invalid([](auto& c) { c.seeds.clear(); });
  expect_invalid([](auto& c) { c.methods = {Method::kKga, Method::kKga}; });
  expect_invalid([](auto& c) { c.model.architecture = models::Architecture::kAttention; });
  expect_invalid([](auto& c) { c.split.mode = ForgetMode::kToken; });
  expect_invalid([](auto& c) { c.split.mode = ForgetMode::kIds; });
  expect_invalid([](auto& c) { c.split.mode = ForgetMode::kBand; c.split.band = 5; });
  expect_invalid([](auto& c) { c.eval.metrics = {"bleu9"}; });
  expect_invalid([](auto& c) { c.eval.beam = 0; });
  expect_invalid([](auto& c) { c.sisa_shards = 1; });
  expect_invalid([](auto& c) { c.unlearn.sigma = 0.0; });
  expect_invalid([](auto& c) { c.data.train_path = "/nonexistent/train.jsonl"; });
}

TEST(Presets, SweepsHaveTheExpectedShape) {
  const auto removal = preset("removal-sweep");
  ASSERT_EQ(removal.size(), 4u);
  for (std::size_t i = 1; i < removal.size(); ++i) EXPECT_GT(removal[i].split.count, removal[i - 1].split.count);
  const auto difficulty = preset("difficulty-sweep");
  ASSERT_EQ(difficulty.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(difficulty[i].split.mode, ForgetMode::kBand);
    EXPECT_EQ(difficulty[i].split.band, i);
  }
  EXPECT_EQ(preset("basemodel-sweep").size(), 2u);
  EXPECT_THROW(preset("lexical-removal"), ConfigError);
  EXPECT_EQ(preset("lexical-removal", {{"split.token", "t1"}}).front().split.token, "t1");
  EXPECT_THROW(preset("nope"), ConfigError);
  EXPECT_THROW(preset("toy-classification", {{"train.epochs", "-1"}}), ConfigError);
  for (const auto& c : preset("toy-classification")) EXPECT_NO_THROW(c.validate());
  for (const auto& c : preset("toy-translation")) EXPECT_NO_THROW(c.validate());
}

TEST(Experiment, RunIsReproducibleAndComplete) {
  ExperimentConfig c = tiny_config();
  c.output_dir = scratch("repro");
  const ReportBundle a = run_experiment(c);
  const ReportBundle b = run_experiment(c);  // rewrites the same directory
  EXPECT_EQ(to_json(a), to_json(b));
  EXPECT_EQ(slurp(fs::path(c.output_dir) / "report.json"), to_json(a));

  ASSERT_EQ(a.seeds.size(), 2u);
  for (const auto& s : a.seeds) {
    ASSERT_TRUE(s.ok) << s.error;
    EXPECT_EQ(s.forget_size, 8u);
    EXPECT_EQ(s.retain_size, 52u);
    EXPECT_EQ(s.extra_size, 8u);
    for (const char* m : {"original", "retrain", "kga", "sisa", "badt"}) ASSERT_NE(s.model(m), nullptr) << m;
    EXPECT_FALSE(s.model("retrain")->split("forget")->jsd.has_value());
    EXPECT_FALSE(s.model("original")->split("test")->pdlp.has_value());
    EXPECT_TRUE(s.model("kga")->split("forget")->jsd.has_value());
    ASSERT_TRUE(s.kga.has_value());
  }
  EXPECT_TRUE(fs::exists(fs::path(c.output_dir) / "seed-1" / "kga.ckpt"));
  EXPECT_TRUE(fs::exists(fs::path(c.output_dir) / "seed-2" / "split.json"));
  EXPECT_TRUE(fs::exists(fs::path(c.output_dir) / "seed-1" / "sisa-shard0.ckpt"));
}

TEST(Experiment, RetrainWithEmptyForgetSetEqualsTheOriginal) {
  ExperimentConfig c = tiny_config();
  c.methods = {Method::kRetrain};
  c.split.count = 0;
  c.seeds = {3};
  c.output_dir = scratch("empty_forget");
  const ReportBundle r = run_experiment(c);
  ASSERT_TRUE(r.seeds.front().ok) << r.seeds.front().error;
  const fs::path dir = fs::path(c.output_dir) / "seed-3";
  EXPECT_EQ(slurp(dir / "retrain.ckpt"), slurp(dir / "original.ckpt"));
  EXPECT_FALSE(slurp(dir / "original.ckpt").empty());
}

TEST(Experiment, FailingSeedIsRecordedAndOthersRun) {
  ExperimentConfig c = tiny_config();
  c.methods = {Method::kRetrain};
  c.split.extra_count = 500;  // larger than the pool
  const ReportBundle r = run_experiment(c);
  ASSERT_EQ(r.seeds.size(), 2u);
  for (const auto& s : r.seeds) {
    EXPECT_FALSE(s.ok);
    EXPECT_FALSE(s.error.empty());
  }
  ExperimentConfig bad = tiny_config();
  bad.seeds.clear();
  EXPECT_THROW(run_experiment(bad), ConfigError);
}

TEST(Report, FormatsAgreeAndEmissionIsIdempotent) {
  ExperimentConfig c = tiny_config();
  c.methods = {Method::kKga, Method::kRetrain};
  const ReportBundle r = run_experiment(c);
  const std::string csv = to_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "seed,model,split,instances,task,perplexity,jsd,lpd,pdlp");
  EXPECT_EQ(count_lines(csv), 1 + 2 * 3 * 2);  // seeds x models x splits

  EXPECT_EQ(to_json(bundle_from_json(to_json(r))), to_json(r));
  const ReportBundle timed = bundle_from_json(to_json(r), timings_json(r));
  EXPECT_EQ(timings_json(timed), timings_json(r));

  for (const auto& s : r.seeds) {
    const auto& traj = s.kga->trajectory;
    for (std::size_t i = 1; i < traj.size(); ++i) EXPECT_GT(traj[i].step, traj[i - 1].step);
  }

  const fs::path dir = scratch("emit");
  const std::vector<ReportFormat> all{ReportFormat::kJson, ReportFormat::kCsv, ReportFormat::kPlot};
  const auto first = emit_report(r, dir, all);
  std::vector<std::string> contents;
  for (const auto& p : first) contents.push_back(slurp(p));
  const auto second = emit_report(r, dir, all);
  ASSERT_EQ(first, second);
  for (std::size_t i = 0; i < first.size(); ++i) EXPECT_EQ(slurp(second[i]), contents[i]);
  EXPECT_TRUE(fs::exists(dir / "plot_gap.csv"));
  EXPECT_EQ(slurp(dir / "metrics.csv"), csv);

  EXPECT_THROW(emit_report(r, "/proc/kga-unwritable", all), std::runtime_error);
  EXPECT_THROW(parse_format("xml"), ConfigError);

  const std::vector<ReportBundle> sweep{r, r};
  EXPECT_GE(count_lines(sweep_csv(sweep)), 3u);
}
