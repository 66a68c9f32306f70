#include <benchmark/benchmark.h>

#include <algorithm>
#include <memory>
#include <random>

#include "kga/data/split.hpp"
#include "kga/data/synth.hpp"
#include "kga/eval/metrics.hpp"
#include "kga/gradkit/graph.hpp"
#include "kga/models/decode.hpp"
#include "kga/models/network.hpp"
#include "kga/models/training.hpp"
#include "kga/unlearn/kga.hpp"

namespace {

using namespace kga;

models::ModelSpec spec_for(models::Architecture arch) {
  models::ModelSpec s;
  s.architecture = arch;
  s.embedding = 32;
  s.hidden = arch == models::Architecture::kClassifier ? 32 : 64;
  return s;
}

data::Corpus translation_corpus(std::size_t n) {
  data::TranslationSynthConfig cfg;
  cfg.instances = n;
  cfg.synonym_ratio = 1.0;
  return data::synth_translation(cfg, 1);
}

data::Corpus classification_corpus(std::size_t per_label) {
  data::ClassificationSynthConfig cfg;
  cfg.labels = 2;
  cfg.per_label = per_label;
  cfg.vocab_size = 2000;
  return data::synth_classification(cfg, 1);
}

std::shared_ptr<const models::Vocabulary> vocab_of(const data::Corpus& c) {
  const data::Corpus* p[] = {&c};
  return std::make_shared<const models::Vocabulary>(models::Vocabulary::build(p));
}

void BM_MatmulForwardBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  std::vector<gradkit::DenseArray> params{gradkit::DenseArray::matrix(n, n), gradkit::DenseArray::matrix(n, n)};
  for (auto& p : params) {
    for (double& x : p.data()) x = normal(rng);
  }
  gradkit::Graph g;
  const auto out = g.mean(g.tanh(g.matmul(g.parameter(0, n, n), g.parameter(1, n, n))));
  for (auto _ : state) {
    const auto ev = gradkit::forward(g, gradkit::Bindings{{}, params});
    benchmark::DoNotOptimize(gradkit::backward(ev, out));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_MatmulForwardBackward)->RangeMultiplier(2)->Range(16, 128)->Complexity();

void BM_CrossEntropyBatch(benchmark::State& state) {
  const auto arch = static_cast<models::Architecture>(state.range(0));
  const data::Corpus corpus = arch == models::Architecture::kClassifier ? classification_corpus(8) : translation_corpus(16);
  const models::Model model = models::initialize(spec_for(arch), vocab_of(corpus), 1, models::OutputInit::kRandom);
  const auto batch = models::encode_all(model, corpus.pointers());
  for (auto _ : state) benchmark::DoNotOptimize(models::cross_entropy(model, batch));
  state.SetLabel(models::architecture_name(arch));
}
BENCHMARK(BM_CrossEntropyBatch)->DenseRange(0, 2)->Unit(benchmark::kMicrosecond);

void BM_ScoreCorpus(benchmark::State& state) {
  const data::Corpus corpus = translation_corpus(static_cast<std::size_t>(state.range(0)));
  const models::Model model =
      models::initialize(spec_for(models::Architecture::kAttention), vocab_of(corpus), 1, models::OutputInit::kRandom);
  for (auto _ : state) benchmark::DoNotOptimize(models::score(model, corpus));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ScoreCorpus)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_KgaStep(benchmark::State& state) {
  const data::Corpus all = classification_corpus(200);
  const auto vocab = vocab_of(all);
  const auto spec = spec_for(models::Architecture::kClassifier);
  const data::SplitSet split = data::partition(all.slice(0, 300), data::RandomCount{50}, all.slice(300, 400), 1);
  models::TrainConfig quick;
  quick.epochs = 1;
  const models::Model original = models::train_supervised(spec, vocab, split.full, quick, 1).model;
  unlearn::HelperConfig hc;
  hc.train = quick;
  hc.augment = false;
  const unlearn::Helpers helpers = unlearn::train_helpers(split, spec, vocab, hc, 1);
  unlearn::UnlearnConfig uc;
  uc.max_steps = static_cast<std::size_t>(state.range(0));
  uc.valid_steps = uc.max_steps;
  uc.learning_rate = 1e-3;
  for (auto _ : state) benchmark::DoNotOptimize(unlearn::kga_unlearn(original, helpers, split, uc));
}
BENCHMARK(BM_KgaStep)->Arg(10)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_BeamGenerate(benchmark::State& state) {
  const data::Corpus corpus = translation_corpus(50);
  const models::Model model =
      models::initialize(spec_for(models::Architecture::kAttention), vocab_of(corpus), 1, models::OutputInit::kRandom);
  const auto beam = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    for (const auto& inst : corpus) benchmark::DoNotOptimize(models::beam_generate(model, inst.pair().source, beam));
  }
}
BENCHMARK(BM_BeamGenerate)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_Bleu4(benchmark::State& state) {
  const data::Corpus corpus = translation_corpus(static_cast<std::size_t>(state.range(0)));
  std::vector<std::vector<std::string>> cand, ref;
  std::mt19937_64 rng(3);
  for (const auto& inst : corpus) {
    ref.push_back(inst.pair().target);
    auto c = inst.pair().target;
    std::shuffle(c.begin(), c.end(), rng);
    cand.push_back(std::move(c));
  }
  for (auto _ : state) benchmark::DoNotOptimize(eval::bleu4(cand, ref));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Bleu4)->Arg(1000)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
