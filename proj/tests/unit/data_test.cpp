#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "kga/data/corpus.hpp"
#include "kga/data/jsonl.hpp"
#include "kga/data/split.hpp"
#include "kga/data/synth.hpp"
#include "test_support.hpp"

using namespace kga::data;

namespace {

Instance labeled(std::string id, std::string text, std::string label) {
  return Instance{std::move(id), LabeledText{tokenize(text), std::move(label)}};
}

Corpus small_corpus(std::size_t n, const std::string& prefix = "x") {
  std::vector<Instance> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(labeled(prefix + std::to_string(i), "w" + std::to_string(i % 3), i % 2 ? "a" : "b"));
  return Corpus(PayloadKind::kClassification, std::move(v));
}

std::set<std::string> id_set(const Corpus& c) {
  const auto ids = c.ids();
  return {ids.begin(), ids.end()};
}

}  // namespace

TEST(Corpus, RejectsDuplicateIds) {
  std::vector<Instance> v{labeled("a", "x", "l"), labeled("a", "y", "l")};
  EXPECT_THROW(Corpus(PayloadKind::kClassification, v), std::invalid_argument);
}

TEST(Corpus, RejectsMixedPayloads) {
  std::vector<Instance> v{labeled("a", "x", "l")};
  v.push_back(Instance{"b", SequencePair{{"s"}, {"t"}}});
  EXPECT_THROW(Corpus(PayloadKind::kClassification, v), std::invalid_argument);
}

TEST(Corpus, SelectExcludeAndSliceKeepOrder) {
  const Corpus c = small_corpus(6);
  const std::vector<std::string> ids{"x4", "x1"};
  EXPECT_EQ(c.select(ids).ids(), (std::vector<std::string>{"x1", "x4"}));
  EXPECT_EQ(c.exclude(ids).ids(), (std::vector<std::string>{"x0", "x2", "x3", "x5"}));
  EXPECT_EQ(c.slice(2, 4).ids(), (std::vector<std::string>{"x2", "x3"}));
  EXPECT_TRUE(c.contains("x5"));
  EXPECT_EQ(c.find("x9"), nullptr);
}

TEST(Tokenize, SplitsOnAnyWhitespace) {
  EXPECT_EQ(tokenize("  a\tb \n c  "), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_TRUE(tokenize(" \t\n").empty());
  const std::vector<std::string> t{"x", "y"};
  EXPECT_EQ(join_tokens(t), "x y");
}

TEST(Jsonl, ParsesBothSchemasAndNumbersMissingIds) {
  const Corpus c = parse_corpus("{\"text\":\"good film\",\"label\":\"pos\"}\n\n{\"id\":\"k\",\"text\":\"bad\",\"label\":\"neg\"}\n",
                                PayloadKind::kClassification);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].id, "1");
  EXPECT_EQ(c[0].text().tokens, (std::vector<std::string>{"good", "film"}));
  EXPECT_EQ(c[1].id, "k");

  const Corpus s = parse_corpus("{\"id\":\"p\",\"source\":\"a b\",\"target\":\"c\"}\n", PayloadKind::kSeq2Seq);
  EXPECT_EQ(s[0].pair().target, (std::vector<std::string>{"c"}));
}

TEST(Jsonl, ErrorsCarryLineNumbers) {
  try {
    parse_corpus("{\"text\":\"a\",\"label\":\"x\"}\n{\"text\":\"b\"}\n", PayloadKind::kClassification);
    FAIL();
  } catch (const CorpusFormatError& e) {
    EXPECT_NE(std::string(e.what()).find("2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_corpus("not json\n", PayloadKind::kClassification), CorpusFormatError);
  EXPECT_THROW(parse_corpus("{\"id\":\"a\",\"text\":\"x\",\"label\":\"l\"}\n{\"id\":\"a\",\"text\":\"y\",\"label\":\"l\"}\n",
                            PayloadKind::kClassification),
               CorpusFormatError);
  EXPECT_THROW(parse_corpus("\n\n", PayloadKind::kSeq2Seq), CorpusFormatError);
}

TEST(Jsonl, FileRoundTrip) {
  const Corpus c = kga::fixtures::tiny_translation(25, 3);
  const auto path = std::filesystem::temp_directory_path() / "kga_data_roundtrip.jsonl";
  save_corpus(c, path);
  const Corpus back = load_corpus(path, PayloadKind::kSeq2Seq);
  EXPECT_EQ(back.instances(), c.instances());
  std::filesystem::remove(path);
  EXPECT_THROW(load_corpus(path, PayloadKind::kSeq2Seq), CorpusFormatError);
}

TEST(Split, PartitionAlgebraHoldsForRandomSpecs) {
  const Corpus d = small_corpus(40);
  const Corpus extra = small_corpus(7, "n");
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const std::size_t count = 1 + seed % 39;
    const SplitSet s = partition(d, RandomCount{count}, extra, seed);
    EXPECT_NO_THROW(s.validate());
    EXPECT_EQ(s.forget.size(), count);
    const auto f = id_set(s.forget), r = id_set(s.retain), n = id_set(s.extra);
    std::set<std::string> uni = f;
    uni.insert(r.begin(), r.end());
    EXPECT_EQ(uni, id_set(d));
    EXPECT_EQ(f.size() + r.size(), d.size());
    for (const auto& id : n) EXPECT_FALSE(d.contains(id));
  }
}

TEST(Split, SelectionIsDeterministicPerSeed) {
  const Corpus d = small_corpus(50);
  EXPECT_EQ(select_forget_ids(d, RandomCount{10}, 4), select_forget_ids(d, RandomCount{10}, 4));
  EXPECT_NE(select_forget_ids(d, RandomCount{10}, 4), select_forget_ids(d, RandomCount{10}, 5));
}

TEST(Split, RejectsBadPartitions) {
  const Corpus d = small_corpus(5);
  EXPECT_THROW(partition(d, RandomCount{1}, small_corpus(2), 1), std::invalid_argument);  // D_n overlaps D
  EXPECT_THROW(partition(d, RandomCount{5}, Corpus{}, 1), std::invalid_argument);
  EXPECT_THROW(partition(d, ExplicitIds{{"nope"}}, Corpus{}, 1), std::invalid_argument);
}

TEST(Split, EmptyForgetSetIsLegal) {
  const Corpus d = small_corpus(5);
  const SplitSet s = partition(d, ExplicitIds{}, Corpus{}, 1);
  EXPECT_TRUE(s.forget.empty());
  EXPECT_EQ(s.retain.ids(), d.ids());
}

TEST(Split, TokenMatchSelectsContainingInstances) {
  const Corpus d = small_corpus(9);
  const auto ids = select_forget_ids(d, TokenMatch{"w1"}, 0);
  EXPECT_EQ(ids, (std::vector<std::string>{"x1", "x4", "x7"}));
}

TEST(Split, ScoreBandsPartitionTheScoredInstances) {
  const Corpus d = small_corpus(50);
  ScoreBand band;
  for (std::size_t i = 0; i < 50; ++i) band.scores["x" + std::to_string(i)] = static_cast<double>((i * 37) % 50);
  band.bands = 5;
  band.count = 10;
  std::set<std::string> seen;
  for (std::size_t b = 0; b < 5; ++b) {
    band.band = b;
    const auto ids = select_forget_ids(d, band, 9);
    ASSERT_EQ(ids.size(), 10u);
    for (const auto& id : ids) {
      const double score = band.scores.at(id);
      EXPECT_GE(score, 10.0 * b);
      EXPECT_LT(score, 10.0 * (b + 1));
      EXPECT_TRUE(seen.insert(id).second);
    }
  }
  EXPECT_EQ(seen.size(), 50u);
}

TEST(Split, ManifestRoundTrip) {
  SplitManifest m;
  m.forget_ids = {"b", "a"};
  m.extra_path = "extra.jsonl";
  m.seed = 17;
  m.spec_json = describe_spec(RandomCount{2});
  const SplitManifest back = SplitManifest::from_json(m.to_json());
  EXPECT_EQ(back.forget_ids, m.forget_ids);
  EXPECT_EQ(back.extra_path, m.extra_path);
  EXPECT_EQ(back.seed, 17u);
  EXPECT_EQ(back.spec_json, m.spec_json);
}

TEST(Synth, GeneratorsAreDeterministic) {
  EXPECT_EQ(kga::fixtures::tiny_classification(20, 5).instances(), kga::fixtures::tiny_classification(20, 5).instances());
  EXPECT_NE(kga::fixtures::tiny_classification(20, 5).instances(), kga::fixtures::tiny_classification(20, 6).instances());
  EXPECT_EQ(kga::fixtures::tiny_translation(30, 2, 0.5).instances(), kga::fixtures::tiny_translation(30, 2, 0.5).instances());
}

TEST(Synth, ClassificationLabelsInterleave) {
  const Corpus c = kga::fixtures::tiny_classification(10, 1);
  ASSERT_EQ(c.size(), 20u);
  for (std::size_t i = 0; i + 1 < c.size(); ++i) EXPECT_NE(c[i].text().label, c[i + 1].text().label);
  for (const auto& inst : c) EXPECT_EQ(inst.text().tokens.size(), 6u);
}

TEST(Synth, TranslationWithoutSynonymsFollowsTheRule) {
  TranslationSynthConfig cfg;
  cfg.instances = 60;
  cfg.source_vocab = 12;
  cfg.min_length = 2;
  cfg.max_length = 7;
  const Corpus c = synth_translation(cfg, 11);
  const TranslationRule rule = translation_rule(cfg, 11);
  for (const auto& inst : c) {
    EXPECT_GE(inst.pair().source.size(), 2u);
    EXPECT_LE(inst.pair().source.size(), 7u);
    EXPECT_EQ(rule.apply(inst.pair().source), inst.pair().target);
  }
  std::set<std::size_t> image(rule.mapping.begin(), rule.mapping.end());
  EXPECT_EQ(image.size(), rule.mapping.size());
}

TEST(Synth, SynonymsOnlyReplaceWordsThatHaveThem) {
  TranslationSynthConfig cfg;
  cfg.instances = 80;
  cfg.source_vocab = 10;
  cfg.reorder = false;
  cfg.synonym_ratio = 0.5;
  const Corpus c = synth_translation(cfg, 4);
  const TranslationRule rule = translation_rule(cfg, 4);
  for (const auto& inst : c) {
    const auto& src = inst.pair().source;
    ASSERT_EQ(src.size(), inst.pair().target.size());
    for (std::size_t i = 0; i < src.size(); ++i) {
      const std::size_t w = std::stoul(src[i].substr(1));
      const auto& t = inst.pair().target[i];
      if (rule.has_synonym[w]) {
        EXPECT_TRUE(t == rule.target_word(w) || t == rule.synonym_word(w));
      } else {
        EXPECT_EQ(t, rule.target_word(w));
      }
    }
  }
}
