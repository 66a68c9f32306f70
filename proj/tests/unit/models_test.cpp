#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "kga/gradkit/grad_check.hpp"
#include "kga/models/checkpoint.hpp"
#include "kga/models/decode.hpp"
#include "kga/models/distribution.hpp"
#include "kga/models/network.hpp"
#include "kga/models/training.hpp"
#include "test_support.hpp"

using namespace kga;
using namespace kga::models;

namespace {

Model random_model(Architecture arch, const data::Corpus& corpus, std::uint64_t seed = 7) {
  return initialize(fixtures::small_spec(arch), fixtures::vocabulary_of({&corpus}), seed, OutputInit::kRandom);
}

double accuracy_on(const Model& m, const data::Corpus& c) {
  std::size_t hit = 0;
  for (const auto& inst : c) hit += class_distribution(m, inst).argmax() == m.vocabulary().label_id(inst.text().label);
  return static_cast<double>(hit) / static_cast<double>(c.size());
}

}  // namespace

TEST(Vocabulary, ReservedIdsAndFrequencyOrder) {
  const data::Corpus c(data::PayloadKind::kClassification,
                       {data::Instance{"1", data::LabeledText{{"b", "a", "b"}, "y"}},
                        data::Instance{"2", data::LabeledText{{"c", "a", "b"}, "x"}}});
  const auto v = fixtures::vocabulary_of({&c});
  EXPECT_EQ(v->token(Vocabulary::kPad).empty(), false);
  EXPECT_EQ(v->id("b"), Vocabulary::kReserved);      // 3 occurrences
  EXPECT_EQ(v->id("a"), Vocabulary::kReserved + 1);  // 2
  EXPECT_EQ(v->id("c"), Vocabulary::kReserved + 2);
  EXPECT_EQ(v->id("zzz"), Vocabulary::kUnknown);
  EXPECT_EQ(v->label_count(), 2u);
  EXPECT_THROW(v->label_id("nope"), std::out_of_range);
  EXPECT_EQ(*v, *fixtures::vocabulary_of({&c}));
  EXPECT_EQ(v->hash(), fixtures::vocabulary_of({&c})->hash());
}

TEST(Encode, GenerativeLayout) {
  const auto c = fixtures::tiny_translation(5, 1);
  const Model m = random_model(Architecture::kAttention, c);
  const auto e = encode(m, c[0]);
  const auto& p = c[0].pair();
  EXPECT_EQ(e.source.size(), p.source.size() + 1);
  EXPECT_EQ(e.source.back(), Vocabulary::kEos);
  EXPECT_EQ(e.decoder_input.front(), Vocabulary::kBos);
  EXPECT_EQ(e.gold.back(), Vocabulary::kEos);
  EXPECT_EQ(e.gold.size(), p.target.size() + 1);
  EXPECT_THROW(encode(random_model(Architecture::kClassifier, fixtures::tiny_classification(3, 1)), c[0]),
               std::invalid_argument);
}

class EveryArchitecture : public ::testing::TestWithParam<Architecture> {
 protected:
  data::Corpus corpus() const {
    return GetParam() == Architecture::kClassifier ? fixtures::tiny_classification(6, 3) : fixtures::tiny_translation(6, 3);
  }
};

TEST_P(EveryArchitecture, DistributionsAreNormalized) {
  const auto c = corpus();
  const Model m = random_model(GetParam(), c);
  for (const auto& inst : c) {
    std::vector<Distribution> ds;
    if (GetParam() == Architecture::kClassifier) {
      ds.push_back(class_distribution(m, inst));
    } else {
      ds = token_distributions(m, inst);
      EXPECT_EQ(ds.size(), inst.pair().target.size() + 1);
    }
    for (const auto& d : ds) {
      EXPECT_EQ(d.support_size(), m.support_size());
      EXPECT_NEAR(std::accumulate(d.probs.begin(), d.probs.end(), 0.0), 1.0, 1e-12);
      for (double p : d.probs) EXPECT_GE(p, 0.0);
    }
  }
}

TEST_P(EveryArchitecture, ZeroOutputInitIsUniform) {
  const auto c = corpus();
  const Model m = initialize(fixtures::small_spec(GetParam()), fixtures::vocabulary_of({&c}), 1);
  const auto s = score(m, c);
  const double u = -std::log(static_cast<double>(m.support_size()));
  for (double v : s.log_probs.data()) EXPECT_NEAR(v, u, 1e-12);
}

TEST_P(EveryArchitecture, NetworkGradientMatchesFiniteDifferences) {
  const auto c = corpus();
  const Model m = random_model(GetParam(), c, 11);
  const auto batch = encode_all(m, c.pointers());
  gradkit::Graph g;
  const auto lp = build_log_probs(g, m, batch);
  const RowLayout layout = layout_of(batch);
  gradkit::DenseArray pick = gradkit::DenseArray::matrix(layout.rows(), m.support_size());
  for (std::size_t r = 0; r < layout.rows(); ++r) pick(r, layout.gold[r]) = -1.0;
  const auto loss = g.sum(g.mul(lp, g.constant(pick)));
  const auto r = gradkit::grad_check(g, loss, gradkit::Bindings{{}, m.parameters()});
  ASSERT_TRUE(r.ok) << r.failure;
  EXPECT_LE(r.max_relative_error, 1e-4);
}

TEST_P(EveryArchitecture, CrossEntropyMatchesScoresAndFiniteDifferences) {
  const auto c = corpus();
  const Model m = random_model(GetParam(), c, 5);
  const auto batch = encode_all(m, c.pointers());
  const LossGradient lg = cross_entropy(m, batch);
  const Scores s = score(m, batch);
  double expect = 0.0;
  for (std::size_t i = 0; i < s.instances(); ++i) expect -= s.mean_gold_log_prob(i);
  EXPECT_NEAR(lg.value, expect / static_cast<double>(s.instances()), 1e-12);
  const double err = fixtures::model_gradient_error(
      m, [&](const Model& x) { return cross_entropy(x, batch); }, 40, 3);
  EXPECT_LE(err, 1e-4);
}

TEST_P(EveryArchitecture, CheckpointRoundTripIsExact) {
  const auto c = corpus();
  const Model m = random_model(GetParam(), c, 9);
  const std::string bytes = serialize_checkpoint(m);
  const Model back = deserialize_checkpoint(bytes);
  EXPECT_EQ(back, m);
  EXPECT_EQ(serialize_checkpoint(back), bytes);
}

INSTANTIATE_TEST_SUITE_P(Models, EveryArchitecture,
                         ::testing::Values(Architecture::kClassifier, Architecture::kRecurrent, Architecture::kAttention),
                         [](const auto& info) { return std::string(architecture_name(info.param)); });

TEST(Checkpoint, RejectsCorruption) {
  const auto c = fixtures::tiny_classification(4, 1);
  const std::string bytes = serialize_checkpoint(random_model(Architecture::kClassifier, c));
  std::string bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(deserialize_checkpoint(bad), CheckpointError);
  EXPECT_THROW(deserialize_checkpoint(bytes.substr(0, bytes.size() - 3)), CheckpointError);
  EXPECT_THROW(deserialize_checkpoint(bytes + "x"), CheckpointError);
  EXPECT_THROW(deserialize_checkpoint(""), CheckpointError);
  EXPECT_THROW(load_checkpoint("/nonexistent/kga.ckpt"), CheckpointError);
}

TEST(Training, SeparableToyIsLearned) {
  const auto c = fixtures::tiny_classification(40, 2, 0.0);
  const auto r = train_supervised(fixtures::small_spec(Architecture::kClassifier), fixtures::vocabulary_of({&c}), c,
                                  fixtures::quick_train(10), 1);
  EXPECT_FALSE(r.diverged);
  EXPECT_GE(accuracy_on(r.model, c), 0.99);
  EXPECT_LT(r.loss_trajectory.back(), r.loss_trajectory.front());
}

TEST(Training, SameSeedSameModel) {
  const auto c = fixtures::tiny_translation(20, 2);
  const auto v = fixtures::vocabulary_of({&c});
  const auto spec = fixtures::small_spec(Architecture::kRecurrent);
  const auto a = train_supervised(spec, v, c, fixtures::quick_train(2), 4);
  const auto b = train_supervised(spec, v, c, fixtures::quick_train(2), 4);
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.loss_trajectory, b.loss_trajectory);
  const auto d = train_supervised(spec, v, c, fixtures::quick_train(2), 5);
  EXPECT_FALSE(d.model == a.model);
}

TEST(Training, RejectsEmptyCorpus) {
  const auto c = fixtures::tiny_classification(2, 1);
  EXPECT_THROW(train_supervised(fixtures::small_spec(Architecture::kClassifier), fixtures::vocabulary_of({&c}),
                                data::Corpus{}, fixtures::quick_train(), 1),
               std::invalid_argument);
}

TEST(BeamSearch, WiderBeamFindsTheBetterSequence) {
  // Tokens: 0 = end, 1 = a, 2 = b. Greedy commits to a; "b" then end is better.
  const auto lg = [](double p) { return std::log(p); };
  const StepFunction step = [&](const std::vector<std::vector<std::size_t>>& prefixes) {
    std::vector<std::vector<double>> out;
    for (const auto& p : prefixes) {
      if (p.empty()) out.push_back({lg(1e-12), lg(0.6), lg(0.4 - 1e-12)});
      else if (p.size() == 1 && p[0] == 1) out.push_back({lg(0.4), lg(0.3), lg(0.3)});
      else if (p.size() == 1) out.push_back({lg(0.9), lg(0.05), lg(0.05)});
      else out.push_back({lg(0.98), lg(0.01), lg(0.01)});
    }
    return out;
  };
  const Hypothesis greedy = beam_search(step, 0, 1, 10);
  EXPECT_EQ(greedy.tokens, (std::vector<std::size_t>{1}));
  EXPECT_NEAR(greedy.log_prob, std::log(0.6 * 0.4), 1e-12);
  EXPECT_TRUE(greedy.finished);
  const Hypothesis wide = beam_search(step, 0, 2, 10);
  EXPECT_EQ(wide.tokens, (std::vector<std::size_t>{2}));
  EXPECT_NEAR(wide.log_prob, std::log((0.4 - 1e-12) * 0.9), 1e-12);
}

TEST(BeamSearch, LengthCapClosesLiveHypotheses) {
  const StepFunction step = [](const std::vector<std::vector<std::size_t>>& prefixes) {
    return std::vector<std::vector<double>>(prefixes.size(), {std::log(0.1), std::log(0.9)});
  };
  const Hypothesis h = beam_search(step, 0, 3, 4);
  EXPECT_FALSE(h.finished);
  EXPECT_EQ(h.tokens, (std::vector<std::size_t>{1, 1, 1, 1}));
}

TEST(BeamGenerate, NeverEmitsReservedTokens) {
  const auto c = fixtures::tiny_translation(8, 1);
  const Model m = random_model(Architecture::kAttention, c);
  for (const auto& inst : c) {
    for (const auto& tok : beam_generate(m, inst.pair().source, 3)) {
      EXPECT_NE(tok, m.vocabulary().token(Vocabulary::kPad));
      EXPECT_NE(tok, m.vocabulary().token(Vocabulary::kBos));
    }
  }
}

TEST(Perplexity, MatchesHandValue) {
  const std::vector<double> lp{std::log(0.5), std::log(0.25)};
  const Perplexity p = perplexity_from_log_probs(lp);
  EXPECT_NEAR(p.value, std::sqrt(8.0), 1e-12);
  EXPECT_FALSE(p.clamped);
  const std::vector<double> tiny{-1e6};
  EXPECT_TRUE(perplexity_from_log_probs(tiny).clamped);
}
