// Acceptance gate. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "kga/data/split.hpp"
#include "kga/data/synth.hpp"
#include "kga/eval/metrics.hpp"
#include "kga/gradkit/grad_check.hpp"
#include "kga/harness/experiment.hpp"
#include "kga/harness/presets.hpp"
#include "kga/unlearn/baselines.hpp"
#include "kga/unlearn/distance.hpp"
#include "kga/unlearn/kga.hpp"
#include "kga/util/seed.hpp"
#include "test_support.hpp"

using namespace kga;
using harness::ExperimentConfig;
using harness::Method;
using harness::ReportBundle;
using harness::SeedReport;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

double elapsed(Clock::time_point since) { return std::chrono::duration<double>(Clock::now() - since).count(); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<std::uint64_t> seed_range(std::uint64_t first, std::uint64_t last) {
  std::vector<std::uint64_t> s;
  for (std::uint64_t i = first; i <= last; ++i) s.push_back(i);
  return s;
}

double metric(const SeedReport& s, const char* model, const char* split,
              std::optional<double> harness::SplitMetrics::*field) {
  const auto* m = s.model(model);
  if (!m || !m->split(split) || !(m->split(split)->*field)) return std::nan("");
  return *(m->split(split)->*field);
}

std::string failed_seeds(const ReportBundle& b) {
  std::string out;
  for (const auto& s : b.seeds) {
    if (!s.ok) out += fmt::format(" seed {} failed: {};", s.seed, s.error);
  }
  return out;
}

// ---------------------------------------------------------------------------
// 1. Gradients

// Mean |gap_y - gap_z| over the pairs that stay clear of the kink of |.|.
std::vector<std::size_t> smooth_pairs(const models::Model& star, const models::Model& a_f, const models::Model& a_d,
                                      const models::Model& a_n, const std::vector<const data::Instance*>& ys,
                                      const std::vector<const data::Instance*>& zs) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const double d = unlearn::distribution_distance(star, a_f, *ys[i]) - unlearn::distribution_distance(a_d, a_n, *zs[i]);
    if (std::abs(d) > 1e-4) keep.push_back(i);
  }
  return keep;
}

Verdict gradient_suite() {
  const auto start = Clock::now();
  std::mt19937_64 rng(1);
  double worst_random = 0.0;
  for (int i = 0; i < 100; ++i) {
    auto g = fixtures::random_graph(rng);
    const auto r = gradkit::grad_check(g.graph, g.output, gradkit::Bindings{{}, g.params});
    if (!r.ok) return {false, fmt::format("random graph {}: {}", i, r.failure)};
    worst_random = std::max(worst_random, r.max_relative_error);
  }

  double worst_loss = 0.0;
  std::size_t filtered = 0;
  for (auto arch : {models::Architecture::kClassifier, models::Architecture::kRecurrent, models::Architecture::kAttention}) {
    const data::Corpus all = arch == models::Architecture::kClassifier ? fixtures::tiny_classification(10, 5)
                                                                       : fixtures::tiny_translation(20, 5, 0.5);
    const auto vocab = fixtures::vocabulary_of({&all});
    const auto spec = fixtures::small_spec(arch);
    auto init = [&](std::uint64_t s) { return models::initialize(spec, vocab, s, models::OutputInit::kRandom); };
    const models::Model star = init(1), a_f = init(2), a_d = init(3), a_n = init(4);
    std::vector<const data::Instance*> ys, zs;
    for (std::size_t i = 0; i < 8; ++i) {
      ys.push_back(&all[i]);
      zs.push_back(&all[all.size() - 1 - i]);
    }
    const auto keep = smooth_pairs(star, a_f, a_d, a_n, ys, zs);
    filtered += ys.size() - keep.size();
    std::vector<const data::Instance*> ky, kz;
    for (std::size_t i : keep) ky.push_back(ys[i]), kz.push_back(zs[i]);
    if (ky.empty()) return {false, "every alignment pair sits on the kink"};
    const auto align = [&](const models::Model& m) { return unlearn::alignment_loss(m, a_f, a_d, a_n, ky, kz); };
    const auto retain = [&](const models::Model& m) { return unlearn::retain_loss(m, a_d, ys); };
    worst_loss = std::max(worst_loss, fixtures::model_gradient_error(star, align, 60, 11));
    worst_loss = std::max(worst_loss, fixtures::model_gradient_error(star, retain, 60, 12));
  }
  const double seconds = elapsed(start);
  const bool pass = worst_random <= 1e-4 && worst_loss <= 1e-4 && seconds < 60.0;
  return {pass, fmt::format("random max rel err {:.2e}, KGA loss max rel err {:.2e} ({} kink pairs dropped), {:.1f}s",
                            worst_random, worst_loss, filtered, seconds)};
}

// ---------------------------------------------------------------------------
// 2. Metric oracles

double brute_kl(const std::vector<double>& p, const std::vector<double>& q) {
  const double n = static_cast<double>(p.size());
  double t = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double a = p[i] * (1 - 1e-9) + 1e-9 / n;
    const double b = q[i] * (1 - 1e-9) + 1e-9 / n;
    t += a * std::log(a / b);
  }
  return t;
}

models::Scores scores_of(const std::vector<std::vector<double>>& probs, std::vector<std::size_t> offsets,
                         std::vector<std::size_t> gold) {
  models::Scores s;
  s.log_probs = gradkit::DenseArray::matrix(probs.size(), probs.front().size());
  for (std::size_t r = 0; r < probs.size(); ++r) {
    for (std::size_t k = 0; k < probs[r].size(); ++k) s.log_probs(r, k) = std::log(probs[r][k]);
  }
  s.layout.offsets = std::move(offsets);
  s.layout.gold = std::move(gold);
  return s;
}

Verdict metric_oracles() {
  double worst = 0.0;
  auto track = [&](double got, double want) { worst = std::max(worst, std::abs(got - want)); };

  const std::vector<double> p{0.7, 0.2, 0.1}, q{0.1, 0.3, 0.6};
  track(eval::kl(p, q), brute_kl(p, q));
  track(eval::jsd(p, q), 0.5 * (brute_kl(p, q) + brute_kl(q, p)));
  const std::vector<double> a{0.9, 0.1}, b{0.1, 0.9};
  track(eval::jsd(a, b), 0.5 * (brute_kl(a, b) + brute_kl(b, a)));  // 0.8 ln 9 before smoothing

  const std::vector<double> x{4.0, 2.0, 9.0}, y{2.0, 2.5, 10.0};
  track(eval::lpd(x, y), (2.0 / 2.0 + 0.5 / 2.5 + 1.0 / 10.0) / 3.0);

  // Two instances of two rows each, then one of one row.
  const auto before = scores_of({{0.5, 0.5}, {0.4, 0.6}, {0.3, 0.7}, {0.2, 0.8}, {0.5, 0.5}}, {0, 2, 4, 5}, {0, 1, 1, 1, 0});
  const auto after = scores_of({{0.4, 0.6}, {0.5, 0.5}, {0.2, 0.8}, {0.1, 0.9}, {0.5, 0.5}}, {0, 2, 4, 5}, {0, 1, 1, 1, 0});
  // Gold log-prob sums: before 0.5*0.6=0.30 vs after 0.4*0.5=0.20 (drop);
  // 0.7*0.8=0.56 vs 0.8*0.9=0.72 (rise); equal (no strict drop).
  track(eval::pdlp(after, before), 100.0 / 3.0);
  const std::vector<double> rows_jsd{(eval::jsd(std::vector<double>{0.4, 0.6}, std::vector<double>{0.5, 0.5}) +
                                      eval::jsd(std::vector<double>{0.5, 0.5}, std::vector<double>{0.4, 0.6})) / 2,
                                     (eval::jsd(std::vector<double>{0.2, 0.8}, std::vector<double>{0.3, 0.7}) +
                                      eval::jsd(std::vector<double>{0.1, 0.9}, std::vector<double>{0.2, 0.8})) / 2,
                                     0.0};
  track(eval::corpus_jsd(after, before), (rows_jsd[0] + rows_jsd[1] + rows_jsd[2]) / 3.0);

  const std::vector<std::size_t> pred{0, 2, 1, 1, 0, 2}, gold{0, 1, 1, 1, 2, 2};
  track(eval::micro_f1(pred, gold), 4.0 / 6.0);
  // Label sets: tp = 3 ({0},{1},{2}), fp = 2 ({3},{4}), fn = 1 ({5}).
  track(eval::micro_f1({{0, 3}, {1}, {2, 4}}, {{0}, {1, 5}, {2}}), 6.0 / (6.0 + 2.0 + 1.0));
  const bool metrics_ok = worst <= 1e-9;

  // Five pairs, counted by hand. Clipped matches / candidate n-grams:
  //   "a b c d e" | "a b c d f"        4/5 3/4 2/3 1/2
  //   "the cat sat" | "the cat sat down" 3/3 2/2 1/1 0/0
  //   "x y" | "x z"                    1/2 0/1 0/0 0/0
  //   "p q r s" | "p q r s"            4/4 3/3 2/2 1/1
  //   "m n m n" | "m n o"              2/4 1/3 0/2 0/1
  // Totals 14/18, 9/13, 5/8, 2/4; candidate and reference lengths are both 18.
  const std::vector<std::vector<std::string>> cand{data::tokenize("a b c d e"), data::tokenize("the cat sat"),
                                                   data::tokenize("x y"), data::tokenize("p q r s"),
                                                   data::tokenize("m n m n")};
  const std::vector<std::vector<std::string>> ref{data::tokenize("a b c d f"), data::tokenize("the cat sat down"),
                                                  data::tokenize("x z"), data::tokenize("p q r s"),
                                                  data::tokenize("m n o")};
  const double bleu_oracle = 100.0 * std::pow((14.0 / 18) * (9.0 / 13) * (5.0 / 8) * (2.0 / 4), 0.25);
  const double bleu_err = std::abs(eval::bleu4(cand, ref) - bleu_oracle);
  return {metrics_ok && bleu_err <= 1e-6,
          fmt::format("max metric abs err {:.1e}, BLEU-4 {:.6f} vs oracle {:.6f}", worst, eval::bleu4(cand, ref), bleu_oracle)};
}

// ---------------------------------------------------------------------------
// 3, 4, 6, 7, 9. Toy classification

struct ClassificationRuns {
  ReportBundle full;   // seeds 1-5: KGA, Retrain, BadTeacher, attack
  ReportBundle extra;  // seeds 6-20: KGA
  double seconds = 0.0;
};

ClassificationRuns classification_runs() {
  const auto start = Clock::now();
  ClassificationRuns r;
  ExperimentConfig c = harness::toy_classification();
  c.methods = {Method::kKga, Method::kRetrain, Method::kBadt};
  c.mia.enabled = true;
  c.seeds = seed_range(1, 5);
  r.full = harness::run_experiment(c);
  c.methods = {Method::kKga};
  c.mia.enabled = false;
  c.seeds = seed_range(6, 20);
  r.extra = harness::run_experiment(c);
  r.seconds = elapsed(start);
  return r;
}

Verdict stopping_soundness(const ClassificationRuns& runs) {
  std::size_t runs_ok = 0, gap_met = 0, violations = 0;
  std::string notes = failed_seeds(runs.full) + failed_seeds(runs.extra);
  for (const auto* b : {&runs.full, &runs.extra}) {
    for (const auto& s : b->seeds) {
      if (!s.ok || !s.kga) continue;
      ++runs_ok;
      const auto& k = *s.kga;
      if (k.termination != unlearn::Termination::kGapMet) continue;
      ++gap_met;
      if (!(k.final_gap <= 0.1 * k.initial_gap)) {
        ++violations;
        notes += fmt::format(" seed {}: G*={:.4g} G={:.4g};", s.seed, k.final_gap, k.initial_gap);
      }
    }
  }
  const bool pass = runs_ok == 20 && violations == 0 && runs.seconds < 600.0;
  return {pass, fmt::format("{} runs, {} gap-met, {} violations, {:.0f}s{}", runs_ok, gap_met, violations, runs.seconds, notes)};
}

Verdict table1_direction(const ReportBundle& b) {
  using SM = harness::SplitMetrics;
  std::size_t a = 0, bb = 0, c = 0;
  std::string rows;
  for (const auto& s : b.seeds) {
    if (!s.ok) continue;
    const double orig_forget = metric(s, "original", "forget", &SM::task);
    const double orig_test = metric(s, "original", "test", &SM::task);
    const double kga_test = metric(s, "kga", "test", &SM::task);
    const double jsd_kga = metric(s, "kga", "forget", &SM::jsd);
    const double jsd_orig = metric(s, "original", "forget", &SM::jsd);
    a += orig_forget > orig_test;
    bb += jsd_kga <= jsd_orig;
    c += std::abs(kga_test - orig_test) <= 2.0;
    rows += fmt::format(" [s{} acc {:.1f}/{:.1f} jsd {:.3f}<={:.3f} test {:.1f}~{:.1f}]", s.seed, orig_forget, orig_test,
                        jsd_kga, jsd_orig, kga_test, orig_test);
  }
  return {a >= 4 && bb >= 4 && c >= 4, fmt::format("(a) {}/5 (b) {}/5 (c) {}/5{}{}", a, bb, c, rows, failed_seeds(b))};
}

Verdict attack_direction(const ReportBundle& b) {
  std::size_t hold = 0;
  std::string rows;
  for (const auto& s : b.seeds) {
    if (!s.ok) continue;
    const auto* o = s.model("original");
    const auto* r = s.model("retrain");
    const auto* k = s.model("kga");
    if (!o || !r || !k || !o->attack || !r->attack || !k->attack) continue;
    const double fo = o->attack->f1, fr = r->attack->f1, fk = k->attack->f1;
    const bool ok = fo > fr && fo > fk && std::abs(fk - fr) < std::abs(fo - fr);
    hold += ok;
    rows += fmt::format(" [s{} F1 orig {:.3f} retrain {:.3f} kga {:.3f}]", s.seed, fo, fr, fk);
  }
  return {hold >= 4, fmt::format("{}/5 seeds{}{}", hold, rows, failed_seeds(b))};
}

Verdict time_direction(const ClassificationRuns& runs) {
  std::vector<double> kga, retrain;
  for (const auto* b : {&runs.full, &runs.extra}) {
    for (const auto& s : b->seeds) {
      if (!s.ok) continue;
      if (const auto* k = s.model("kga")) kga.push_back(k->seconds);
      if (const auto* r = s.model("retrain")) retrain.push_back(r->seconds);
    }
  }
  if (kga.empty() || retrain.empty()) return {false, "no timings"};
  const double mk = median(kga), mr = median(retrain);
  return {mk < 0.5 * mr, fmt::format("median KGA total {:.3f}s (helpers included) vs median Retrain {:.3f}s, ratio {:.2f} over {} runs",
                                     mk, mr, mk / mr, kga.size())};
}

Verdict badt_direction(const ReportBundle& b) {
  using SM = harness::SplitMetrics;
  std::size_t hold = 0;
  std::string rows;
  for (const auto& s : b.seeds) {
    if (!s.ok) continue;
    const double forget = metric(s, "badt", "forget", &SM::task);
    const double test = metric(s, "badt", "test", &SM::task);
    const double orig = metric(s, "original", "test", &SM::task);
    hold += std::abs(forget - 50.0) <= 10.0 && std::abs(test - orig) <= 3.0;
    rows += fmt::format(" [s{} forget {:.1f} test {:.1f} vs {:.1f}]", s.seed, forget, test, orig);
  }
  return {hold >= 4, fmt::format("{}/5 seeds{}{}", hold, rows, failed_seeds(b))};
}

// ---------------------------------------------------------------------------
// 5. Toy translation

Verdict table2_direction() {
  using SM = harness::SplitMetrics;
  ExperimentConfig c = harness::toy_translation();
  c.methods = {Method::kKga, Method::kRetrain};
  c.eval.metrics = {"pdlp"};
  c.seeds = seed_range(1, 5);
  const ReportBundle b = harness::run_experiment(c);
  std::size_t hold = 0;
  std::string rows;
  for (const auto& s : b.seeds) {
    if (!s.ok) continue;
    const double rf = metric(s, "retrain", "forget", &SM::pdlp);
    const double rt = metric(s, "retrain", "test", &SM::pdlp);
    const double kf = metric(s, "kga", "forget", &SM::pdlp);
    hold += rf >= 80.0 && rt >= 35.0 && rt <= 65.0 && std::abs(kf - rf) <= 15.0;
    rows += fmt::format(" [s{} retrain {:.0f}/{:.1f} kga {:.0f}]", s.seed, rf, rt, kf);
  }
  return {hold >= 4, fmt::format("{}/5 seeds (forget/test PDLP){}{}", hold, rows, failed_seeds(b))};
}

// ---------------------------------------------------------------------------
// 8. SISA exactness

Verdict sisa_exactness() {
  std::mt19937_64 rng(8);
  std::size_t identical = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const bool classify = trial % 2 == 0;
    const data::Corpus corpus = classify ? fixtures::tiny_classification(8 + trial, 100 + trial)
                                         : fixtures::tiny_translation(14 + trial, 100 + trial);
    const auto vocab = fixtures::vocabulary_of({&corpus});
    const auto spec = fixtures::small_spec(classify ? models::Architecture::kClassifier : models::Architecture::kAttention);
    const auto cfg = fixtures::quick_train(2);
    const std::size_t shards = 2 + rng() % 3;
    const auto sharded = unlearn::sisa_train(corpus, spec, vocab, cfg, shards, rng());
    auto ids = corpus.ids();
    std::shuffle(ids.begin(), ids.end(), rng);
    ids.resize(1 + rng() % 4);

    const auto forgotten = unlearn::sisa_forget(sharded, ids);
    auto assignment = sharded.assignment();
    for (auto& shard : assignment) {
      std::erase_if(shard, [&](const std::string& id) { return std::find(ids.begin(), ids.end(), id) != ids.end(); });
    }
    const auto fresh = unlearn::sisa_train_assigned(corpus.exclude(ids), assignment, sharded.seeds, spec, vocab, cfg);
    bool same = forgotten.models.size() == fresh.models.size() && forgotten.assignment() == fresh.assignment();
    for (std::size_t s = 0; same && s < fresh.models.size(); ++s) {
      same = forgotten.models[s].has_value() == fresh.models[s].has_value() &&
             (!fresh.models[s] || *forgotten.models[s] == *fresh.models[s]);
    }
    if (same) {
      const auto a = unlearn::sisa_score(forgotten, corpus);
      const auto f = unlearn::sisa_score(fresh, corpus);
      same = a.log_probs == f.log_probs;
    }
    identical += same;
  }
  return {identical == 10, fmt::format("{}/10 randomized cases bit-identical", identical)};
}

// ---------------------------------------------------------------------------
// 10. Lexical removal

Verdict lexical_removal() {
  const auto base = harness::toy_translation();
  const auto rule = data::translation_rule(base.data.translation, util::derive_seed(1, util::stage::kData));
  const std::string token = rule.target_word(8);
  auto configs = harness::preset("lexical-removal", {{"split.token", token}});
  ExperimentConfig c = configs.front();
  c.methods = {Method::kKga};
  c.eval.metrics = {"task"};
  c.seeds = {1};
  const ReportBundle b = harness::run_experiment(c);
  const SeedReport& s = b.seeds.front();
  if (!s.ok) return {false, "run failed: " + s.error};
  const auto* o = s.model("original");
  const auto* k = s.model("kga");
  if (!o || !k || !o->token_count || !k->token_count) return {false, "token counts missing"};
  const double before = static_cast<double>(*o->token_count), after = static_cast<double>(*k->token_count);
  const double drop = before > 0 ? 100.0 * (before - after) / before : 0.0;
  std::string gap;
  if (s.kga) gap = fmt::format(", G {:.4f} -> {:.4f} ({})", s.kga->initial_gap, s.kga->final_gap,
                               unlearn::termination_name(s.kga->termination));
  return {before > 0 && after <= 0.1 * before,
          fmt::format("token '{}': |D_f| {}, {} prompts, count {} -> {} ({:.0f}% drop){}", token, s.forget_size,
                      s.probe_prompts, *o->token_count, *k->token_count, drop, gap)};
}

}  // namespace

int main() {
  std::size_t failures = 0;
  auto report = [&](const char* id, const char* what, const std::function<Verdict()>& run) {
    const auto start = Clock::now();
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += !v.pass;
    std::printf("%s %s  %s: %s (%.1fs)\n", id, v.pass ? "PASS" : "FAIL", what, v.detail.c_str(), elapsed(start));
    std::fflush(stdout);
  };

  report("AC1", "gradient suite", gradient_suite);
  report("AC2", "metric oracles", metric_oracles);
  ClassificationRuns runs;
  std::string run_error;
  try {
    runs = classification_runs();
  } catch (const std::exception& e) {
    run_error = e.what();
  }
  auto guarded = [&](const std::function<Verdict()>& f) {
    return [&, f] { return run_error.empty() ? f() : Verdict{false, "toy classification runs failed: " + run_error}; };
  };
  report("AC3", "stopping soundness", guarded([&] { return stopping_soundness(runs); }));
  report("AC4", "classification direction", guarded([&] { return table1_direction(runs.full); }));
  report("AC5", "translation PDLP direction", table2_direction);
  report("AC6", "membership inference direction", guarded([&] { return attack_direction(runs.full); }));
  report("AC7", "unlearning time", guarded([&] { return time_direction(runs); }));
  report("AC8", "SISA exactness", sisa_exactness);
  report("AC9", "BadTeacher direction", guarded([&] { return badt_direction(runs.full); }));
  report("AC10", "lexical removal", lexical_removal);
  std::printf("%zu of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
