#include "kga/eval/mia.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <stdexcept>

#include "kga/gradkit/adam.hpp"
#include "kga/gradkit/graph.hpp"
#include "kga/util/seed.hpp"

namespace kga::eval {

using gradkit::DenseArray;

std::vector<double> attack_features(const models::Scores& s, std::size_t instance) {
  if (instance >= s.instances()) throw std::out_of_range("attack_features: instance out of range");
  const std::size_t lo = s.layout.offsets[instance];
  const std::size_t hi = s.layout.offsets[instance + 1];
  std::vector<double> f(kFeatureWidth, 0.0);
  if (hi == lo) return f;
  std::vector<double> probs;
  for (std::size_t r = lo; r < hi; ++r) {
    const auto row = s.row(r);
    probs.assign(row.size(), 0.0);
    double entropy = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) {
      probs[k] = std::exp(row[k]);
      if (probs[k] > 0.0) entropy -= probs[k] * row[k];
    }
    const std::size_t top = std::min(kTopK, probs.size());
    std::partial_sort(probs.begin(), probs.begin() + static_cast<std::ptrdiff_t>(top), probs.end(), std::greater<>());
    for (std::size_t k = 0; k < top; ++k) f[k] += probs[k];
    f[kTopK] += entropy;
    f[kTopK + 1] += row[s.layout.gold[r]];
  }
  for (double& x : f) x /= static_cast<double>(hi - lo);
  return f;
}

void AttackDataset::validate() const {
  if (features.size() != labels.size()) throw std::invalid_argument("attack data: feature and label counts differ");
  bool member = false;
  bool nonmember = false;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (features[i].size() != kFeatureWidth) throw std::invalid_argument("attack data: ragged feature rows");
    if (labels[i] == 1) {
      member = true;
    } else if (labels[i] == 0) {
      nonmember = true;
    } else {
      throw std::invalid_argument("attack data: labels must be 0 or 1");
    }
  }
  if (!member || !nonmember) throw std::invalid_argument("attack data: needs both members and non-members");
}

AttackDataset attack_dataset(const models::Scores& members, const models::Scores& nonmembers) {
  AttackDataset d;
  for (std::size_t i = 0; i < members.instances(); ++i) {
    d.features.push_back(attack_features(members, i));
    d.labels.push_back(1);
  }
  for (std::size_t i = 0; i < nonmembers.instances(); ++i) {
    d.features.push_back(attack_features(nonmembers, i));
    d.labels.push_back(0);
  }
  return d;
}

Attacker Attacker::train(const AttackDataset& data, const AttackerConfig& cfg) {
  data.validate();
  if (cfg.steps == 0 || !(cfg.learning_rate > 0.0)) throw std::invalid_argument("attacker: steps and rate must be positive");
  const std::size_t n = data.size();
  const std::size_t w = kFeatureWidth;
  Attacker a;
  a.mean_.assign(w, 0.0);
  a.scale_.assign(w, 0.0);
  for (const auto& row : data.features) {
    for (std::size_t k = 0; k < w; ++k) a.mean_[k] += row[k] / static_cast<double>(n);
  }
  for (const auto& row : data.features) {
    for (std::size_t k = 0; k < w; ++k) a.scale_[k] += (row[k] - a.mean_[k]) * (row[k] - a.mean_[k]) / static_cast<double>(n);
  }
  for (double& s : a.scale_) s = s > 1e-24 ? 1.0 / std::sqrt(s) : 1.0;

  DenseArray x = DenseArray::matrix(n, w);
  DenseArray target = DenseArray::matrix(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < w; ++k) x(i, k) = (data.features[i][k] - a.mean_[k]) * a.scale_[k];
    target(i, static_cast<std::size_t>(data.labels[i])) = -1.0 / static_cast<double>(n);
  }

  gradkit::Graph g;
  const auto weights = g.parameter(0, w, 2);
  const auto bias = g.parameter(1, 1, 2);
  const auto logits = g.add(g.matmul(g.constant(std::move(x)), weights), bias);
  const auto loss = g.sum(g.mul(g.log_softmax(logits), g.constant(std::move(target))));

  std::vector<DenseArray> params{DenseArray::matrix(w, 2), DenseArray::matrix(1, 2)};
  gradkit::AdamState state(gradkit::AdamConfig{.learning_rate = cfg.learning_rate}, params);
  const gradkit::Schedule schedule = gradkit::constant_schedule();
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const auto ev = gradkit::forward(g, gradkit::Bindings{{}, params});
    const auto grads = gradkit::backward(ev, loss);
    if (!gradkit::adam_step(params, grads, state, schedule)) throw std::runtime_error("attacker: non-finite gradient");
  }
  a.weights_.assign(params[0].data().begin(), params[0].data().end());
  a.bias_.assign(params[1].data().begin(), params[1].data().end());
  return a;
}

double Attacker::member_probability(std::span<const double> features) const {
  if (features.size() != kFeatureWidth) throw std::invalid_argument("attacker: feature width mismatch");
  double z[2] = {bias_[0], bias_[1]};
  for (std::size_t k = 0; k < kFeatureWidth; ++k) {
    const double v = (features[k] - mean_[k]) * scale_[k];
    z[0] += v * weights_[2 * k];
    z[1] += v * weights_[2 * k + 1];
  }
  return 1.0 / (1.0 + std::exp(z[0] - z[1]));
}

std::vector<int> Attacker::predict(const AttackDataset& data) const {
  std::vector<int> out;
  out.reserve(data.size());
  for (const auto& row : data.features) out.push_back(member_probability(row) > 0.5 ? 1 : 0);
  return out;
}

AttackResult evaluate_attack(const Attacker& attacker, const AttackDataset& data) {
  data.validate();
  const std::vector<int> pred = attacker.predict(data);
  std::size_t tp = 0, fp = 0, fn = 0, hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    hits += pred[i] == data.labels[i];
    if (pred[i] == 1 && data.labels[i] == 1) ++tp;
    if (pred[i] == 1 && data.labels[i] == 0) ++fp;
    if (pred[i] == 0 && data.labels[i] == 1) ++fn;
  }
  AttackResult r;
  r.f1 = tp == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
  r.false_negative_rate = static_cast<double>(fn) / static_cast<double>(tp + fn);
  r.accuracy = static_cast<double>(hits) / static_cast<double>(data.size());
  return r;
}

ShadowAttack train_shadow_attack(const data::Corpus& train, const models::ModelSpec& spec,
                                 std::shared_ptr<const models::Vocabulary> vocabulary, const MiaConfig& cfg,
                                 std::uint64_t seed) {
  if (!(cfg.shadow_fraction > 0.0 && cfg.shadow_fraction <= 0.5)) {
    throw std::invalid_argument("mia: shadow fraction must lie in (0, 0.5]");
  }
  const auto count = static_cast<std::size_t>(std::llround(cfg.shadow_fraction * static_cast<double>(train.size())));
  if (count == 0 || 2 * count > train.size()) throw std::invalid_argument("mia: training corpus too small for a shadow split");
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(util::derive_seed(seed, util::stage::kAttack, 0));
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> in(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
  std::vector<std::size_t> out(order.begin() + static_cast<std::ptrdiff_t>(count),
                               order.begin() + static_cast<std::ptrdiff_t>(2 * count));
  std::sort(in.begin(), in.end());
  std::sort(out.begin(), out.end());
  std::vector<std::string> in_ids, out_ids;
  for (std::size_t i : in) in_ids.push_back(train[i].id);
  for (std::size_t i : out) out_ids.push_back(train[i].id);
  const data::Corpus members = train.select(in_ids, "shadow members");
  const data::Corpus nonmembers = train.select(out_ids, "shadow non-members");

  auto shadow = models::train_supervised(spec, std::move(vocabulary), members, cfg.shadow_train,
                                         util::derive_seed(seed, util::stage::kAttack, 1));
  if (shadow.diverged) throw std::runtime_error("mia: shadow training diverged");
  const AttackDataset data = attack_dataset(models::score(shadow.model, members), models::score(shadow.model, nonmembers));
  Attacker attacker = Attacker::train(data, cfg.attacker);
  return ShadowAttack{std::move(shadow.model), std::move(attacker), std::move(in_ids), std::move(out_ids)};
}

AttackResult mia_run(const ShadowAttack& attack, const models::Scores& members, const models::Scores& nonmembers) {
  return evaluate_attack(attack.attacker, attack_dataset(members, nonmembers));
}

AttackResult mia_run(const ShadowAttack& attack, const models::Model& target, const data::Corpus& members,
                     const data::Corpus& nonmembers) {
  for (const auto& inst : members) {
    if (nonmembers.contains(inst.id)) throw std::invalid_argument("mia: id '" + inst.id + "' is both member and non-member");
  }
  return mia_run(attack, models::score(target, members), models::score(target, nonmembers));
}

}  // namespace kga::eval
