#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "kga/data/corpus.hpp"
#include "kga/models/model.hpp"
#include "kga/models/network.hpp"
#include "kga/models/training.hpp"

namespace kga::eval {

inline constexpr std::size_t kTopK = 5;
/// Sorted top-k probabilities (zero-padded), entropy, gold log-probability.
inline constexpr std::size_t kFeatureWidth = kTopK + 2;

/// Black-box features of one instance. Generative instances average each
/// feature over their output rows; the gold term is the mean gold-token
/// log-probability.
std::vector<double> attack_features(const models::Scores& s, std::size_t instance);

/// Feature rows labeled 1 (member) or 0 (non-member).
struct AttackDataset {
  std::vector<std::vector<double>> features;
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }
  /// Throws std::invalid_argument for mismatched or ragged rows and for
  /// data holding a single class.
  void validate() const;
};

/// Members first, then non-members.
AttackDataset attack_dataset(const models::Scores& members, const models::Scores& nonmembers);

struct AttackerConfig {
  std::size_t steps = 300;
  double learning_rate = 0.05;
};

/// Two-class softmax regression over standardized features, fit by
/// full-batch Adam from zero weights.
class Attacker {
 public:
  static Attacker train(const AttackDataset& data, const AttackerConfig& cfg);

  double member_probability(std::span<const double> features) const;
  /// 1 where the member probability exceeds one half.
  std::vector<int> predict(const AttackDataset& data) const;

 private:
  std::vector<double> mean_;
  std::vector<double> scale_;
  std::vector<double> weights_;  // kFeatureWidth x 2, row-major
  std::vector<double> bias_;     // 2
};

struct AttackResult {
  double f1 = 0.0;                   // on the member class
  double false_negative_rate = 0.0;  // members predicted as non-members
  double accuracy = 0.0;
};

AttackResult evaluate_attack(const Attacker& attacker, const AttackDataset& data);

struct MiaConfig {
  double shadow_fraction = 0.3;
  models::TrainConfig shadow_train;
  AttackerConfig attacker;
};

/// A shadow model trained on a random share of the original training data
/// and the attacker fit on its outputs: the shadow's training instances are
/// members, an equal number of other training instances are non-members.
struct ShadowAttack {
  models::Model shadow;
  Attacker attacker;
  std::vector<std::string> member_ids;
  std::vector<std::string> nonmember_ids;
};

/// Throws std::invalid_argument when the fraction leaves no room for an
/// equal-sized non-member sample.
ShadowAttack train_shadow_attack(const data::Corpus& train, const models::ModelSpec& spec,
                                 std::shared_ptr<const models::Vocabulary> vocabulary, const MiaConfig& cfg,
                                 std::uint64_t seed);

/// Attack on a target's precomputed outputs for members and non-members.
AttackResult mia_run(const ShadowAttack& attack, const models::Scores& members, const models::Scores& nonmembers);

/// Throws std::invalid_argument when the two corpora share an id.
AttackResult mia_run(const ShadowAttack& attack, const models::Model& target, const data::Corpus& members,
                     const data::Corpus& nonmembers);

}  // namespace kga::eval
