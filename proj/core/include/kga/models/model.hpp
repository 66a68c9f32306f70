#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "kga/data/corpus.hpp"
#include "kga/gradkit/dense_array.hpp"
#include "kga/models/vocabulary.hpp"

namespace kga::models {

/// kClassifier: mean-pooled embeddings, one tanh hidden layer, softmax over
/// labels. kRecurrent: Elman encoder/decoder with dot-product attention.
/// kAttention: single-layer self-attention encoder/decoder.
enum class Architecture { kClassifier, kRecurrent, kAttention };

const char* architecture_name(Architecture a) noexcept;
/// Throws std::invalid_argument for an unknown name.
Architecture parse_architecture(std::string_view name);

struct ModelSpec {
  Architecture architecture = Architecture::kClassifier;
  std::size_t embedding = 32;
  std::size_t hidden = 32;
  std::size_t max_positions = 64;  // cap on encoded source and target lengths

  bool generative() const noexcept { return architecture != Architecture::kClassifier; }
  void validate() const;
  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// A parameter vector plus the architecture and vocabulary that give it
/// meaning. Plain value type: copies are independent, and a const Model is
/// safe to read from several threads.
class Model {
 public:
  Model() = default;
  Model(ModelSpec spec, std::shared_ptr<const Vocabulary> vocabulary, std::vector<std::string> names,
        std::vector<gradkit::DenseArray> parameters, std::uint64_t seed);

  const ModelSpec& spec() const noexcept { return spec_; }
  const Vocabulary& vocabulary() const { return *vocabulary_; }
  const std::shared_ptr<const Vocabulary>& shared_vocabulary() const noexcept { return vocabulary_; }
  std::uint64_t seed() const noexcept { return seed_; }

  const std::vector<std::string>& parameter_names() const noexcept { return names_; }
  std::span<const gradkit::DenseArray> parameters() const noexcept { return parameters_; }
  std::span<gradkit::DenseArray> mutable_parameters() noexcept { return parameters_; }
  const gradkit::DenseArray& parameter(std::string_view name) const;
  std::size_t parameter_count() const noexcept;  // total scalar entries

  /// Labels for a classifier, vocabulary size for a generative model.
  std::size_t support_size() const;
  /// True when both models give distributions over the same support.
  bool same_support(const Model& other) const;

  friend bool operator==(const Model& a, const Model& b) {
    return a.spec_ == b.spec_ && a.names_ == b.names_ && a.parameters_ == b.parameters_ &&
           a.seed_ == b.seed_ && *a.vocabulary_ == *b.vocabulary_;
  }

 private:
  ModelSpec spec_;
  std::shared_ptr<const Vocabulary> vocabulary_;
  std::vector<std::string> names_;
  std::vector<gradkit::DenseArray> parameters_;
  std::uint64_t seed_ = 0;
};

/// How the final projection onto the output support is initialized. Zero
/// makes an untrained model output the uniform distribution; random gives a
/// non-trivial untrained model (used as the bad teacher).
enum class OutputInit { kZero, kRandom };

/// Fresh parameters drawn from `seed`.
Model initialize(const ModelSpec& spec, std::shared_ptr<const Vocabulary> vocabulary, std::uint64_t seed,
                 OutputInit output = OutputInit::kZero);

/// Token ids for one instance under a model's vocabulary.
///
/// Classifier: `source` holds the text ids (a lone unknown id for empty
/// text) and `gold` the label id. Generative: `source` is the source ids
/// followed by the end token, `decoder_input` is the start token followed by
/// the target ids, and `gold` is the target ids followed by the end token.
struct EncodedInstance {
  std::vector<std::size_t> source;
  std::vector<std::size_t> decoder_input;
  std::vector<std::size_t> gold;
};

/// Throws std::invalid_argument when the payload kind does not fit the
/// architecture, the label is outside the vocabulary, or a side exceeds the
/// position cap.
EncodedInstance encode(const Model& model, const data::Instance& instance);

}  // namespace kga::models
