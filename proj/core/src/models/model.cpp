#include "kga/models/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace kga::models {

using gradkit::DenseArray;

const char* architecture_name(Architecture a) noexcept {
  switch (a) {
    case Architecture::kClassifier: return "classifier";
    case Architecture::kRecurrent: return "recurrent";
    case Architecture::kAttention: return "attention";
  }
  return "?";
}

Architecture parse_architecture(std::string_view name) {
  if (name == "classifier") return Architecture::kClassifier;
  if (name == "recurrent") return Architecture::kRecurrent;
  if (name == "attention") return Architecture::kAttention;
  throw std::invalid_argument("unknown architecture '" + std::string(name) + "'");
}

void ModelSpec::validate() const {
  if (embedding == 0 || hidden == 0) throw std::invalid_argument("model spec: widths must be positive");
  if (max_positions < 2) throw std::invalid_argument("model spec: position cap must be at least 2");
}

Model::Model(ModelSpec spec, std::shared_ptr<const Vocabulary> vocabulary, std::vector<std::string> names,
             std::vector<DenseArray> parameters, std::uint64_t seed)
    : spec_(spec),
      vocabulary_(std::move(vocabulary)),
      names_(std::move(names)),
      parameters_(std::move(parameters)),
      seed_(seed) {
  if (!vocabulary_) throw std::invalid_argument("model: missing vocabulary");
  if (names_.size() != parameters_.size()) throw std::invalid_argument("model: names and parameters differ in count");
}

const DenseArray& Model::parameter(std::string_view name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw std::out_of_range("model: no parameter '" + std::string(name) + "'");
  return parameters_[static_cast<std::size_t>(it - names_.begin())];
}

std::size_t Model::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : parameters_) n += p.size();
  return n;
}

std::size_t Model::support_size() const {
  return spec_.generative() ? vocabulary_->size() : vocabulary_->label_count();
}

bool Model::same_support(const Model& other) const {
  return spec_.generative() == other.spec_.generative() && vocabulary_->hash() == other.vocabulary_->hash() &&
         support_size() == other.support_size();
}

namespace {

class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : rng_(seed) {}

  void glorot(std::string name, std::size_t in, std::size_t out) {
    add(std::move(name), in, out, std::sqrt(6.0 / static_cast<double>(in + out)));
  }
  void embedding(std::string name, std::size_t rows, std::size_t width) {
    add(std::move(name), rows, width, std::sqrt(3.0 / static_cast<double>(width)));
  }
  void zeros(std::string name, std::size_t rows, std::size_t cols) {
    names.push_back(std::move(name));
    params.push_back(DenseArray::matrix(rows, cols));
  }
  void output(std::string name, std::size_t in, std::size_t out, OutputInit mode) {
    if (mode == OutputInit::kZero) {
      zeros(std::move(name), in, out);
    } else {
      glorot(std::move(name), in, out);
    }
  }

  std::vector<std::string> names;
  std::vector<DenseArray> params;

 private:
  void add(std::string name, std::size_t rows, std::size_t cols, double limit) {
    std::uniform_real_distribution<double> u(-limit, limit);
    DenseArray a = DenseArray::matrix(rows, cols);
    for (double& v : a.data()) v = u(rng_);
    names.push_back(std::move(name));
    params.push_back(std::move(a));
  }

  std::mt19937_64 rng_;
};

}  // namespace

Model initialize(const ModelSpec& spec, std::shared_ptr<const Vocabulary> vocabulary, std::uint64_t seed,
                 OutputInit output) {
  spec.validate();
  if (!vocabulary) throw std::invalid_argument("initialize: missing vocabulary");
  const std::size_t v = vocabulary->size();
  const std::size_t e = spec.embedding;
  const std::size_t h = spec.hidden;
  Initializer init(seed);
  switch (spec.architecture) {
    case Architecture::kClassifier: {
      const std::size_t k = vocabulary->label_count();
      if (k < 2) throw std::invalid_argument("initialize: classifier needs at least 2 labels");
      init.embedding("embedding", v, e);
      init.glorot("hidden_w", e, h);
      init.zeros("hidden_b", 1, h);
      init.output("output_w", h, k, output);
      init.zeros("output_b", 1, k);
      break;
    }
    case Architecture::kRecurrent:
      init.embedding("embedding", v, e);
      init.glorot("encoder_wx", e, h);
      init.glorot("encoder_wh", h, h);
      init.zeros("encoder_b", 1, h);
      init.glorot("decoder_wx", e, h);
      init.glorot("decoder_wh", h, h);
      init.zeros("decoder_b", 1, h);
      init.glorot("combine_w", 2 * h, h);
      init.zeros("combine_b", 1, h);
      init.output("output_w", h, v, output);
      init.zeros("output_b", 1, v);
      break;
    case Architecture::kAttention:
      // Model width is the embedding width; `hidden` sizes the feed-forward blocks.
      init.embedding("embedding", v, e);
      init.embedding("position", spec.max_positions, e);
      for (const char* block : {"encoder_self", "decoder_self", "decoder_cross"}) {
        for (const char* m : {"_q", "_k", "_v"}) init.glorot(std::string(block) + m, e, e);
      }
      for (const char* side : {"encoder", "decoder"}) {
        init.glorot(std::string(side) + "_ff1_w", e, h);
        init.zeros(std::string(side) + "_ff1_b", 1, h);
        init.glorot(std::string(side) + "_ff2_w", h, e);
        init.zeros(std::string(side) + "_ff2_b", 1, e);
      }
      init.output("output_w", e, v, output);
      init.zeros("output_b", 1, v);
      break;
  }
  return Model(spec, std::move(vocabulary), std::move(init.names), std::move(init.params), seed);
}

EncodedInstance encode(const Model& model, const data::Instance& instance) {
  const Vocabulary& vocab = model.vocabulary();
  const std::size_t cap = model.spec().max_positions;
  EncodedInstance enc;
  if (!model.spec().generative()) {
    if (instance.kind() != data::PayloadKind::kClassification) {
      throw std::invalid_argument("encode: instance '" + instance.id + "' is not a labeled text");
    }
    enc.source = vocab.encode(instance.text().tokens);
    if (enc.source.empty()) enc.source.push_back(Vocabulary::kUnknown);
    enc.gold.push_back(vocab.label_id(instance.text().label));
    return enc;
  }
  if (instance.kind() != data::PayloadKind::kSeq2Seq) {
    throw std::invalid_argument("encode: instance '" + instance.id + "' is not a source/target pair");
  }
  const auto& pair = instance.pair();
  if (pair.source.size() + 1 > cap || pair.target.size() + 1 > cap) {
    throw std::invalid_argument("encode: instance '" + instance.id + "' exceeds the position cap of " +
                                std::to_string(cap));
  }
  enc.source = vocab.encode(pair.source);
  enc.source.push_back(Vocabulary::kEos);
  const auto target = vocab.encode(pair.target);
  enc.decoder_input.push_back(Vocabulary::kBos);
  enc.decoder_input.insert(enc.decoder_input.end(), target.begin(), target.end());
  enc.gold = target;
  enc.gold.push_back(Vocabulary::kEos);
  return enc;
}

}  // namespace kga::models
