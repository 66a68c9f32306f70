#include "kga/models/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "kga/util/parallel.hpp"

namespace kga::models {

using gradkit::Axis;
using gradkit::DenseArray;
using gradkit::Graph;
using gradkit::NodeId;

namespace {

constexpr double kMasked = -1e9;
constexpr std::size_t kScoreChunk = 32;

class ParamNodes {
 public:
  ParamNodes(Graph& g, const Model& model) {
    const auto params = model.parameters();
    const auto& names = model.parameter_names();
    for (std::size_t i = 0; i < params.size(); ++i) {
      nodes_.emplace(names[i], g.parameter(i, params[i].rows(), params[i].cols()));
    }
  }
  NodeId operator[](const std::string& name) const {
    auto it = nodes_.find(name);
    if (it == nodes_.end()) throw std::logic_error("model has no parameter '" + name + "'");
    return it->second;
  }

 private:
  std::unordered_map<std::string, NodeId> nodes_;
};

NodeId affine(Graph& g, NodeId x, NodeId w, NodeId b) { return g.add(g.matmul(x, w), b); }

// Additive attention mask: query row r may see key column c when both belong
// to the same instance and, for causal masks, the key position is not later.
DenseArray block_mask(const std::vector<std::size_t>& row_owner, const std::vector<std::size_t>& row_pos,
                      const std::vector<std::size_t>& col_owner, const std::vector<std::size_t>& col_pos, bool causal) {
  DenseArray m = DenseArray::matrix(row_owner.size(), col_owner.size(), kMasked);
  for (std::size_t r = 0; r < row_owner.size(); ++r) {
    for (std::size_t c = 0; c < col_owner.size(); ++c) {
      if (row_owner[r] == col_owner[c] && (!causal || col_pos[c] <= row_pos[r])) m(r, c) = 0.0;
    }
  }
  return m;
}

// Packs variable-length id lists end to end, recording owner and position of each row.
struct Packed {
  std::vector<std::size_t> ids;
  std::vector<std::size_t> owner;
  std::vector<std::size_t> position;
  std::vector<std::size_t> offsets{0};
};

template <class Get>
Packed pack(std::span<const EncodedInstance> batch, Get get) {
  Packed p;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const std::vector<std::size_t>& seq = get(batch[i]);
    for (std::size_t t = 0; t < seq.size(); ++t) {
      p.ids.push_back(seq[t]);
      p.owner.push_back(i);
      p.position.push_back(t);
    }
    p.offsets.push_back(p.ids.size());
  }
  return p;
}

NodeId classifier(Graph& g, const ParamNodes& p, std::span<const EncodedInstance> batch) {
  const Packed src = pack(batch, [](const EncodedInstance& e) -> const auto& { return e.source; });
  const NodeId tokens = g.row_lookup(p["embedding"], src.ids);
  const NodeId pooled = g.segment_mean(tokens, src.offsets);
  const NodeId hidden = g.tanh(affine(g, pooled, p["hidden_w"], p["hidden_b"]));
  return g.log_softmax(affine(g, hidden, p["output_w"], p["output_b"]));
}

// Runs a masked Elman recurrence over time-major inputs and returns the
// state after every step. Rows whose sequence has ended keep their state.
std::vector<NodeId> recur(Graph& g, const ParamNodes& p, const std::string& side,
                          const std::vector<std::vector<std::size_t>>& seqs, std::size_t hidden,
                          std::optional<NodeId> initial) {
  const std::size_t b = seqs.size();
  std::size_t steps = 0;
  for (const auto& s : seqs) steps = std::max(steps, s.size());
  std::vector<NodeId> states;
  states.reserve(steps);
  std::optional<NodeId> h = initial;
  for (std::size_t t = 0; t < steps; ++t) {
    std::vector<std::size_t> ids(b, Vocabulary::kPad);
    DenseArray mask = DenseArray::matrix(b, 1, 1.0);
    bool ragged = false;
    for (std::size_t i = 0; i < b; ++i) {
      if (t < seqs[i].size()) {
        ids[i] = seqs[i][t];
      } else {
        mask[i] = 0.0;
        ragged = true;
      }
    }
    const NodeId x = g.matmul(g.row_lookup(p["embedding"], std::move(ids)), p[side + "_wx"]);
    NodeId pre = g.add(x, p[side + "_b"]);
    if (h) pre = g.add(pre, g.matmul(*h, p[side + "_wh"]));
    NodeId next = g.tanh(pre);
    if (ragged) {
      const NodeId prev = h ? *h : g.constant(DenseArray::matrix(b, hidden));
      next = g.add(prev, g.mul(g.sub(next, prev), g.constant(std::move(mask))));
    }
    h = next;
    states.push_back(next);
  }
  return states;
}

// Instance-major row indices into a time-major stack of per-step states.
std::vector<std::size_t> instance_major_rows(const std::vector<std::vector<std::size_t>>& seqs) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    for (std::size_t t = 0; t < seqs[i].size(); ++t) rows.push_back(t * seqs.size() + i);
  }
  return rows;
}

NodeId recurrent(Graph& g, const ParamNodes& p, const Model& model, std::span<const EncodedInstance> batch) {
  const std::size_t hidden = model.spec().hidden;
  std::vector<std::vector<std::size_t>> sources;
  std::vector<std::vector<std::size_t>> inputs;
  for (const auto& e : batch) {
    sources.push_back(e.source);
    inputs.push_back(e.decoder_input);
  }
  const std::vector<NodeId> enc = recur(g, p, "encoder", sources, hidden, std::nullopt);
  const std::vector<NodeId> dec = recur(g, p, "decoder", inputs, hidden, enc.back());

  // Attention after the recurrence: every decoder state attends over the
  // encoder states of its own instance in one masked product.
  const NodeId enc_rows = g.row_lookup(g.concat(enc, Axis::kRows), instance_major_rows(sources));
  const NodeId dec_rows = g.row_lookup(g.concat(dec, Axis::kRows), instance_major_rows(inputs));
  const Packed src = pack(batch, [](const EncodedInstance& e) -> const auto& { return e.source; });
  const Packed tgt = pack(batch, [](const EncodedInstance& e) -> const auto& { return e.decoder_input; });
  const NodeId scores = g.add(g.matmul(dec_rows, g.transpose(enc_rows)),
                              g.constant(block_mask(tgt.owner, tgt.position, src.owner, src.position, false)));
  const NodeId context = g.matmul(g.softmax(scores), enc_rows);
  const std::vector<NodeId> parts{dec_rows, context};
  const NodeId combined = g.tanh(affine(g, g.concat(parts, Axis::kCols), p["combine_w"], p["combine_b"]));
  return g.log_softmax(affine(g, combined, p["output_w"], p["output_b"]));
}

NodeId attend(Graph& g, NodeId queries, NodeId keys, NodeId values, DenseArray mask, std::size_t width) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(width));
  const NodeId scores = g.add(g.scale(g.matmul(queries, g.transpose(keys)), scale), g.constant(std::move(mask)));
  return g.matmul(g.softmax(scores), values);
}

NodeId feed_forward(Graph& g, const ParamNodes& p, const std::string& side, NodeId x) {
  const NodeId inner = g.relu(affine(g, x, p[side + "_ff1_w"], p[side + "_ff1_b"]));
  return g.add(x, affine(g, inner, p[side + "_ff2_w"], p[side + "_ff2_b"]));
}

// All instances of the batch share one packed row block; block-diagonal
// masks keep attention inside each instance.
NodeId attention(Graph& g, const ParamNodes& p, const Model& model, std::span<const EncodedInstance> batch) {
  const std::size_t width = model.spec().embedding;
  const Packed src = pack(batch, [](const EncodedInstance& e) -> const auto& { return e.source; });
  const Packed tgt = pack(batch, [](const EncodedInstance& e) -> const auto& { return e.decoder_input; });

  auto embed = [&](const Packed& seq) {
    return g.add(g.row_lookup(p["embedding"], seq.ids), g.row_lookup(p["position"], seq.position));
  };
  auto self_block = [&](const std::string& name, NodeId x, DenseArray mask) {
    return g.add(x, attend(g, g.matmul(x, p[name + "_q"]), g.matmul(x, p[name + "_k"]), g.matmul(x, p[name + "_v"]),
                           std::move(mask), width));
  };

  NodeId enc = embed(src);
  enc = self_block("encoder_self", enc, block_mask(src.owner, src.position, src.owner, src.position, false));
  enc = feed_forward(g, p, "encoder", enc);

  NodeId dec = embed(tgt);
  dec = self_block("decoder_self", dec, block_mask(tgt.owner, tgt.position, tgt.owner, tgt.position, true));
  dec = g.add(dec, attend(g, g.matmul(dec, p["decoder_cross_q"]), g.matmul(enc, p["decoder_cross_k"]),
                          g.matmul(enc, p["decoder_cross_v"]),
                          block_mask(tgt.owner, tgt.position, src.owner, src.position, false), width));
  dec = feed_forward(g, p, "decoder", dec);
  return g.log_softmax(affine(g, dec, p["output_w"], p["output_b"]));
}

}  // namespace

RowLayout layout_of(std::span<const EncodedInstance> batch) {
  RowLayout layout;
  layout.offsets.push_back(0);
  for (const auto& e : batch) {
    layout.gold.insert(layout.gold.end(), e.gold.begin(), e.gold.end());
    layout.offsets.push_back(layout.gold.size());
  }
  return layout;
}

NodeId build_log_probs(Graph& graph, const Model& model, std::span<const EncodedInstance> batch) {
  if (batch.empty()) throw std::invalid_argument("build_log_probs: empty batch");
  const ParamNodes p(graph, model);
  switch (model.spec().architecture) {
    case Architecture::kClassifier: return classifier(graph, p, batch);
    case Architecture::kRecurrent: return recurrent(graph, p, model, batch);
    case Architecture::kAttention: return attention(graph, p, model, batch);
  }
  throw std::logic_error("build_log_probs: unknown architecture");
}

double Scores::gold_log_prob(std::size_t i) const {
  double total = 0.0;
  for (std::size_t r = layout.offsets.at(i); r < layout.offsets.at(i + 1); ++r) total += log_probs(r, layout.gold[r]);
  return total;
}

double Scores::mean_gold_log_prob(std::size_t i) const {
  const std::size_t n = layout.offsets.at(i + 1) - layout.offsets.at(i);
  return gold_log_prob(i) / static_cast<double>(n);
}

Scores score(const Model& model, std::span<const EncodedInstance> batch) {
  Scores s;
  s.layout = layout_of(batch);
  if (batch.empty()) {
    s.log_probs = DenseArray();
    return s;
  }
  Graph g;
  const NodeId out = build_log_probs(g, model, batch);
  const gradkit::Evaluation ev = gradkit::forward(g, gradkit::Bindings{{}, model.parameters()});
  s.log_probs = ev.value(out);
  return s;
}

std::vector<EncodedInstance> encode_all(const Model& model, std::span<const data::Instance* const> instances) {
  std::vector<EncodedInstance> out;
  out.reserve(instances.size());
  for (const data::Instance* inst : instances) out.push_back(encode(model, *inst));
  return out;
}

Scores score(const Model& model, std::span<const data::Instance* const> instances) {
  const std::vector<EncodedInstance> encoded = encode_all(model, instances);
  const std::size_t chunks = (encoded.size() + kScoreChunk - 1) / kScoreChunk;
  const std::vector<Scores> parts = util::ordered_map(chunks, [&](std::size_t c) {
    const std::size_t begin = c * kScoreChunk;
    const std::size_t end = std::min(encoded.size(), begin + kScoreChunk);
    return score(model, std::span<const EncodedInstance>(encoded).subspan(begin, end - begin));
  });
  Scores all;
  all.layout = layout_of(encoded);
  if (encoded.empty()) return all;
  const std::size_t support = parts.front().log_probs.cols();
  std::vector<double> data;
  data.reserve(all.layout.rows() * support);
  for (const Scores& part : parts) data.insert(data.end(), part.log_probs.data().begin(), part.log_probs.data().end());
  all.log_probs = DenseArray({all.layout.rows(), support}, std::move(data));
  return all;
}

Scores score(const Model& model, const data::Corpus& corpus) {
  const std::vector<const data::Instance*> ptrs = corpus.pointers();
  return score(model, std::span<const data::Instance* const>(ptrs));
}

}  // namespace kga::models
