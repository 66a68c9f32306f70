#include "kga/gradkit/graph.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace kga::gradkit {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

ConstMap view(const DenseArray& a) { return {a.data().data(), static_cast<Eigen::Index>(a.rows()), static_cast<Eigen::Index>(a.cols())}; }
MutMap view(DenseArray& a) { return {a.data().data(), static_cast<Eigen::Index>(a.rows()), static_cast<Eigen::Index>(a.cols())}; }

enum class Broadcast { kSame, kRow, kCol, kScalar };

Broadcast broadcast_kind(std::size_t ar, std::size_t ac, std::size_t br, std::size_t bc) {
  if (ar == br && ac == bc) return Broadcast::kSame;
  if (br == 1 && bc == 1) return Broadcast::kScalar;
  if (br == 1 && bc == ac) return Broadcast::kRow;
  if (bc == 1 && br == ar) return Broadcast::kCol;
  throw ShapeError("incompatible operand shapes");
}

inline std::size_t b_index(Broadcast kind, std::size_t r, std::size_t c, std::size_t cols) {
  switch (kind) {
    case Broadcast::kSame: return r * cols + c;
    case Broadcast::kRow: return c;
    case Broadcast::kCol: return r;
    case Broadcast::kScalar: return 0;
  }
  return 0;
}

std::string describe(std::size_t index, Op op) {
  return "node " + std::to_string(index) + " (" + op_name(op) + ")";
}

std::string shape_text(std::size_t r, std::size_t c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

void softmax_rows(const DenseArray& x, DenseArray& y, bool log_space) {
  const std::size_t cols = x.cols();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto in = x.row(r);
    auto out = y.row(r);
    const double peak = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) total += std::exp(in[c] - peak);
    const double log_total = std::log(total);
    for (std::size_t c = 0; c < cols; ++c) {
      const double shifted = in[c] - peak - log_total;
      out[c] = log_space ? shifted : std::exp(shifted);
    }
  }
}

}  // namespace

const char* op_name(Op op) noexcept {
  switch (op) {
    case Op::kInput: return "input";
    case Op::kParameter: return "parameter";
    case Op::kConstant: return "constant";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kScale: return "scale";
    case Op::kMatMul: return "matmul";
    case Op::kTranspose: return "transpose";
    case Op::kConcat: return "concat";
    case Op::kRowLookup: return "row_lookup";
    case Op::kSegmentMean: return "segment_mean";
    case Op::kTanh: return "tanh";
    case Op::kSigmoid: return "sigmoid";
    case Op::kRelu: return "relu";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kAbs: return "abs";
    case Op::kSoftmax: return "softmax";
    case Op::kLogSoftmax: return "log_softmax";
    case Op::kSum: return "sum";
    case Op::kMean: return "mean";
    case Op::kRowSum: return "row_sum";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Construction

NodeId Graph::push(Node node) {
  nodes_.push_back(std::move(node));
  return NodeId{nodes_.size() - 1};
}

const Graph::Node& Graph::checked(NodeId id, const char* where) const {
  if (id.index >= nodes_.size()) {
    throw ShapeError(std::string(where) + ": operand node " + std::to_string(id.index) +
                     " does not exist (graph has " + std::to_string(nodes_.size()) + " nodes)");
  }
  return nodes_[id.index];
}

NodeId Graph::input(std::string name, std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) {
    throw ShapeError("node " + std::to_string(nodes_.size()) + " (input '" + name + "'): empty shape");
  }
  Node node{.op = Op::kInput, .rows = rows, .cols = cols};
  node.name = std::move(name);
  return push(std::move(node));
}

NodeId Graph::parameter(std::size_t slot, std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) {
    throw ShapeError(describe(nodes_.size(), Op::kParameter) + ": empty shape");
  }
  parameter_slots_ = std::max(parameter_slots_, slot + 1);
  return push(Node{.op = Op::kParameter, .rows = rows, .cols = cols, .slot = slot});
}

NodeId Graph::constant(DenseArray value) {
  if (value.rank() != 2) {
    throw ShapeError(describe(nodes_.size(), Op::kConstant) + ": graph values must be rank 2");
  }
  Node node{.op = Op::kConstant, .rows = value.rows(), .cols = value.cols(), .slot = constants_.size()};
  constants_.push_back(std::move(value));
  return push(std::move(node));
}

NodeId Graph::binary(Op op, NodeId a, NodeId b) {
  const Node& na = checked(a, op_name(op));
  const Node& nb = checked(b, op_name(op));
  try {
    broadcast_kind(na.rows, na.cols, nb.rows, nb.cols);
  } catch (const ShapeError&) {
    throw ShapeError(describe(nodes_.size(), op) + ": cannot combine " + shape_text(na.rows, na.cols) +
                     " with " + shape_text(nb.rows, nb.cols));
  }
  return push(Node{.op = op, .rows = na.rows, .cols = na.cols, .inputs = {a.index, b.index}});
}

NodeId Graph::unary(Op op, NodeId a) {
  const Node& na = checked(a, op_name(op));
  return push(Node{.op = op, .rows = na.rows, .cols = na.cols, .inputs = {a.index}});
}

NodeId Graph::add(NodeId a, NodeId b) { return binary(Op::kAdd, a, b); }
NodeId Graph::sub(NodeId a, NodeId b) { return binary(Op::kSub, a, b); }
NodeId Graph::mul(NodeId a, NodeId b) { return binary(Op::kMul, a, b); }

NodeId Graph::scale(NodeId a, double factor) {
  NodeId id = unary(Op::kScale, a);
  nodes_[id.index].scalar = factor;
  return id;
}

NodeId Graph::matmul(NodeId a, NodeId b) {
  const Node& na = checked(a, "matmul");
  const Node& nb = checked(b, "matmul");
  if (na.cols != nb.rows) {
    throw ShapeError(describe(nodes_.size(), Op::kMatMul) + ": inner dimensions differ, " +
                     shape_text(na.rows, na.cols) + " times " + shape_text(nb.rows, nb.cols));
  }
  return push(Node{.op = Op::kMatMul, .rows = na.rows, .cols = nb.cols, .inputs = {a.index, b.index}});
}

NodeId Graph::transpose(NodeId a) {
  const Node& na = checked(a, "transpose");
  return push(Node{.op = Op::kTranspose, .rows = na.cols, .cols = na.rows, .inputs = {a.index}});
}

NodeId Graph::concat(std::span<const NodeId> parts, Axis axis) {
  if (parts.empty()) {
    throw ShapeError(describe(nodes_.size(), Op::kConcat) + ": no operands");
  }
  Node node{.op = Op::kConcat};
  node.scalar = axis == Axis::kRows ? 0.0 : 1.0;
  const Node& first = checked(parts.front(), "concat");
  node.rows = axis == Axis::kRows ? 0 : first.rows;
  node.cols = axis == Axis::kCols ? 0 : first.cols;
  for (NodeId part : parts) {
    const Node& np = checked(part, "concat");
    if (axis == Axis::kRows) {
      if (np.cols != first.cols) {
        throw ShapeError(describe(nodes_.size(), Op::kConcat) + ": row concat needs equal column counts, got " +
                         std::to_string(np.cols) + " and " + std::to_string(first.cols));
      }
      node.rows += np.rows;
    } else {
      if (np.rows != first.rows) {
        throw ShapeError(describe(nodes_.size(), Op::kConcat) + ": column concat needs equal row counts, got " +
                         std::to_string(np.rows) + " and " + std::to_string(first.rows));
      }
      node.cols += np.cols;
    }
    node.inputs.push_back(part.index);
  }
  return push(std::move(node));
}

NodeId Graph::row_lookup(NodeId table, std::vector<std::size_t> rows) {
  const Node& nt = checked(table, "row_lookup");
  if (rows.empty()) {
    throw ShapeError(describe(nodes_.size(), Op::kRowLookup) + ": empty index list");
  }
  for (std::size_t r : rows) {
    if (r >= nt.rows) {
      throw ShapeError(describe(nodes_.size(), Op::kRowLookup) + ": row " + std::to_string(r) +
                       " out of range for table with " + std::to_string(nt.rows) + " rows");
    }
  }
  const std::size_t count = rows.size();
  return push(Node{.op = Op::kRowLookup, .rows = count, .cols = nt.cols, .inputs = {table.index},
                   .indices = std::move(rows)});
}

NodeId Graph::segment_mean(NodeId a, std::vector<std::size_t> offsets) {
  const Node& na = checked(a, "segment_mean");
  if (offsets.size() < 2 || offsets.front() != 0 || offsets.back() != na.rows) {
    throw ShapeError(describe(nodes_.size(), Op::kSegmentMean) + ": offsets must run from 0 to " +
                     std::to_string(na.rows));
  }
  for (std::size_t i = 1; i < offsets.size(); ++i) {
    if (offsets[i] <= offsets[i - 1]) {
      throw ShapeError(describe(nodes_.size(), Op::kSegmentMean) + ": empty or decreasing segment at " +
                       std::to_string(i - 1));
    }
  }
  const std::size_t groups = offsets.size() - 1;
  return push(Node{.op = Op::kSegmentMean, .rows = groups, .cols = na.cols, .inputs = {a.index},
                   .indices = std::move(offsets)});
}

NodeId Graph::tanh(NodeId a) { return unary(Op::kTanh, a); }
NodeId Graph::sigmoid(NodeId a) { return unary(Op::kSigmoid, a); }
NodeId Graph::relu(NodeId a) { return unary(Op::kRelu, a); }
NodeId Graph::exp(NodeId a) { return unary(Op::kExp, a); }
NodeId Graph::log(NodeId a) { return unary(Op::kLog, a); }
NodeId Graph::abs(NodeId a) { return unary(Op::kAbs, a); }
NodeId Graph::softmax(NodeId a) { return unary(Op::kSoftmax, a); }
NodeId Graph::log_softmax(NodeId a) { return unary(Op::kLogSoftmax, a); }

NodeId Graph::sum(NodeId a) {
  checked(a, "sum");
  return push(Node{.op = Op::kSum, .rows = 1, .cols = 1, .inputs = {a.index}});
}

NodeId Graph::mean(NodeId a) {
  checked(a, "mean");
  return push(Node{.op = Op::kMean, .rows = 1, .cols = 1, .inputs = {a.index}});
}

NodeId Graph::row_sum(NodeId a) {
  const Node& na = checked(a, "row_sum");
  return push(Node{.op = Op::kRowSum, .rows = na.rows, .cols = 1, .inputs = {a.index}});
}

// ---------------------------------------------------------------------------
// Forward

Evaluation forward(const Graph& graph, const Bindings& bindings) {
  Evaluation eval;
  eval.graph_ = &graph;
  eval.values_.resize(graph.size());
  eval.refs_.resize(graph.size(), nullptr);
  if (bindings.parameters.size() < graph.parameter_slots()) {
    throw std::invalid_argument("forward: graph references " + std::to_string(graph.parameter_slots()) +
                                " parameter slots but " + std::to_string(bindings.parameters.size()) +
                                " are bound");
  }
  for (const DenseArray& p : bindings.parameters) eval.parameter_shapes_.push_back(p.shape());

  auto& refs = eval.refs_;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const Graph::Node& node = graph.node(NodeId{i});
    auto in = [&](std::size_t k) -> const DenseArray& { return *refs[node.inputs[k]]; };
    DenseArray& out = eval.values_[i];
    refs[i] = &out;
    switch (node.op) {
      case Op::kInput: {
        auto it = bindings.inputs.find(node.name);
        if (it == bindings.inputs.end()) {
          throw std::invalid_argument("forward: " + describe(i, node.op) + " '" + node.name + "' is not bound");
        }
        if (it->second.rows() != node.rows || it->second.cols() != node.cols || it->second.rank() != 2) {
          throw std::invalid_argument("forward: " + describe(i, node.op) + " '" + node.name + "' expects " +
                                      shape_text(node.rows, node.cols));
        }
        out = it->second;
        break;
      }
      case Op::kParameter: {
        const DenseArray& p = bindings.parameters[node.slot];
        if (p.rank() != 2 || p.rows() != node.rows || p.cols() != node.cols) {
          throw std::invalid_argument("forward: " + describe(i, node.op) + " slot " + std::to_string(node.slot) +
                                      " expects " + shape_text(node.rows, node.cols));
        }
        refs[i] = &p;
        continue;
      }
      case Op::kConstant:
        refs[i] = &graph.constant_value(node);
        continue;
      case Op::kAdd:
      case Op::kSub:
      case Op::kMul: {
        const DenseArray& a = in(0);
        const DenseArray& b = in(1);
        const Broadcast kind = broadcast_kind(a.rows(), a.cols(), b.rows(), b.cols());
        out = DenseArray::matrix(node.rows, node.cols);
        const std::size_t cols = node.cols;
        for (std::size_t r = 0; r < node.rows; ++r) {
          for (std::size_t c = 0; c < cols; ++c) {
            const double x = a[r * cols + c];
            const double y = b[b_index(kind, r, c, cols)];
            out[r * cols + c] = node.op == Op::kAdd ? x + y : node.op == Op::kSub ? x - y : x * y;
          }
        }
        break;
      }
      case Op::kScale: {
        out = in(0);
        for (double& x : out.data()) x *= node.scalar;
        break;
      }
      case Op::kMatMul: {
        out = DenseArray::matrix(node.rows, node.cols);
        view(out).noalias() = view(in(0)) * view(in(1));
        break;
      }
      case Op::kTranspose: {
        out = DenseArray::matrix(node.rows, node.cols);
        view(out) = view(in(0)).transpose();
        break;
      }
      case Op::kConcat: {
        out = DenseArray::matrix(node.rows, node.cols);
        std::size_t offset = 0;
        const bool by_rows = node.scalar == 0.0;
        for (std::size_t k = 0; k < node.inputs.size(); ++k) {
          const DenseArray& part = in(k);
          if (by_rows) {
            std::copy(part.data().begin(), part.data().end(), out.data().begin() + offset * node.cols);
            offset += part.rows();
          } else {
            for (std::size_t r = 0; r < node.rows; ++r) {
              std::copy(part.row(r).begin(), part.row(r).end(), out.row(r).begin() + offset);
            }
            offset += part.cols();
          }
        }
        break;
      }
      case Op::kRowLookup: {
        out = DenseArray::matrix(node.rows, node.cols);
        const DenseArray& table = in(0);
        for (std::size_t r = 0; r < node.rows; ++r) {
          const auto src = table.row(node.indices[r]);
          std::copy(src.begin(), src.end(), out.row(r).begin());
        }
        break;
      }
      case Op::kSegmentMean: {
        out = DenseArray::matrix(node.rows, node.cols);
        const DenseArray& a = in(0);
        for (std::size_t g = 0; g < node.rows; ++g) {
          const std::size_t lo = node.indices[g];
          const std::size_t hi = node.indices[g + 1];
          auto dst = out.row(g);
          for (std::size_t r = lo; r < hi; ++r) {
            const auto src = a.row(r);
            for (std::size_t c = 0; c < node.cols; ++c) dst[c] += src[c];
          }
          const double inv = 1.0 / static_cast<double>(hi - lo);
          for (double& x : dst) x *= inv;
        }
        break;
      }
      case Op::kTanh:
      case Op::kSigmoid:
      case Op::kRelu:
      case Op::kExp:
      case Op::kLog:
      case Op::kAbs: {
        out = in(0);
        for (double& x : out.data()) {
          switch (node.op) {
            case Op::kTanh: x = std::tanh(x); break;
            case Op::kSigmoid: x = 1.0 / (1.0 + std::exp(-x)); break;
            case Op::kRelu: x = x > 0.0 ? x : 0.0; break;
            case Op::kExp: x = std::exp(x); break;
            case Op::kLog: x = std::log(x); break;
            default: x = std::fabs(x); break;
          }
        }
        break;
      }
      case Op::kSoftmax:
      case Op::kLogSoftmax: {
        out = DenseArray::matrix(node.rows, node.cols);
        softmax_rows(in(0), out, node.op == Op::kLogSoftmax);
        break;
      }
      case Op::kSum:
      case Op::kMean: {
        double total = 0.0;
        for (double x : in(0).data()) total += x;
        if (node.op == Op::kMean) total /= static_cast<double>(in(0).size());
        out = DenseArray::scalar(total);
        break;
      }
      case Op::kRowSum: {
        const DenseArray& a = in(0);
        out = DenseArray::matrix(node.rows, 1);
        for (std::size_t r = 0; r < node.rows; ++r) {
          double total = 0.0;
          for (double x : a.row(r)) total += x;
          out[r] = total;
        }
        break;
      }
    }
    if (!out.all_finite()) {
      throw NonFiniteError(i, "forward: " + describe(i, node.op) + " produced a non-finite value");
    }
  }
  return eval;
}

// ---------------------------------------------------------------------------
// Backward

std::vector<DenseArray> backward(const Evaluation& evaluation, NodeId output, const std::optional<DenseArray>& seed) {
  const Graph& graph = evaluation.graph();
  if (output.index >= graph.size()) {
    throw std::invalid_argument("backward: output node " + std::to_string(output.index) + " does not exist");
  }
  const Graph::Node& out_node = graph.node(output);
  std::vector<DenseArray> grads(graph.size());
  if (seed) {
    if (seed->rows() != out_node.rows || seed->cols() != out_node.cols) {
      throw std::invalid_argument("backward: seed shape does not match output " +
                                  shape_text(out_node.rows, out_node.cols));
    }
    grads[output.index] = *seed;
  } else {
    if (out_node.rows != 1 || out_node.cols != 1) {
      throw std::invalid_argument("backward: output " + describe(output.index, out_node.op) + " is " +
                                  shape_text(out_node.rows, out_node.cols) + "; a seed is required for non-scalar outputs");
    }
    grads[output.index] = DenseArray::scalar(1.0);
  }

  std::vector<DenseArray> result;
  result.reserve(evaluation.parameter_count());
  for (std::size_t s = 0; s < evaluation.parameter_count(); ++s) {
    result.emplace_back(evaluation.parameter_shape(s), 0.0);
  }

  // A node needs a gradient only if some parameter leaf lies beneath it.
  std::vector<char> needs(output.index + 1, 0);
  for (std::size_t i = 0; i <= output.index; ++i) {
    const Graph::Node& n = graph.node(NodeId{i});
    needs[i] = n.op == Op::kParameter;
    for (std::size_t k : n.inputs) needs[i] = needs[i] || needs[k];
  }
  if (!needs[output.index]) return result;

  // Parameter leaves accumulate straight into the result.
  auto acc = [&](std::size_t id) -> DenseArray& {
    const Graph::Node& n = graph.node(NodeId{id});
    if (n.op == Op::kParameter) return result[n.slot];
    if (grads[id].empty()) grads[id] = DenseArray::matrix(n.rows, n.cols);
    return grads[id];
  };

  for (std::size_t i = output.index + 1; i-- > 0;) {
    if (grads[i].empty() || !needs[i]) continue;
    const Graph::Node& node = graph.node(NodeId{i});
    const DenseArray g = std::move(grads[i]);
    const DenseArray& y = evaluation.value(NodeId{i});
    auto x = [&](std::size_t k) -> const DenseArray& { return evaluation.value(NodeId{node.inputs[k]}); };

    switch (node.op) {
      case Op::kInput:
      case Op::kConstant:
        break;
      case Op::kParameter: {
        // Only reached when the output itself is a parameter leaf.
        auto dst = result[node.slot].data();
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += g[k];
        break;
      }
      case Op::kAdd:
      case Op::kSub:
      case Op::kMul: {
        const DenseArray& a = x(0);
        const DenseArray& b = x(1);
        const Broadcast kind = broadcast_kind(a.rows(), a.cols(), b.rows(), b.cols());
        const std::size_t cols = node.cols;
        const bool is_mul = node.op == Op::kMul;
        if (needs[node.inputs[0]]) {
          DenseArray& ga = acc(node.inputs[0]);
          for (std::size_t r = 0; r < node.rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
              const std::size_t ai = r * cols + c;
              ga[ai] += is_mul ? g[ai] * b[b_index(kind, r, c, cols)] : g[ai];
            }
          }
        }
        if (needs[node.inputs[1]]) {
          DenseArray& gb = acc(node.inputs[1]);
          const double sign = node.op == Op::kSub ? -1.0 : 1.0;
          for (std::size_t r = 0; r < node.rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
              const std::size_t ai = r * cols + c;
              gb[b_index(kind, r, c, cols)] += is_mul ? g[ai] * a[ai] : sign * g[ai];
            }
          }
        }
        break;
      }
      case Op::kScale: {
        DenseArray& ga = acc(node.inputs[0]);
        for (std::size_t k = 0; k < g.size(); ++k) ga[k] += node.scalar * g[k];
        break;
      }
      case Op::kMatMul: {
        const DenseArray& a = x(0);
        const DenseArray& b = x(1);
        if (needs[node.inputs[0]]) view(acc(node.inputs[0])).noalias() += view(g) * view(b).transpose();
        if (needs[node.inputs[1]]) view(acc(node.inputs[1])).noalias() += view(a).transpose() * view(g);
        break;
      }
      case Op::kTranspose: {
        view(acc(node.inputs[0])) += view(g).transpose();
        break;
      }
      case Op::kConcat: {
        const bool by_rows = node.scalar == 0.0;
        std::size_t offset = 0;
        for (std::size_t k = 0; k < node.inputs.size(); ++k) {
          const Graph::Node& part = graph.node(NodeId{node.inputs[k]});
          if (!needs[node.inputs[k]]) {
            offset += by_rows ? part.rows : part.cols;
            continue;
          }
          DenseArray& gp = acc(node.inputs[k]);
          if (by_rows) {
            for (std::size_t e = 0; e < part.rows * part.cols; ++e) gp[e] += g[offset * node.cols + e];
            offset += part.rows;
          } else {
            for (std::size_t r = 0; r < node.rows; ++r) {
              auto dst = gp.row(r);
              const auto src = g.row(r);
              for (std::size_t c = 0; c < part.cols; ++c) dst[c] += src[offset + c];
            }
            offset += part.cols;
          }
        }
        break;
      }
      case Op::kRowLookup: {
        DenseArray& gt = acc(node.inputs[0]);
        for (std::size_t r = 0; r < node.rows; ++r) {
          auto dst = gt.row(node.indices[r]);
          const auto src = g.row(r);
          for (std::size_t c = 0; c < node.cols; ++c) dst[c] += src[c];
        }
        break;
      }
      case Op::kSegmentMean: {
        DenseArray& ga = acc(node.inputs[0]);
        for (std::size_t s = 0; s < node.rows; ++s) {
          const std::size_t lo = node.indices[s];
          const std::size_t hi = node.indices[s + 1];
          const double inv = 1.0 / static_cast<double>(hi - lo);
          const auto src = g.row(s);
          for (std::size_t r = lo; r < hi; ++r) {
            auto dst = ga.row(r);
            for (std::size_t c = 0; c < node.cols; ++c) dst[c] += src[c] * inv;
          }
        }
        break;
      }
      case Op::kTanh:
      case Op::kSigmoid:
      case Op::kRelu:
      case Op::kExp:
      case Op::kLog:
      case Op::kAbs: {
        const DenseArray& a = x(0);
        DenseArray& ga = acc(node.inputs[0]);
        for (std::size_t k = 0; k < g.size(); ++k) {
          double d = 0.0;
          switch (node.op) {
            case Op::kTanh: d = 1.0 - y[k] * y[k]; break;
            case Op::kSigmoid: d = y[k] * (1.0 - y[k]); break;
            case Op::kRelu: d = a[k] > 0.0 ? 1.0 : 0.0; break;
            case Op::kExp: d = y[k]; break;
            case Op::kLog: d = 1.0 / a[k]; break;
            default: d = a[k] > 0.0 ? 1.0 : (a[k] < 0.0 ? -1.0 : 0.0); break;
          }
          ga[k] += g[k] * d;
        }
        break;
      }
      case Op::kSoftmax: {
        DenseArray& ga = acc(node.inputs[0]);
        for (std::size_t r = 0; r < node.rows; ++r) {
          const auto yr = y.row(r);
          const auto gr = g.row(r);
          double dot = 0.0;
          for (std::size_t c = 0; c < node.cols; ++c) dot += gr[c] * yr[c];
          auto dst = ga.row(r);
          for (std::size_t c = 0; c < node.cols; ++c) dst[c] += yr[c] * (gr[c] - dot);
        }
        break;
      }
      case Op::kLogSoftmax: {
        DenseArray& ga = acc(node.inputs[0]);
        for (std::size_t r = 0; r < node.rows; ++r) {
          const auto yr = y.row(r);
          const auto gr = g.row(r);
          double total = 0.0;
          for (double v : gr) total += v;
          auto dst = ga.row(r);
          for (std::size_t c = 0; c < node.cols; ++c) dst[c] += gr[c] - std::exp(yr[c]) * total;
        }
        break;
      }
      case Op::kSum:
      case Op::kMean: {
        DenseArray& ga = acc(node.inputs[0]);
        const double v = node.op == Op::kMean ? g[0] / static_cast<double>(ga.size()) : g[0];
        for (double& e : ga.data()) e += v;
        break;
      }
      case Op::kRowSum: {
        DenseArray& ga = acc(node.inputs[0]);
        for (std::size_t r = 0; r < ga.rows(); ++r) {
          for (double& e : ga.row(r)) e += g[r];
        }
        break;
      }
    }
  }
  return result;
}

}  // namespace kga::gradkit
