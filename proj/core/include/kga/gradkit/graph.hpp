#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kga/gradkit/dense_array.hpp"

namespace kga::gradkit {

/// Raised while wiring a graph whose operand shapes do not fit the primitive.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised by forward() when a node produces NaN or infinity.
class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(std::size_t node, const std::string& what)
      : std::runtime_error(what), node_(node) {}
  std::size_t node() const noexcept { return node_; }

 private:
  std::size_t node_;
};

struct NodeId {
  std::size_t index = 0;
  friend bool operator==(NodeId, NodeId) = default;
};

enum class Op {
  kInput,
  kParameter,
  kConstant,
  kAdd,
  kSub,
  kMul,
  kScale,
  kMatMul,
  kTranspose,
  kConcat,
  kRowLookup,
  kSegmentMean,
  kTanh,
  kSigmoid,
  kRelu,
  kExp,
  kLog,
  kAbs,
  kSoftmax,
  kLogSoftmax,
  kSum,
  kMean,
  kRowSum,
};

const char* op_name(Op op) noexcept;

enum class Axis { kRows, kCols };

/// Define-then-run computation graph over rank-2 arrays.
///
/// Nodes are appended in topological order, so the graph is acyclic by
/// construction. Shapes are checked as each node is added. Parameter leaves
/// refer to a slot in the parameter list bound at forward() time; input
/// leaves are bound by name. Binary elementwise ops accept a right operand
/// that is the same shape, a 1xC row, an Rx1 column, or a 1x1 scalar.
class Graph {
 public:
  struct Node {
    Op op = Op::kConstant;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> inputs;
    std::vector<std::size_t> indices;  // row ids for lookups, offsets for segments
    double scalar = 0.0;
    std::size_t slot = 0;              // parameter slot or constant index
    std::string name;                  // input name
  };

  NodeId input(std::string name, std::size_t rows, std::size_t cols);
  NodeId parameter(std::size_t slot, std::size_t rows, std::size_t cols);
  NodeId constant(DenseArray value);

  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId scale(NodeId a, double factor);
  NodeId matmul(NodeId a, NodeId b);
  NodeId transpose(NodeId a);
  NodeId concat(std::span<const NodeId> parts, Axis axis);
  /// Gathers rows of `table` in the given order; gradients scatter-add back.
  NodeId row_lookup(NodeId table, std::vector<std::size_t> rows);
  /// Averages consecutive row groups. `offsets` has one entry per group plus
  /// a terminal entry equal to the row count of `a`; groups must be non-empty.
  NodeId segment_mean(NodeId a, std::vector<std::size_t> offsets);
  NodeId tanh(NodeId a);
  NodeId sigmoid(NodeId a);
  NodeId relu(NodeId a);
  NodeId exp(NodeId a);
  NodeId log(NodeId a);
  NodeId abs(NodeId a);
  NodeId softmax(NodeId a);      // row-wise
  NodeId log_softmax(NodeId a);  // row-wise
  NodeId sum(NodeId a);          // -> 1x1
  NodeId mean(NodeId a);         // -> 1x1
  NodeId row_sum(NodeId a);      // -> Rx1

  std::size_t size() const noexcept { return nodes_.size(); }
  const Node& node(NodeId id) const { return nodes_.at(id.index); }
  std::size_t rows(NodeId id) const { return node(id).rows; }
  std::size_t cols(NodeId id) const { return node(id).cols; }
  const DenseArray& constant_value(const Node& node) const { return constants_[node.slot]; }
  /// One past the highest parameter slot referenced.
  std::size_t parameter_slots() const noexcept { return parameter_slots_; }

 private:
  NodeId push(Node node);
  const Node& checked(NodeId id, const char* where) const;
  NodeId binary(Op op, NodeId a, NodeId b);
  NodeId unary(Op op, NodeId a);

  std::vector<Node> nodes_;
  std::vector<DenseArray> constants_;
  std::size_t parameter_slots_ = 0;
};

/// Values bound to a graph's leaves for one evaluation.
struct Bindings {
  std::map<std::string, DenseArray, std::less<>> inputs;
  std::span<const DenseArray> parameters;
};

/// Result of evaluating every node of a graph against one binding.
///
/// Parameter and constant values are referenced, not copied: the graph and
/// the bound parameter arrays must outlive the evaluation.
class Evaluation {
 public:
  const Graph& graph() const noexcept { return *graph_; }
  const DenseArray& value(NodeId id) const { return *refs_.at(id.index); }
  double scalar(NodeId id) const { return value(id)[0]; }
  std::size_t parameter_count() const noexcept { return parameter_shapes_.size(); }
  const std::vector<std::size_t>& parameter_shape(std::size_t slot) const {
    return parameter_shapes_.at(slot);
  }

 private:
  friend Evaluation forward(const Graph&, const Bindings&);
  const Graph* graph_ = nullptr;
  std::vector<DenseArray> values_;
  std::vector<const DenseArray*> refs_;
  std::vector<std::vector<std::size_t>> parameter_shapes_;
};

/// Evaluates all nodes. Pure: parameters and inputs are only read.
/// Throws std::invalid_argument for missing or mis-shaped bindings and
/// NonFiniteError if any node value is not finite.
Evaluation forward(const Graph& graph, const Bindings& bindings);

/// Reverse-mode gradients of `output` with respect to every bound parameter.
/// Unreached parameters receive exact zeros. Without a seed the output must
/// be 1x1 and is seeded with 1.
std::vector<DenseArray> backward(const Evaluation& evaluation, NodeId output,
                                 const std::optional<DenseArray>& seed = std::nullopt);

}  // namespace kga::gradkit
