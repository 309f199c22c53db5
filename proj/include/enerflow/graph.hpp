/* Copyright 2026 The Enerflow Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <compare>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace enerflow {

/// Dimensions of a tensor, channels-first (N, C, H, W for 4-D tensors).
class TensorShape {
 public:
  TensorShape() = default;
  TensorShape(std::initializer_list<std::int64_t> dims) : dims_(dims) {}
  explicit TensorShape(std::vector<std::int64_t> dims) : dims_(std::move(dims)) {}

  std::size_t rank() const { return dims_.size(); }
  const std::vector<std::int64_t>& dims() const { return dims_; }
  std::int64_t operator[](std::size_t i) const { return dims_[i]; }
  std::int64_t numel() const;
  /// rank >= 1 and every dim >= 1.
  bool valid() const;
  /// "1x3x8x8"
  std::string to_string() const;

  friend bool operator==(const TensorShape&, const TensorShape&) = default;
  friend auto operator<=>(const TensorShape&, const TensorShape&) = default;

 private:
  std::vector<std::int64_t> dims_;
};

enum class OpKind {
  Input,
  Conv2d,
  MatMul,
  Relu,
  Add,
  Concat,
  Split,
  MaxPool,
  AvgPool,
  BatchNorm,
  Identity,
};

/// Lowercase operator name as used in graph files ("conv2d", "maxpool", ...).
std::string_view to_string(OpKind kind);
std::optional<OpKind> parse_op_kind(std::string_view name);

/// Immutable dense constant shared between graph copies.
using Weights = std::shared_ptr<const std::vector<double>>;
Weights make_weights(std::vector<double> values);

struct Hw {
  std::int64_t h = 1;
  std::int64_t w = 1;
  friend bool operator==(const Hw&, const Hw&) = default;
};

struct InputParams {
  std::string name;
};

/// weight layout [out, in, kh, kw]; bias [out]. has_activation fuses a trailing relu.
struct Conv2dParams {
  std::int64_t out_channels = 1;
  Hw kernel{1, 1};
  Hw stride{1, 1};
  Hw padding{0, 0};
  bool has_activation = false;
  Weights weight;
  Weights bias;
};

/// Contracts the last input dimension: (..., K) x [K, out_features].
struct MatMulParams {
  std::int64_t out_features = 1;
  Weights weight;
};

struct PoolParams {
  Hw kernel{1, 1};
  Hw stride{1, 1};
  Hw padding{0, 0};
};

struct ConcatParams {
  int axis = 1;
};

struct SplitParams {
  int axis = 1;
  std::vector<std::int64_t> sizes;
};

/// Pre-reduced per-channel affine: y = x * scale[c] + shift[c].
struct BatchNormParams {
  Weights scale;
  Weights shift;
};

using OpParams = std::variant<std::monostate, InputParams, Conv2dParams, MatMulParams, PoolParams,
                              ConcatParams, SplitParams, BatchNormParams>;

/// One output tensor of a node. Only split has more than one port.
struct EdgeRef {
  int node = -1;
  int port = 0;
  friend auto operator<=>(const EdgeRef&, const EdgeRef&) = default;
};

struct Node {
  int id = -1;
  OpKind kind = OpKind::Identity;
  std::vector<EdgeRef> inputs;
  OpParams params;

  template <class P>
  const P& as() const {
    return std::get<P>(params);
  }
  template <class P>
  P& as() {
    return std::get<P>(params);
  }
  int num_outputs() const;
};

struct GraphInput {
  std::string name;
  TensorShape shape;
  friend bool operator==(const GraphInput&, const GraphInput&) = default;
};

/// Directed acyclic operator graph. A plain value type: rewrites copy, then edit the copy.
/// Graph inputs are materialized as Input nodes that name an entry of inputs().
class Graph {
 public:
  const std::vector<GraphInput>& inputs() const { return inputs_; }
  const std::map<int, Node>& nodes() const { return nodes_; }
  const std::vector<EdgeRef>& outputs() const { return outputs_; }

  const Node& node(int id) const;
  Node& mutable_node(int id);
  const Node* find(int id) const;
  bool contains(int id) const { return nodes_.count(id) != 0; }
  /// Nodes other than Input nodes; these are the ones that carry algorithms and costs.
  std::size_t operator_count() const;
  std::vector<int> operator_ids() const;
  int next_id() const { return nodes_.empty() ? 0 : nodes_.rbegin()->first + 1; }

  void add_graph_input(GraphInput input);
  /// Declares a graph input and the Input node reading it.
  EdgeRef add_input(std::string name, TensorShape shape);
  int add_node(OpKind kind, std::vector<EdgeRef> inputs, OpParams params = {});
  /// Inserts with an explicit id; throws GraphError on duplicates.
  void insert_node(Node node);
  void remove_node(int id);
  void set_outputs(std::vector<EdgeRef> outputs) { outputs_ = std::move(outputs); }
  void add_output(EdgeRef e) { outputs_.push_back(e); }

  /// Redirects every use of `from` (node inputs and graph outputs) to `to`.
  void replace_uses(EdgeRef from, EdgeRef to);
  /// Ids of nodes consuming `e`, ascending, one entry per use.
  std::vector<int> consumers(EdgeRef e) const;
  bool is_graph_output(EdgeRef e) const;
  /// True when `consumer` is the only use of `e` and `e` is not a graph output.
  bool sole_consumer(EdgeRef e, int consumer) const;
  /// Removes nodes that no graph output depends on. Input nodes are kept.
  void prune_dead();

  /// Deterministic topological order (smallest ready id first). Throws GraphError on a
  /// cycle or dangling reference.
  std::vector<int> topological_order() const;

 private:
  std::vector<GraphInput> inputs_;
  std::map<int, Node> nodes_;
  std::vector<EdgeRef> outputs_;
};

using ShapeMap = std::map<int, std::vector<TensorShape>>;

/// Output shapes of one node from its input shapes. Throws ShapeMismatch.
std::vector<TensorShape> infer_node_shapes(const Node& node, std::span<const TensorShape> inputs);
/// Shapes of every node output. Throws ShapeMismatch or GraphError.
ShapeMap infer_shapes(const Graph& graph);
const TensorShape& shape_of(const ShapeMap& shapes, EdgeRef e);

/// Empty when every graph invariant holds; otherwise human-readable violations.
std::vector<std::string> validate(const Graph& graph);

/// Digest invariant under node-id relabeling; includes weight contents.
std::uint64_t canonical_hash(const Graph& graph);

/// Copy of `graph` with node ids remapped through `new_ids` (must be a bijection).
Graph relabel(const Graph& graph, const std::map<int, int>& new_ids);

}  // namespace enerflow
