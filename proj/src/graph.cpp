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
#include "enerflow/graph.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>

#include "enerflow/errors.hpp"

namespace enerflow {

std::int64_t TensorShape::numel() const {
  return std::accumulate(dims_.begin(), dims_.end(), std::int64_t{1}, std::multiplies<>());
}

bool TensorShape::valid() const {
  return !dims_.empty() &&
         std::all_of(dims_.begin(), dims_.end(), [](std::int64_t d) { return d >= 1; });
}

std::string TensorShape::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (i) out += 'x';
    out += std::to_string(dims_[i]);
  }
  return out;
}

namespace {

constexpr std::array<std::pair<OpKind, std::string_view>, 11> kKindNames{{
    {OpKind::Input, "input"},
    {OpKind::Conv2d, "conv2d"},
    {OpKind::MatMul, "matmul"},
    {OpKind::Relu, "relu"},
    {OpKind::Add, "add"},
    {OpKind::Concat, "concat"},
    {OpKind::Split, "split"},
    {OpKind::MaxPool, "maxpool"},
    {OpKind::AvgPool, "avgpool"},
    {OpKind::BatchNorm, "batchnorm"},
    {OpKind::Identity, "identity"},
}};

}  // namespace

std::string_view to_string(OpKind kind) {
  for (const auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "unknown";
}

std::optional<OpKind> parse_op_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames)
    if (n == name) return k;
  return std::nullopt;
}

Weights make_weights(std::vector<double> values) {
  return std::make_shared<const std::vector<double>>(std::move(values));
}

int Node::num_outputs() const {
  if (kind == OpKind::Split) return static_cast<int>(as<SplitParams>().sizes.size());
  return 1;
}

// ---------------------------------------------------------------------------
// Graph

const Node& Graph::node(int id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw GraphError("no node with id " + std::to_string(id));
  return it->second;
}

Node& Graph::mutable_node(int id) {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw GraphError("no node with id " + std::to_string(id));
  return it->second;
}

const Node* Graph::find(int id) const {
  auto it = nodes_.find(id);
  return it == nodes_.end() ? nullptr : &it->second;
}

std::size_t Graph::operator_count() const {
  return static_cast<std::size_t>(std::count_if(
      nodes_.begin(), nodes_.end(), [](const auto& kv) { return kv.second.kind != OpKind::Input; }));
}

std::vector<int> Graph::operator_ids() const {
  std::vector<int> ids;
  for (const auto& [id, n] : nodes_)
    if (n.kind != OpKind::Input) ids.push_back(id);
  return ids;
}

void Graph::add_graph_input(GraphInput input) { inputs_.push_back(std::move(input)); }

EdgeRef Graph::add_input(std::string name, TensorShape shape) {
  inputs_.push_back({name, std::move(shape)});
  int id = add_node(OpKind::Input, {}, InputParams{std::move(name)});
  return {id, 0};
}

int Graph::add_node(OpKind kind, std::vector<EdgeRef> inputs, OpParams params) {
  Node n;
  n.id = next_id();
  n.kind = kind;
  n.inputs = std::move(inputs);
  n.params = std::move(params);
  int id = n.id;
  nodes_.emplace(id, std::move(n));
  return id;
}

void Graph::insert_node(Node node) {
  int id = node.id;
  if (!nodes_.emplace(id, std::move(node)).second)
    throw GraphError("duplicate node id " + std::to_string(id));
}

void Graph::remove_node(int id) { nodes_.erase(id); }

void Graph::replace_uses(EdgeRef from, EdgeRef to) {
  for (auto& [id, n] : nodes_)
    for (auto& in : n.inputs)
      if (in == from) in = to;
  for (auto& o : outputs_)
    if (o == from) o = to;
}

std::vector<int> Graph::consumers(EdgeRef e) const {
  std::vector<int> out;
  for (const auto& [id, n] : nodes_)
    for (const auto& in : n.inputs)
      if (in == e) out.push_back(id);
  return out;
}

bool Graph::is_graph_output(EdgeRef e) const {
  return std::find(outputs_.begin(), outputs_.end(), e) != outputs_.end();
}

bool Graph::sole_consumer(EdgeRef e, int consumer) const {
  if (is_graph_output(e)) return false;
  auto c = consumers(e);
  return c.size() == 1 && c.front() == consumer;
}

void Graph::prune_dead() {
  std::set<int> live;
  std::vector<int> stack;
  for (const auto& o : outputs_) stack.push_back(o.node);
  while (!stack.empty()) {
    int id = stack.back();
    stack.pop_back();
    if (!live.insert(id).second) continue;
    if (const Node* n = find(id))
      for (const auto& in : n->inputs) stack.push_back(in.node);
  }
  std::erase_if(nodes_, [&](const auto& kv) {
    return kv.second.kind != OpKind::Input && live.count(kv.first) == 0;
  });
}

std::vector<int> Graph::topological_order() const {
  std::map<int, int> indegree;
  std::map<int, std::vector<int>> users;
  for (const auto& [id, n] : nodes_) {
    indegree[id];
    for (const auto& in : n.inputs) {
      if (!contains(in.node))
        throw GraphError("node " + std::to_string(id) + " references missing node " +
                         std::to_string(in.node));
      ++indegree[id];
      users[in.node].push_back(id);
    }
  }
  std::priority_queue<int, std::vector<int>, std::greater<>> ready;
  for (const auto& [id, deg] : indegree)
    if (deg == 0) ready.push(id);
  std::vector<int> order;
  order.reserve(nodes_.size());
  while (!ready.empty()) {
    int id = ready.top();
    ready.pop();
    order.push_back(id);
    for (int u : users[id])
      if (--indegree[u] == 0) ready.push(u);
  }
  if (order.size() != nodes_.size()) throw GraphError("cycle detected");
  return order;
}

// ---------------------------------------------------------------------------
// Shape inference

namespace {

std::int64_t window_out(std::int64_t in, std::int64_t k, std::int64_t s, std::int64_t p) {
  if (in + 2 * p < k) return 0;
  return (in + 2 * p - k) / s + 1;
}

void check_window(int id, Hw kernel, Hw stride, Hw padding) {
  if (kernel.h < 1 || kernel.w < 1) throw ShapeMismatch(id, "kernel must be positive");
  if (stride.h < 1 || stride.w < 1) throw ShapeMismatch(id, "stride must be positive");
  if (padding.h < 0 || padding.w < 0) throw ShapeMismatch(id, "padding must be non-negative");
}

std::size_t weight_size(const Weights& w) { return w ? w->size() : 0; }

}  // namespace

std::vector<TensorShape> infer_node_shapes(const Node& node, std::span<const TensorShape> in) {
  const int id = node.id;
  auto require_arity = [&](std::size_t n) {
    if (in.size() != n)
      throw ShapeMismatch(id, std::string(to_string(node.kind)) + " expects " + std::to_string(n) +
                                  " input(s), got " + std::to_string(in.size()));
  };
  auto require_rank4 = [&](const TensorShape& s) {
    if (s.rank() != 4) throw ShapeMismatch(id, "expects a rank-4 input, got " + s.to_string());
  };

  switch (node.kind) {
    case OpKind::Input:
      throw ShapeMismatch(id, "input nodes take their shape from the graph inputs");
    case OpKind::Relu:
    case OpKind::Identity:
      require_arity(1);
      return {in[0]};
    case OpKind::Add:
      require_arity(2);
      if (in[0] != in[1])
        throw ShapeMismatch(id, "add operands differ: " + in[0].to_string() + " vs " +
                                    in[1].to_string());
      return {in[0]};
    case OpKind::Conv2d: {
      require_arity(1);
      require_rank4(in[0]);
      const auto& p = node.as<Conv2dParams>();
      if (p.out_channels < 1) throw ShapeMismatch(id, "out_channels must be positive");
      check_window(id, p.kernel, p.stride, p.padding);
      const std::int64_t cin = in[0][1];
      if (weight_size(p.weight) != static_cast<std::size_t>(p.out_channels * cin * p.kernel.h * p.kernel.w))
        throw ShapeMismatch(id, "conv weight size does not match [out, in, kh, kw]");
      if (weight_size(p.bias) != static_cast<std::size_t>(p.out_channels))
        throw ShapeMismatch(id, "conv bias size does not match out_channels");
      TensorShape out{in[0][0], p.out_channels, window_out(in[0][2], p.kernel.h, p.stride.h, p.padding.h),
                      window_out(in[0][3], p.kernel.w, p.stride.w, p.padding.w)};
      if (!out.valid()) throw ShapeMismatch(id, "kernel larger than padded input");
      return {out};
    }
    case OpKind::MaxPool:
    case OpKind::AvgPool: {
      require_arity(1);
      require_rank4(in[0]);
      const auto& p = node.as<PoolParams>();
      check_window(id, p.kernel, p.stride, p.padding);
      if (p.padding.h >= p.kernel.h || p.padding.w >= p.kernel.w)
        throw ShapeMismatch(id, "pool padding must be smaller than the kernel");
      TensorShape out{in[0][0], in[0][1], window_out(in[0][2], p.kernel.h, p.stride.h, p.padding.h),
                      window_out(in[0][3], p.kernel.w, p.stride.w, p.padding.w)};
      if (!out.valid()) throw ShapeMismatch(id, "kernel larger than padded input");
      return {out};
    }
    case OpKind::MatMul: {
      require_arity(1);
      const auto& p = node.as<MatMulParams>();
      if (p.out_features < 1) throw ShapeMismatch(id, "out_features must be positive");
      const std::int64_t k = in[0].dims().back();
      if (weight_size(p.weight) != static_cast<std::size_t>(k * p.out_features))
        throw ShapeMismatch(id, "matmul weight size does not match [K, out_features]");
      auto dims = in[0].dims();
      dims.back() = p.out_features;
      return {TensorShape(std::move(dims))};
    }
    case OpKind::BatchNorm: {
      require_arity(1);
      if (in[0].rank() < 2) throw ShapeMismatch(id, "batchnorm expects rank >= 2");
      const auto& p = node.as<BatchNormParams>();
      const auto c = static_cast<std::size_t>(in[0][1]);
      if (weight_size(p.scale) != c || weight_size(p.shift) != c)
        throw ShapeMismatch(id, "batchnorm scale/shift size does not match channels");
      return {in[0]};
    }
    case OpKind::Concat: {
      if (in.size() < 2) throw ShapeMismatch(id, "concat expects at least 2 inputs");
      const int axis = node.as<ConcatParams>().axis;
      if (axis < 0 || static_cast<std::size_t>(axis) >= in[0].rank())
        throw ShapeMismatch(id, "concat axis out of range");
      auto dims = in[0].dims();
      for (std::size_t i = 1; i < in.size(); ++i) {
        if (in[i].rank() != in[0].rank()) throw ShapeMismatch(id, "concat operands differ in rank");
        for (std::size_t d = 0; d < dims.size(); ++d) {
          if (static_cast<int>(d) == axis) continue;
          if (in[i][d] != in[0][d])
            throw ShapeMismatch(id, "concat operands differ off-axis: " + in[0].to_string() +
                                        " vs " + in[i].to_string());
        }
        dims[axis] += in[i][axis];
      }
      return {TensorShape(std::move(dims))};
    }
    case OpKind::Split: {
      require_arity(1);
      const auto& p = node.as<SplitParams>();
      if (p.axis < 0 || static_cast<std::size_t>(p.axis) >= in[0].rank())
        throw ShapeMismatch(id, "split axis out of range");
      if (p.sizes.empty()) throw ShapeMismatch(id, "split needs at least one part");
      std::int64_t total = 0;
      for (auto s : p.sizes) {
        if (s < 1) throw ShapeMismatch(id, "split sizes must be positive");
        total += s;
      }
      if (total != in[0][p.axis])
        throw ShapeMismatch(id, "split sizes sum to " + std::to_string(total) + " but axis has " +
                                    std::to_string(in[0][p.axis]));
      std::vector<TensorShape> outs;
      for (auto s : p.sizes) {
        auto dims = in[0].dims();
        dims[p.axis] = s;
        outs.emplace_back(std::move(dims));
      }
      return outs;
    }
  }
  throw ShapeMismatch(id, "unknown operator");
}

ShapeMap infer_shapes(const Graph& graph) {
  ShapeMap shapes;
  for (int id : graph.topological_order()) {
    const Node& n = graph.node(id);
    if (n.kind == OpKind::Input) {
      const auto& name = n.as<InputParams>().name;
      auto it = std::find_if(graph.inputs().begin(), graph.inputs().end(),
                             [&](const GraphInput& gi) { return gi.name == name; });
      if (it == graph.inputs().end())
        throw ShapeMismatch(id, "input node names undeclared graph input '" + name + "'");
      if (!it->shape.valid()) throw ShapeMismatch(id, "invalid input shape " + it->shape.to_string());
      shapes[id] = {it->shape};
      continue;
    }
    std::vector<TensorShape> in;
    in.reserve(n.inputs.size());
    for (const auto& e : n.inputs) {
      const auto& outs = shapes.at(e.node);
      if (e.port < 0 || static_cast<std::size_t>(e.port) >= outs.size())
        throw ShapeMismatch(id, "input references port " + std::to_string(e.port) + " of node " +
                                    std::to_string(e.node));
      in.push_back(outs[e.port]);
    }
    shapes[id] = infer_node_shapes(n, in);
  }
  return shapes;
}

const TensorShape& shape_of(const ShapeMap& shapes, EdgeRef e) { return shapes.at(e.node).at(e.port); }

// ---------------------------------------------------------------------------
// Validation

namespace {

std::optional<std::size_t> expected_arity(OpKind kind) {
  switch (kind) {
    case OpKind::Input: return 0;
    case OpKind::Add: return 2;
    case OpKind::Concat: return std::nullopt;
    default: return 1;
  }
}

bool params_match_kind(const Node& n) {
  switch (n.kind) {
    case OpKind::Input: return std::holds_alternative<InputParams>(n.params);
    case OpKind::Conv2d: return std::holds_alternative<Conv2dParams>(n.params);
    case OpKind::MatMul: return std::holds_alternative<MatMulParams>(n.params);
    case OpKind::MaxPool:
    case OpKind::AvgPool: return std::holds_alternative<PoolParams>(n.params);
    case OpKind::Concat: return std::holds_alternative<ConcatParams>(n.params);
    case OpKind::Split: return std::holds_alternative<SplitParams>(n.params);
    case OpKind::BatchNorm: return std::holds_alternative<BatchNormParams>(n.params);
    default: return std::holds_alternative<std::monostate>(n.params);
  }
}

}  // namespace

std::vector<std::string> validate(const Graph& graph) {
  std::vector<std::string> v;
  auto node_str = [](int id) { return "node " + std::to_string(id); };

  std::set<std::string> input_names;
  for (const auto& gi : graph.inputs()) {
    if (!input_names.insert(gi.name).second) v.push_back("duplicate graph input '" + gi.name + "'");
    if (!gi.shape.valid()) v.push_back("graph input '" + gi.name + "' has invalid shape");
  }
  if (graph.outputs().empty()) v.push_back("graph has no outputs");

  bool structural_ok = true;
  for (const auto& [id, n] : graph.nodes()) {
    if (id < 0) v.push_back(node_str(id) + ": negative id");
    if (!params_match_kind(n)) {
      v.push_back(node_str(id) + ": parameters do not match kind " + std::string(to_string(n.kind)));
      structural_ok = false;
      continue;
    }
    auto arity = expected_arity(n.kind);
    if (arity ? n.inputs.size() != *arity : n.inputs.size() < 2) {
      v.push_back(node_str(id) + ": wrong arity " + std::to_string(n.inputs.size()) + " for " +
                  std::string(to_string(n.kind)));
      structural_ok = false;
    }
    for (const auto& e : n.inputs) {
      const Node* src = graph.find(e.node);
      if (!src) {
        v.push_back(node_str(id) + ": dangling reference to node " + std::to_string(e.node));
        structural_ok = false;
      } else if (e.port < 0 || e.port >= src->num_outputs()) {
        v.push_back(node_str(id) + ": reference to missing port " + std::to_string(e.port) + " of " +
                    node_str(e.node));
        structural_ok = false;
      }
    }
    if (n.kind == OpKind::Input && !input_names.count(n.as<InputParams>().name))
      v.push_back(node_str(id) + ": input node names undeclared graph input");
  }
  for (const auto& o : graph.outputs()) {
    const Node* src = graph.find(o.node);
    if (!src) {
      v.push_back("output references missing node " + std::to_string(o.node));
      structural_ok = false;
    } else if (o.port < 0 || o.port >= src->num_outputs()) {
      v.push_back("output references missing port " + std::to_string(o.port) + " of " +
                  node_str(o.node));
      structural_ok = false;
    }
  }
  if (!structural_ok) return v;

  try {
    (void)graph.topological_order();
  } catch (const GraphError& e) {
    v.push_back(e.what());
    return v;
  }

  try {
    (void)infer_shapes(graph);
  } catch (const ShapeMismatch& e) {
    v.push_back(e.what());
  }

  Graph pruned = graph;
  pruned.prune_dead();
  for (const auto& [id, n] : graph.nodes())
    if (!pruned.contains(id)) v.push_back(node_str(id) + ": not reachable from any output");
  return v;
}

Graph relabel(const Graph& graph, const std::map<int, int>& new_ids) {
  auto map_edge = [&](EdgeRef e) { return EdgeRef{new_ids.at(e.node), e.port}; };
  Graph out;
  for (const auto& gi : graph.inputs()) out.add_graph_input(gi);
  for (const auto& [id, n] : graph.nodes()) {
    Node copy = n;
    copy.id = new_ids.at(id);
    for (auto& e : copy.inputs) e = map_edge(e);
    out.insert_node(std::move(copy));
  }
  std::vector<EdgeRef> outs;
  for (const auto& o : graph.outputs()) outs.push_back(map_edge(o));
  out.set_outputs(std::move(outs));
  return out;
}

}  // namespace enerflow
