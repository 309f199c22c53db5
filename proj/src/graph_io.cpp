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
#include "enerflow/graph_io.hpp"

#include <bit>
#include <fstream>
#include <random>
#include <sstream>

#include "enerflow/errors.hpp"
#include "json.hpp"

namespace enerflow {

using json = nlohmann::ordered_json;

namespace {

constexpr std::string_view kBase64Alphabet =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
constexpr std::string_view kBase64Prefix = "base64:";

std::string node_ctx(int id) { return "node " + std::to_string(id) + ": "; }

std::int64_t get_int(const json& obj, const char* key, int id, std::optional<std::int64_t> fallback = {}) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    throw FormatError(node_ctx(id) + "missing parameter '" + key + "'", id);
  }
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) throw FormatError(node_ctx(id) + "parameter '" + key + "' must be an integer", id);
  return v.get<std::int64_t>();
}

Hw get_hw(const json& obj, const char* key, int id, std::optional<Hw> fallback = {}) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    throw FormatError(node_ctx(id) + "missing parameter '" + key + "'", id);
  }
  const auto& v = obj.at(key);
  if (v.is_number_integer()) return {v.get<std::int64_t>(), v.get<std::int64_t>()};
  if (v.is_array() && v.size() == 2 && v[0].is_number_integer() && v[1].is_number_integer())
    return {v[0].get<std::int64_t>(), v[1].get<std::int64_t>()};
  throw FormatError(node_ctx(id) + "parameter '" + key + "' must be an integer or [h, w]", id);
}

std::optional<std::vector<double>> get_array(const json& weights, const char* key, int id) {
  if (!weights.is_object() || !weights.contains(key)) return std::nullopt;
  const auto& v = weights.at(key);
  if (v.is_string()) {
    auto s = v.get<std::string>();
    if (s.rfind(kBase64Prefix, 0) != 0)
      throw FormatError(node_ctx(id) + "weight string must start with 'base64:'", id);
    try {
      return decode_base64_f64(std::string_view(s).substr(kBase64Prefix.size()));
    } catch (const FormatError& e) {
      throw FormatError(node_ctx(id) + e.what(), id);
    }
  }
  if (!v.is_array()) throw FormatError(node_ctx(id) + "weights '" + key + "' must be an array", id);
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) {
    if (!x.is_number()) throw FormatError(node_ctx(id) + "weights '" + key + "' must be numeric", id);
    out.push_back(x.get<double>());
  }
  return out;
}

// Placeholder constants for files that omit weights; sized once shapes are known.
std::vector<double> filler(int id, std::uint64_t salt, std::size_t n, double lo, double hi) {
  std::mt19937_64 rng(0x9e3779b97f4a7c15ULL ^ (static_cast<std::uint64_t>(id) * 131 + salt));
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

EdgeRef parse_edge(const json& v, int id) {
  if (v.is_number_integer()) return {v.get<int>(), 0};
  if (v.is_array() && v.size() == 2 && v[0].is_number_integer() && v[1].is_number_integer())
    return {v[0].get<int>(), v[1].get<int>()};
  throw FormatError(node_ctx(id) + "edge reference must be an id or [id, port]", id);
}

json edge_json(EdgeRef e) {
  if (e.port == 0) return e.node;
  return json::array({e.node, e.port});
}

json hw_json(Hw v) { return json::array({v.h, v.w}); }

}  // namespace

std::string encode_base64_f64(const std::vector<double>& values) {
  std::string bytes;
  bytes.reserve(values.size() * 8);
  for (double d : values) {
    auto u = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
  }
  std::string out;
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    std::uint32_t v = (static_cast<unsigned char>(bytes[i]) << 16) |
                      (static_cast<unsigned char>(bytes[i + 1]) << 8) | static_cast<unsigned char>(bytes[i + 2]);
    for (int k = 3; k >= 0; --k) out.push_back(kBase64Alphabet[(v >> (6 * k)) & 63]);
  }
  const std::size_t rest = bytes.size() - i;
  if (rest) {
    std::uint32_t v = static_cast<unsigned char>(bytes[i]) << 16;
    if (rest == 2) v |= static_cast<unsigned char>(bytes[i + 1]) << 8;
    out.push_back(kBase64Alphabet[(v >> 18) & 63]);
    out.push_back(kBase64Alphabet[(v >> 12) & 63]);
    out.push_back(rest == 2 ? kBase64Alphabet[(v >> 6) & 63] : '=');
    out.push_back('=');
  }
  return out;
}

std::vector<double> decode_base64_f64(std::string_view text) {
  std::string bytes;
  std::uint32_t acc = 0;
  int bits = 0;
  for (char c : text) {
    if (c == '=') break;
    auto pos = kBase64Alphabet.find(c);
    if (pos == std::string_view::npos) throw FormatError("invalid base64 character");
    acc = (acc << 6) | static_cast<std::uint32_t>(pos);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      bytes.push_back(static_cast<char>((acc >> bits) & 0xff));
    }
  }
  if (bytes.size() % 8 != 0) throw FormatError("base64 payload is not a whole number of float64 values");
  std::vector<double> out;
  for (std::size_t i = 0; i < bytes.size(); i += 8) {
    std::uint64_t u = 0;
    for (int k = 0; k < 8; ++k) u |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i + k])) << (8 * k);
    out.push_back(std::bit_cast<double>(u));
  }
  return out;
}

Graph graph_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("nodes") || !doc.contains("outputs"))
    throw FormatError("graph file needs 'nodes' and 'outputs'");

  Graph g;
  for (const auto& in : doc.value("inputs", json::array())) {
    if (!in.contains("name") || !in.contains("shape")) throw FormatError("graph input needs 'name' and 'shape'");
    g.add_graph_input({in.at("name").get<std::string>(), TensorShape(in.at("shape").get<std::vector<std::int64_t>>())});
  }

  struct Pending {
    Node node;
    json weights;
  };
  std::vector<Pending> pending;
  for (const auto& jn : doc.at("nodes")) {
    if (!jn.contains("id") || !jn.at("id").is_number_integer()) throw FormatError("node without integer id");
    const int id = jn.at("id").get<int>();
    if (id < 0) throw FormatError(node_ctx(id) + "ids must be non-negative", id);
    const auto kind_name = jn.value("kind", std::string());
    auto kind = parse_op_kind(kind_name);
    if (!kind) throw FormatError(node_ctx(id) + "unknown kind '" + kind_name + "'", id);

    Node n;
    n.id = id;
    n.kind = *kind;
    for (const auto& e : jn.value("inputs", json::array())) n.inputs.push_back(parse_edge(e, id));
    const json params = jn.value("params", json::object());
    switch (n.kind) {
      case OpKind::Input:
        if (!params.contains("name")) throw FormatError(node_ctx(id) + "input node needs params.name", id);
        n.params = InputParams{params.at("name").get<std::string>()};
        break;
      case OpKind::Conv2d: {
        Conv2dParams p;
        p.out_channels = get_int(params, "out_channels", id);
        p.kernel = get_hw(params, "kernel", id);
        p.stride = get_hw(params, "stride", id, Hw{1, 1});
        p.padding = get_hw(params, "padding", id, Hw{0, 0});
        p.has_activation = params.value("has_activation", false);
        n.params = p;
        break;
      }
      case OpKind::MatMul:
        n.params = MatMulParams{get_int(params, "out_features", id), nullptr};
        break;
      case OpKind::MaxPool:
      case OpKind::AvgPool: {
        PoolParams p;
        p.kernel = get_hw(params, "kernel", id);
        p.stride = get_hw(params, "stride", id, p.kernel);
        p.padding = get_hw(params, "padding", id, Hw{0, 0});
        n.params = p;
        break;
      }
      case OpKind::Concat:
        n.params = ConcatParams{static_cast<int>(get_int(params, "axis", id, 1))};
        break;
      case OpKind::Split: {
        SplitParams p;
        p.axis = static_cast<int>(get_int(params, "axis", id, 1));
        if (!params.contains("sizes")) throw FormatError(node_ctx(id) + "split needs params.sizes", id);
        p.sizes = params.at("sizes").get<std::vector<std::int64_t>>();
        n.params = p;
        break;
      }
      case OpKind::BatchNorm:
        n.params = BatchNormParams{};
        break;
      default:
        break;
    }
    pending.push_back({std::move(n), jn.value("weights", json())});
  }
  for (auto& p : pending) {
    try {
      g.insert_node(p.node);
    } catch (const GraphError& e) {
      throw FormatError(e.what(), p.node.id);
    }
  }
  std::vector<EdgeRef> outs;
  for (const auto& o : doc.at("outputs")) outs.push_back(parse_edge(o, -1));
  g.set_outputs(std::move(outs));

  // Weights need input shapes for sizing defaults; resolve in topological order.
  std::vector<int> order;
  try {
    order = g.topological_order();
  } catch (const GraphError& e) {
    throw FormatError(e.what());
  }
  std::map<int, const json*> weights;
  for (const auto& p : pending) weights[p.node.id] = &p.weights;
  ShapeMap shapes;
  for (int id : order) {
    Node& n = g.mutable_node(id);
    const json& w = *weights.at(id);
    std::vector<TensorShape> in;
    for (const auto& e : n.inputs) {
      auto it = shapes.find(e.node);
      if (it == shapes.end() || e.port < 0 || static_cast<std::size_t>(e.port) >= it->second.size())
        throw FormatError(node_ctx(id) + "bad reference to node " + std::to_string(e.node), id);
      in.push_back(it->second[e.port]);
    }
    switch (n.kind) {
      case OpKind::Input: {
        const auto& name = n.as<InputParams>().name;
        auto it = std::find_if(g.inputs().begin(), g.inputs().end(), [&](const GraphInput& gi) { return gi.name == name; });
        if (it == g.inputs().end()) throw FormatError(node_ctx(id) + "undeclared input '" + name + "'", id);
        shapes[id] = {it->shape};
        continue;
      }
      case OpKind::Conv2d: {
        auto& p = n.as<Conv2dParams>();
        if (in.size() != 1 || in[0].rank() != 4) throw FormatError(node_ctx(id) + "conv2d expects one rank-4 input", id);
        const auto count = static_cast<std::size_t>(p.out_channels * in[0][1] * p.kernel.h * p.kernel.w);
        p.weight = make_weights(get_array(w, "weight", id).value_or(filler(id, 1, count, -0.5, 0.5)));
        p.bias = make_weights(get_array(w, "bias", id).value_or(filler(id, 2, static_cast<std::size_t>(p.out_channels), -0.1, 0.1)));
        break;
      }
      case OpKind::MatMul: {
        auto& p = n.as<MatMulParams>();
        if (in.size() != 1) throw FormatError(node_ctx(id) + "matmul expects one input", id);
        const auto count = static_cast<std::size_t>(in[0].dims().back() * p.out_features);
        p.weight = make_weights(get_array(w, "weight", id).value_or(filler(id, 1, count, -0.5, 0.5)));
        break;
      }
      case OpKind::BatchNorm: {
        auto& p = n.as<BatchNormParams>();
        if (in.size() != 1 || in[0].rank() < 2) throw FormatError(node_ctx(id) + "batchnorm expects one input of rank >= 2", id);
        const auto c = static_cast<std::size_t>(in[0][1]);
        p.scale = make_weights(get_array(w, "scale", id).value_or(filler(id, 1, c, 0.5, 1.5)));
        p.shift = make_weights(get_array(w, "shift", id).value_or(filler(id, 2, c, -0.5, 0.5)));
        break;
      }
      default:
        break;
    }
    try {
      shapes[id] = infer_node_shapes(n, in);
    } catch (const ShapeMismatch& e) {
      throw FormatError(e.what(), id);
    }
  }
  return g;
}

std::string graph_to_json(const Graph& graph) {
  std::ostringstream out;
  json inputs = json::array();
  for (const auto& gi : graph.inputs()) inputs.push_back({{"name", gi.name}, {"shape", gi.shape.dims()}});
  out << "{\n\"inputs\": " << inputs.dump() << ",\n\"nodes\": [\n";
  bool first = true;
  for (const auto& [id, n] : graph.nodes()) {
    json jn;
    jn["id"] = id;
    jn["kind"] = std::string(to_string(n.kind));
    json params = json::object();
    json weights;
    std::visit(
        [&](const auto& p) {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, InputParams>) {
            params["name"] = p.name;
          } else if constexpr (std::is_same_v<P, Conv2dParams>) {
            params["out_channels"] = p.out_channels;
            params["kernel"] = hw_json(p.kernel);
            params["stride"] = hw_json(p.stride);
            params["padding"] = hw_json(p.padding);
            params["has_activation"] = p.has_activation;
            weights["weight"] = *p.weight;
            weights["bias"] = *p.bias;
          } else if constexpr (std::is_same_v<P, MatMulParams>) {
            params["out_features"] = p.out_features;
            weights["weight"] = *p.weight;
          } else if constexpr (std::is_same_v<P, PoolParams>) {
            params["kernel"] = hw_json(p.kernel);
            params["stride"] = hw_json(p.stride);
            params["padding"] = hw_json(p.padding);
          } else if constexpr (std::is_same_v<P, ConcatParams>) {
            params["axis"] = p.axis;
          } else if constexpr (std::is_same_v<P, SplitParams>) {
            params["axis"] = p.axis;
            params["sizes"] = p.sizes;
          } else if constexpr (std::is_same_v<P, BatchNormParams>) {
            weights["scale"] = *p.scale;
            weights["shift"] = *p.shift;
          }
        },
        n.params);
    jn["params"] = params;
    json ins = json::array();
    for (const auto& e : n.inputs) ins.push_back(edge_json(e));
    jn["inputs"] = ins;
    if (!weights.is_null()) jn["weights"] = weights;
    out << (first ? "" : ",\n") << "  " << jn.dump();
    first = false;
  }
  json outs = json::array();
  for (const auto& o : graph.outputs()) outs.push_back(edge_json(o));
  out << "\n],\n\"outputs\": " << outs.dump() << "\n}\n";
  return out.str();
}

Graph load_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open graph file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return graph_from_json(ss.str());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.node_id());
  }
}

void save_graph(const Graph& graph, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write graph file " + path.string());
  out << graph_to_json(graph);
  if (!out) throw IoError("failed writing graph file " + path.string());
}

}  // namespace enerflow
