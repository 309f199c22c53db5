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
#include "enerflow/signature.hpp"

#include <charconv>

#include "enerflow/errors.hpp"

namespace enerflow {

namespace {

using ParamList = std::vector<std::pair<std::string, std::vector<std::int64_t>>>;

ParamList node_params(const Node& n) {
  ParamList p;
  switch (n.kind) {
    case OpKind::Conv2d: {
      const auto& c = n.as<Conv2dParams>();
      p.push_back({"oc", {c.out_channels}});
      p.push_back({"k", {c.kernel.h, c.kernel.w}});
      p.push_back({"s", {c.stride.h, c.stride.w}});
      p.push_back({"p", {c.padding.h, c.padding.w}});
      p.push_back({"act", {c.has_activation ? 1 : 0}});
      break;
    }
    case OpKind::MatMul:
      p.push_back({"out", {n.as<MatMulParams>().out_features}});
      break;
    case OpKind::MaxPool:
    case OpKind::AvgPool: {
      const auto& q = n.as<PoolParams>();
      p.push_back({"k", {q.kernel.h, q.kernel.w}});
      p.push_back({"s", {q.stride.h, q.stride.w}});
      p.push_back({"p", {q.padding.h, q.padding.w}});
      break;
    }
    case OpKind::Concat:
      p.push_back({"axis", {n.as<ConcatParams>().axis}});
      break;
    case OpKind::Split: {
      const auto& s = n.as<SplitParams>();
      p.push_back({"axis", {s.axis}});
      p.push_back({"sizes", s.sizes});
      break;
    }
    default:
      break;
  }
  return p;
}

// Separator between the values of one parameter: "x" for spatial pairs, "," for lists.
char value_separator(std::string_view name) { return name == "sizes" ? ',' : 'x'; }

std::string encode(OpKind kind, const std::vector<TensorShape>& in, const ParamList& params) {
  std::string key(to_string(kind));
  key += "|in=";
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (i) key += ',';
    key += in[i].to_string();
  }
  for (const auto& [name, values] : params) {
    key += '|';
    key += name;
    key += '=';
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) key += value_separator(name);
      key += std::to_string(values[i]);
    }
  }
  return key;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::vector<std::int64_t> parse_ints(std::string_view s, char sep, std::string_view key) {
  std::vector<std::int64_t> out;
  for (auto part : split(s, sep)) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc() || ptr != part.data() + part.size())
      throw FormatError("malformed signature '" + std::string(key) + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace

const std::vector<std::int64_t>* NodeSignature::param(std::string_view name) const {
  for (const auto& [n, v] : params)
    if (n == name) return &v;
  return nullptr;
}

std::int64_t NodeSignature::param_or(std::string_view name, std::int64_t fallback) const {
  const auto* v = param(name);
  return v && !v->empty() ? v->front() : fallback;
}

NodeSignature signature(const Node& node, const ShapeMap& shapes) {
  NodeSignature sig;
  sig.kind = node.kind;
  for (const auto& e : node.inputs) sig.input_shapes.push_back(shape_of(shapes, e));
  if (node.kind == OpKind::Input) sig.input_shapes.push_back(shapes.at(node.id).front());
  sig.params = node_params(node);
  sig.key = encode(sig.kind, sig.input_shapes, sig.params);
  return sig;
}

NodeSignature signature(const Node& node, const Graph& graph) { return signature(node, infer_shapes(graph)); }

NodeSignature parse_signature(std::string_view key) {
  auto fields = split(key, '|');
  auto kind = parse_op_kind(fields.front());
  if (!kind || fields.size() < 2 || fields[1].substr(0, 3) != "in=")
    throw FormatError("malformed signature '" + std::string(key) + "'");
  NodeSignature sig;
  sig.kind = *kind;
  auto shapes = fields[1].substr(3);
  if (!shapes.empty())
    for (auto s : split(shapes, ',')) sig.input_shapes.emplace_back(parse_ints(s, 'x', key));
  for (std::size_t i = 2; i < fields.size(); ++i) {
    auto eq = fields[i].find('=');
    if (eq == std::string_view::npos) throw FormatError("malformed signature '" + std::string(key) + "'");
    std::string name(fields[i].substr(0, eq));
    sig.params.push_back({name, parse_ints(fields[i].substr(eq + 1), value_separator(name), key)});
  }
  sig.key = encode(sig.kind, sig.input_shapes, sig.params);
  if (sig.key != key) throw FormatError("non-canonical signature '" + std::string(key) + "'");
  return sig;
}

}  // namespace enerflow
