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
#include <algorithm>

#include "enerflow/graph.hpp"
#include "hashing.hpp"

namespace enerflow {

namespace {

void absorb_weights(detail::Hasher& h, const Weights& w) {
  if (w)
    h.doubles(*w);
  else
    h.u64(~0ULL);
}

void absorb_hw(detail::Hasher& h, Hw v) { h.i64(v.h).i64(v.w); }

void absorb_params(detail::Hasher& h, const Node& n) {
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, InputParams>) {
          h.bytes(p.name);
        } else if constexpr (std::is_same_v<P, Conv2dParams>) {
          h.i64(p.out_channels);
          absorb_hw(h, p.kernel);
          absorb_hw(h, p.stride);
          absorb_hw(h, p.padding);
          h.u64(p.has_activation);
          absorb_weights(h, p.weight);
          absorb_weights(h, p.bias);
        } else if constexpr (std::is_same_v<P, MatMulParams>) {
          h.i64(p.out_features);
          absorb_weights(h, p.weight);
        } else if constexpr (std::is_same_v<P, PoolParams>) {
          absorb_hw(h, p.kernel);
          absorb_hw(h, p.stride);
          absorb_hw(h, p.padding);
        } else if constexpr (std::is_same_v<P, ConcatParams>) {
          h.i64(p.axis);
        } else if constexpr (std::is_same_v<P, SplitParams>) {
          h.i64(p.axis).u64(p.sizes.size());
          for (auto s : p.sizes) h.i64(s);
        } else if constexpr (std::is_same_v<P, BatchNormParams>) {
          absorb_weights(h, p.scale);
          absorb_weights(h, p.shift);
        }
      },
      n.params);
}

}  // namespace

// Merkle-style: each node's digest covers its kind, parameters, weights and the digests of
// its producers, never its id. The graph digest combines the declared inputs, the ordered
// output digests and the sorted multiset of all node digests (which separates shared from
// duplicated subgraphs).
std::uint64_t canonical_hash(const Graph& graph) {
  std::map<int, std::uint64_t> node_hash;
  for (int id : graph.topological_order()) {
    const Node& n = graph.node(id);
    detail::Hasher h;
    h.u64(static_cast<std::uint64_t>(n.kind));
    absorb_params(h, n);
    h.u64(n.inputs.size());
    for (const auto& e : n.inputs) h.u64(node_hash.at(e.node)).i64(e.port);
    node_hash[id] = h.digest();
  }

  detail::Hasher g;
  g.u64(graph.inputs().size());
  for (const auto& gi : graph.inputs()) {
    g.bytes(gi.name).u64(gi.shape.rank());
    for (auto d : gi.shape.dims()) g.i64(d);
  }
  g.u64(graph.outputs().size());
  for (const auto& o : graph.outputs()) g.u64(node_hash.at(o.node)).i64(o.port);
  std::vector<std::uint64_t> all;
  all.reserve(node_hash.size());
  for (const auto& [id, h] : node_hash) all.push_back(h);
  std::sort(all.begin(), all.end());
  g.u64(all.size());
  for (auto h : all) g.u64(h);
  return g.digest();
}

}  // namespace enerflow
