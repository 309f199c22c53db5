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

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "enerflow/graph.hpp"

namespace enerflow {

/// Structural cost key of a node: kind, input shapes and hyperparameters. Weights and
/// node ids are excluded, so equal-parameter nodes in different graphs share cost records.
///
/// Canonical form, e.g.
///   conv2d|in=1x3x32x32|oc=16|k=3x3|s=1x1|p=1x1|act=0
///   concat|in=1x4x8x8,1x4x8x8|axis=1
struct NodeSignature {
  OpKind kind = OpKind::Identity;
  std::vector<TensorShape> input_shapes;
  /// Ordered (name, values) hyperparameters.
  std::vector<std::pair<std::string, std::vector<std::int64_t>>> params;
  std::string key;

  /// nullptr when absent.
  const std::vector<std::int64_t>* param(std::string_view name) const;
  std::int64_t param_or(std::string_view name, std::int64_t fallback) const;

  friend bool operator==(const NodeSignature& a, const NodeSignature& b) { return a.key == b.key; }
};

NodeSignature signature(const Node& node, const ShapeMap& shapes);
NodeSignature signature(const Node& node, const Graph& graph);

/// Inverse of NodeSignature::key. Throws FormatError.
NodeSignature parse_signature(std::string_view key);

}  // namespace enerflow
