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

#include <filesystem>
#include <string>
#include <string_view>

#include "enerflow/graph.hpp"

namespace enerflow {

// Graph file format:
//
//   {"inputs":  [{"name": "x", "shape": [1, 3, 8, 8]}],
//    "nodes":   [{"id": 0, "kind": "input", "params": {"name": "x"}, "inputs": []},
//                {"id": 1, "kind": "conv2d",
//                 "params": {"out_channels": 8, "kernel": [3, 3], "stride": [1, 1],
//                            "padding": [1, 1], "has_activation": false},
//                 "inputs": [0], "weights": {"weight": [...], "bias": [...]}}],
//    "outputs": [1]}
//
// Edge references are a node id (port 0) or an [id, port] pair. Weight arrays are inline
// numbers or a "base64:" string of little-endian float64 values. Missing weights are filled
// deterministically from the node id.

/// Throws FormatError (carrying the offending node id when there is one).
Graph graph_from_json(std::string_view text);
std::string graph_to_json(const Graph& graph);

Graph load_graph(const std::filesystem::path& path);
void save_graph(const Graph& graph, const std::filesystem::path& path);

std::string encode_base64_f64(const std::vector<double>& values);
std::vector<double> decode_base64_f64(std::string_view text);

}  // namespace enerflow
