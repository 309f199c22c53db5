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
#include <string_view>

#include "enerflow/graph.hpp"

namespace enerflow {

/// Fire-module-like block: squeeze conv, two parallel expand convs, concat, pool. 12 operators.
Graph toy_squeeze();
/// Stem conv and two residual blocks joined by add. 10 operators.
Graph toy_resnet();
/// n repetitions of conv(3x3, 4 channels) followed by relu; 2n operators.
Graph conv_relu_chain(int n);

/// "toy-squeeze", "toy-resnet" or "chain:N". Throws Error on an unknown name.
Graph generate_model(std::string_view name);

/// Random valid graph with exactly `n_ops` operators on a small 1x4x6x6 input, drawn from
/// convs (with and without fused activation), parallel conv pairs, relu, identity, batchnorm,
/// add, concat and split-concat pairs. Every dangling tensor becomes an output.
Graph random_graph(std::uint64_t seed, int n_ops);

}  // namespace enerflow
