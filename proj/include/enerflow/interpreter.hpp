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
#include <map>
#include <string>
#include <vector>

#include "enerflow/graph.hpp"

namespace enerflow {

struct Tensor {
  TensorShape shape;
  std::vector<double> data;  // row-major

  Tensor() = default;
  explicit Tensor(TensorShape s) : shape(std::move(s)), data(static_cast<std::size_t>(shape.numel()), 0.0) {}
  Tensor(TensorShape s, std::vector<double> values) : shape(std::move(s)), data(std::move(values)) {}
  friend bool operator==(const Tensor&, const Tensor&) = default;
};

using TensorMap = std::map<std::string, Tensor>;

/// Reference double-precision evaluation. Returns one tensor per graph output, in order.
/// Throws MissingInput or ShapeMismatch.
std::vector<Tensor> execute(const Graph& graph, const TensorMap& inputs);

/// Uniform [-1, 1) tensors for every graph input.
TensorMap random_inputs(const Graph& graph, std::uint64_t seed);

/// Randomized refutation of equivalence: runs both graphs on `trials` random inputs and
/// compares outputs elementwise with |a - b| <= tol * max(|a|, |b|, 1). A `false` result is a
/// proof of inequivalence; `true` is only evidence.
bool equivalent(const Graph& a, const Graph& b, int trials = 50, double tol = 1e-4,
                std::uint64_t seed = 0x5eed);

}  // namespace enerflow
