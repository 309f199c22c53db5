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
#include <random>
#include <vector>

#include "enerflow/graph.hpp"

namespace enerflow {

struct ConvSpec {
  std::int64_t out_channels = 1;
  Hw kernel{1, 1};
  Hw stride{1, 1};
  Hw padding{0, 0};
  bool has_activation = false;
};

/// Incremental graph construction with shape tracking. Weights not given explicitly are
/// drawn from a generator seeded at construction, so builds are reproducible.
class GraphBuilder {
 public:
  explicit GraphBuilder(std::uint64_t weight_seed = 0) : rng_(weight_seed) {}

  EdgeRef input(std::string name, TensorShape shape);
  EdgeRef conv2d(EdgeRef x, const ConvSpec& spec);
  EdgeRef conv2d(EdgeRef x, const ConvSpec& spec, std::vector<double> weight, std::vector<double> bias);
  EdgeRef matmul(EdgeRef x, std::int64_t out_features);
  EdgeRef relu(EdgeRef x);
  EdgeRef identity(EdgeRef x);
  EdgeRef add(EdgeRef a, EdgeRef b);
  EdgeRef concat(std::vector<EdgeRef> xs, int axis = 1);
  std::vector<EdgeRef> split(EdgeRef x, std::vector<std::int64_t> sizes, int axis = 1);
  EdgeRef maxpool(EdgeRef x, PoolParams p);
  EdgeRef avgpool(EdgeRef x, PoolParams p);
  EdgeRef batchnorm(EdgeRef x);
  EdgeRef batchnorm(EdgeRef x, std::vector<double> scale, std::vector<double> shift);
  void output(EdgeRef e) { graph_.add_output(e); }

  const TensorShape& shape(EdgeRef e) const { return shape_of(shapes_, e); }
  const Graph& graph() const { return graph_; }
  Graph build() const { return graph_; }

 private:
  int add(OpKind kind, std::vector<EdgeRef> inputs, OpParams params);
  std::vector<double> uniform(std::size_t n, double lo, double hi);

  Graph graph_;
  ShapeMap shapes_;
  std::mt19937_64 rng_;
};

}  // namespace enerflow
