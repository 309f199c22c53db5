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
#include "enerflow/builder.hpp"

namespace enerflow {

std::vector<double> GraphBuilder::uniform(std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng_);
  return v;
}

int GraphBuilder::add(OpKind kind, std::vector<EdgeRef> inputs, OpParams params) {
  int id = graph_.add_node(kind, inputs, std::move(params));
  std::vector<TensorShape> in;
  for (const auto& e : inputs) in.push_back(shape(e));
  shapes_[id] = infer_node_shapes(graph_.node(id), in);
  return id;
}

EdgeRef GraphBuilder::input(std::string name, TensorShape s) {
  EdgeRef e = graph_.add_input(std::move(name), s);
  shapes_[e.node] = {std::move(s)};
  return e;
}

EdgeRef GraphBuilder::conv2d(EdgeRef x, const ConvSpec& spec) {
  const auto cin = shape(x)[1];
  const auto n = static_cast<std::size_t>(spec.out_channels * cin * spec.kernel.h * spec.kernel.w);
  auto w = uniform(n, -0.5, 0.5);
  auto b = uniform(static_cast<std::size_t>(spec.out_channels), -0.1, 0.1);
  return conv2d(x, spec, std::move(w), std::move(b));
}

EdgeRef GraphBuilder::conv2d(EdgeRef x, const ConvSpec& spec, std::vector<double> weight,
                             std::vector<double> bias) {
  Conv2dParams p;
  p.out_channels = spec.out_channels;
  p.kernel = spec.kernel;
  p.stride = spec.stride;
  p.padding = spec.padding;
  p.has_activation = spec.has_activation;
  p.weight = make_weights(std::move(weight));
  p.bias = make_weights(std::move(bias));
  return {add(OpKind::Conv2d, {x}, std::move(p)), 0};
}

EdgeRef GraphBuilder::matmul(EdgeRef x, std::int64_t out_features) {
  const auto k = shape(x).dims().back();
  MatMulParams p{out_features, make_weights(uniform(static_cast<std::size_t>(k * out_features), -0.5, 0.5))};
  return {add(OpKind::MatMul, {x}, std::move(p)), 0};
}

EdgeRef GraphBuilder::relu(EdgeRef x) { return {add(OpKind::Relu, {x}, {}), 0}; }
EdgeRef GraphBuilder::identity(EdgeRef x) { return {add(OpKind::Identity, {x}, {}), 0}; }
EdgeRef GraphBuilder::add(EdgeRef a, EdgeRef b) { return {add(OpKind::Add, {a, b}, {}), 0}; }

EdgeRef GraphBuilder::concat(std::vector<EdgeRef> xs, int axis) {
  return {add(OpKind::Concat, std::move(xs), ConcatParams{axis}), 0};
}

std::vector<EdgeRef> GraphBuilder::split(EdgeRef x, std::vector<std::int64_t> sizes, int axis) {
  const auto parts = sizes.size();
  int id = add(OpKind::Split, {x}, SplitParams{axis, std::move(sizes)});
  std::vector<EdgeRef> outs;
  for (std::size_t i = 0; i < parts; ++i) outs.push_back({id, static_cast<int>(i)});
  return outs;
}

EdgeRef GraphBuilder::maxpool(EdgeRef x, PoolParams p) { return {add(OpKind::MaxPool, {x}, p), 0}; }
EdgeRef GraphBuilder::avgpool(EdgeRef x, PoolParams p) { return {add(OpKind::AvgPool, {x}, p), 0}; }

EdgeRef GraphBuilder::batchnorm(EdgeRef x) {
  const auto c = static_cast<std::size_t>(shape(x)[1]);
  auto scale = uniform(c, 0.5, 1.5);
  auto shift = uniform(c, -0.5, 0.5);
  return batchnorm(x, std::move(scale), std::move(shift));
}

EdgeRef GraphBuilder::batchnorm(EdgeRef x, std::vector<double> scale, std::vector<double> shift) {
  BatchNormParams p{make_weights(std::move(scale)), make_weights(std::move(shift))};
  return {add(OpKind::BatchNorm, {x}, std::move(p)), 0};
}

}  // namespace enerflow
