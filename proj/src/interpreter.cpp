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
#include "enerflow/interpreter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "enerflow/errors.hpp"

namespace enerflow {

namespace {

using Dims = std::vector<std::int64_t>;

Tensor conv2d(const Tensor& x, const Conv2dParams& p, const TensorShape& out_shape) {
  Tensor y(out_shape);
  const auto n = x.shape[0], cin = x.shape[1], h = x.shape[2], w = x.shape[3];
  const auto cout = out_shape[1], oh = out_shape[2], ow = out_shape[3];
  const auto& wt = *p.weight;
  const auto& bias = *p.bias;
  for (std::int64_t b = 0; b < n; ++b)
    for (std::int64_t o = 0; o < cout; ++o)
      for (std::int64_t i = 0; i < oh; ++i)
        for (std::int64_t j = 0; j < ow; ++j) {
          double acc = bias[o];
          for (std::int64_t c = 0; c < cin; ++c)
            for (std::int64_t ki = 0; ki < p.kernel.h; ++ki) {
              const auto yi = i * p.stride.h - p.padding.h + ki;
              if (yi < 0 || yi >= h) continue;
              for (std::int64_t kj = 0; kj < p.kernel.w; ++kj) {
                const auto xj = j * p.stride.w - p.padding.w + kj;
                if (xj < 0 || xj >= w) continue;
                acc += x.data[((b * cin + c) * h + yi) * w + xj] *
                       wt[((o * cin + c) * p.kernel.h + ki) * p.kernel.w + kj];
              }
            }
          if (p.has_activation) acc = std::max(acc, 0.0);
          y.data[((b * cout + o) * oh + i) * ow + j] = acc;
        }
  return y;
}

// Max ignores padded cells; average divides by the full window (padding counts as zero).
Tensor pool(const Tensor& x, const PoolParams& p, bool is_max, const TensorShape& out_shape) {
  Tensor y(out_shape);
  const auto n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3];
  const auto oh = out_shape[2], ow = out_shape[3];
  const double area = static_cast<double>(p.kernel.h * p.kernel.w);
  for (std::int64_t b = 0; b < n; ++b)
    for (std::int64_t ch = 0; ch < c; ++ch)
      for (std::int64_t i = 0; i < oh; ++i)
        for (std::int64_t j = 0; j < ow; ++j) {
          double acc = is_max ? -std::numeric_limits<double>::infinity() : 0.0;
          for (std::int64_t ki = 0; ki < p.kernel.h; ++ki) {
            const auto yi = i * p.stride.h - p.padding.h + ki;
            if (yi < 0 || yi >= h) continue;
            for (std::int64_t kj = 0; kj < p.kernel.w; ++kj) {
              const auto xj = j * p.stride.w - p.padding.w + kj;
              if (xj < 0 || xj >= w) continue;
              const double v = x.data[((b * c + ch) * h + yi) * w + xj];
              acc = is_max ? std::max(acc, v) : acc + v;
            }
          }
          y.data[((b * c + ch) * oh + i) * ow + j] = is_max ? acc : acc / area;
        }
  return y;
}

Tensor matmul(const Tensor& x, const MatMulParams& p, const TensorShape& out_shape) {
  Tensor y(out_shape);
  const auto k = x.shape.dims().back();
  const auto m = x.shape.numel() / k;
  const auto nout = p.out_features;
  const auto& wt = *p.weight;
  for (std::int64_t r = 0; r < m; ++r)
    for (std::int64_t o = 0; o < nout; ++o) {
      double acc = 0.0;
      for (std::int64_t i = 0; i < k; ++i) acc += x.data[r * k + i] * wt[i * nout + o];
      y.data[r * nout + o] = acc;
    }
  return y;
}

Tensor batchnorm(const Tensor& x, const BatchNormParams& p) {
  Tensor y = x;
  const auto c = x.shape[1];
  const auto outer = x.shape[0];
  const auto inner = x.shape.numel() / (outer * c);
  for (std::int64_t b = 0; b < outer; ++b)
    for (std::int64_t ch = 0; ch < c; ++ch)
      for (std::int64_t i = 0; i < inner; ++i) {
        auto& v = y.data[(b * c + ch) * inner + i];
        v = v * (*p.scale)[ch] + (*p.shift)[ch];
      }
  return y;
}

// (outer, axis, inner) decomposition for concat/split along `axis`.
std::pair<std::int64_t, std::int64_t> outer_inner(const TensorShape& s, int axis) {
  std::int64_t outer = 1, inner = 1;
  for (int d = 0; d < axis; ++d) outer *= s[d];
  for (std::size_t d = axis + 1; d < s.rank(); ++d) inner *= s[d];
  return {outer, inner};
}

Tensor concat(const std::vector<const Tensor*>& xs, int axis, const TensorShape& out_shape) {
  Tensor y(out_shape);
  auto [outer, inner] = outer_inner(out_shape, axis);
  const auto total = out_shape[axis];
  for (std::int64_t o = 0; o < outer; ++o) {
    std::int64_t offset = 0;
    for (const Tensor* x : xs) {
      const auto a = x->shape[axis];
      std::copy_n(x->data.begin() + o * a * inner, a * inner,
                  y.data.begin() + (o * total + offset) * inner);
      offset += a;
    }
  }
  return y;
}

std::vector<Tensor> split(const Tensor& x, const SplitParams& p, const std::vector<TensorShape>& outs) {
  std::vector<Tensor> ys;
  auto [outer, inner] = outer_inner(x.shape, p.axis);
  const auto total = x.shape[p.axis];
  std::int64_t offset = 0;
  for (std::size_t k = 0; k < outs.size(); ++k) {
    Tensor y(outs[k]);
    const auto a = p.sizes[k];
    for (std::int64_t o = 0; o < outer; ++o)
      std::copy_n(x.data.begin() + (o * total + offset) * inner, a * inner, y.data.begin() + o * a * inner);
    offset += a;
    ys.push_back(std::move(y));
  }
  return ys;
}

}  // namespace

std::vector<Tensor> execute(const Graph& graph, const TensorMap& inputs) {
  const ShapeMap shapes = infer_shapes(graph);
  std::map<int, std::vector<Tensor>> values;
  for (int id : graph.topological_order()) {
    const Node& n = graph.node(id);
    const auto& out_shapes = shapes.at(id);
    if (n.kind == OpKind::Input) {
      const auto& name = n.as<InputParams>().name;
      auto it = inputs.find(name);
      if (it == inputs.end()) throw MissingInput(name);
      if (it->second.shape != out_shapes[0] ||
          it->second.data.size() != static_cast<std::size_t>(out_shapes[0].numel()))
        throw ShapeMismatch(id, "input '" + name + "' has shape " + it->second.shape.to_string() +
                                    ", expected " + out_shapes[0].to_string());
      values[id] = {it->second};
      continue;
    }
    std::vector<const Tensor*> in;
    for (const auto& e : n.inputs) in.push_back(&values.at(e.node).at(e.port));
    std::vector<Tensor> out;
    switch (n.kind) {
      case OpKind::Identity:
        out.push_back(*in[0]);
        break;
      case OpKind::Relu: {
        Tensor y = *in[0];
        for (auto& v : y.data) v = std::max(v, 0.0);
        out.push_back(std::move(y));
        break;
      }
      case OpKind::Add: {
        Tensor y = *in[0];
        for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += in[1]->data[i];
        out.push_back(std::move(y));
        break;
      }
      case OpKind::Conv2d:
        out.push_back(conv2d(*in[0], n.as<Conv2dParams>(), out_shapes[0]));
        break;
      case OpKind::MaxPool:
      case OpKind::AvgPool:
        out.push_back(pool(*in[0], n.as<PoolParams>(), n.kind == OpKind::MaxPool, out_shapes[0]));
        break;
      case OpKind::MatMul:
        out.push_back(matmul(*in[0], n.as<MatMulParams>(), out_shapes[0]));
        break;
      case OpKind::BatchNorm:
        out.push_back(batchnorm(*in[0], n.as<BatchNormParams>()));
        break;
      case OpKind::Concat:
        out.push_back(concat(in, n.as<ConcatParams>().axis, out_shapes[0]));
        break;
      case OpKind::Split:
        out = split(*in[0], n.as<SplitParams>(), out_shapes);
        break;
      case OpKind::Input:
        break;
    }
    values[id] = std::move(out);
  }
  std::vector<Tensor> result;
  for (const auto& o : graph.outputs()) result.push_back(values.at(o.node).at(o.port));
  return result;
}

TensorMap random_inputs(const Graph& graph, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  TensorMap m;
  for (const auto& gi : graph.inputs()) {
    Tensor t(gi.shape);
    for (auto& v : t.data) v = dist(rng);
    m.emplace(gi.name, std::move(t));
  }
  return m;
}

bool equivalent(const Graph& a, const Graph& b, int trials, double tol, std::uint64_t seed) {
  if (a.inputs() != b.inputs() || a.outputs().size() != b.outputs().size()) return false;
  for (int t = 0; t < trials; ++t) {
    const TensorMap in = random_inputs(a, seed + static_cast<std::uint64_t>(t) * 0x9e3779b97f4a7c15ULL);
    const auto ya = execute(a, in);
    const auto yb = execute(b, in);
    for (std::size_t k = 0; k < ya.size(); ++k) {
      if (ya[k].shape != yb[k].shape) return false;
      for (std::size_t i = 0; i < ya[k].data.size(); ++i) {
        const double x = ya[k].data[i], y = yb[k].data[i];
        if (std::abs(x - y) > tol * std::max({std::abs(x), std::abs(y), 1.0})) return false;
      }
    }
  }
  return true;
}

}  // namespace enerflow
