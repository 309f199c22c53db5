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
#include "enerflow/generators.hpp"

#include <random>
#include <set>
#include <string>

#include "enerflow/builder.hpp"
#include "enerflow/errors.hpp"

namespace enerflow {

namespace {

ConvSpec conv3x3(std::int64_t oc, bool act = false) { return {oc, {3, 3}, {1, 1}, {1, 1}, act}; }
ConvSpec conv1x1(std::int64_t oc, bool act = false) { return {oc, {1, 1}, {1, 1}, {0, 0}, act}; }

}  // namespace

Graph toy_squeeze() {
  GraphBuilder b(0x5a);
  EdgeRef x = b.input("x", {1, 3, 32, 32});
  x = b.relu(b.conv2d(x, conv3x3(16)));
  EdgeRef squeeze = b.relu(b.conv2d(x, conv1x1(8)));
  EdgeRef left = b.relu(b.conv2d(squeeze, conv3x3(16)));
  EdgeRef right = b.relu(b.conv2d(squeeze, conv3x3(16)));
  EdgeRef y = b.maxpool(b.concat({left, right}), PoolParams{{2, 2}, {2, 2}, {0, 0}});
  y = b.batchnorm(b.conv2d(y, conv1x1(16)));
  b.output(y);
  return b.build();
}

Graph toy_resnet() {
  GraphBuilder b(0x7e);
  EdgeRef x = b.input("x", {1, 8, 16, 16});
  EdgeRef stem = b.conv2d(x, conv3x3(8, true));
  EdgeRef h = b.conv2d(b.conv2d(stem, conv3x3(8, true)), conv3x3(8));
  EdgeRef r1 = b.relu(b.add(h, stem));
  h = b.conv2d(b.conv2d(r1, conv3x3(8, true)), conv3x3(8));
  EdgeRef r2 = b.relu(b.add(h, r1));
  b.output(b.avgpool(r2, PoolParams{{2, 2}, {2, 2}, {0, 0}}));
  return b.build();
}

Graph conv_relu_chain(int n) {
  if (n < 1) throw Error("chain length must be at least 1");
  GraphBuilder b(0xc4);
  EdgeRef x = b.input("x", {1, 4, 8, 8});
  for (int i = 0; i < n; ++i) x = b.relu(b.conv2d(x, conv3x3(4)));
  b.output(x);
  return b.build();
}

Graph generate_model(std::string_view name) {
  if (name == "toy-squeeze") return toy_squeeze();
  if (name == "toy-resnet") return toy_resnet();
  if (name.rfind("chain:", 0) == 0) {
    const std::string count(name.substr(6));
    std::size_t used = 0;
    int n = 0;
    try {
      n = std::stoi(count, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != count.size() || n < 1 || n > 10000)
      throw Error("bad chain length in '" + std::string(name) + "'");
    return conv_relu_chain(n);
  }
  throw Error("unknown model '" + std::string(name) + "'; expected toy-squeeze, toy-resnet or chain:N");
}

Graph random_graph(std::uint64_t seed, int n_ops) {
  if (n_ops < 1) throw Error("random graph needs at least one operator");
  GraphBuilder b(seed ^ 0x9e3779b97f4a7c15ULL);
  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
  auto coin = [&](double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p; };

  std::vector<EdgeRef> edges{b.input("x", {1, 4, 6, 6})};
  std::set<EdgeRef> consumed;
  auto use = [&](EdgeRef e) {
    consumed.insert(e);
    return e;
  };
  // Recent tensors are favored so graphs grow deep rather than wide.
  auto recent = [&]() {
    const std::size_t window = std::min<std::size_t>(edges.size(), 3);
    return edges[edges.size() - 1 - pick(window)];
  };
  auto random_conv = [&]() {
    const std::int64_t oc = coin(0.5) ? 2 : 4;
    return coin(0.5) ? conv3x3(oc, coin(0.5)) : conv1x1(oc, coin(0.5));
  };

  int remaining = n_ops;
  while (remaining > 0) {
    const std::size_t choice = pick(100);
    if (choice < 30) {
      edges.push_back(b.conv2d(use(recent()), random_conv()));
      remaining -= 1;
    } else if (choice < 42 && remaining >= 2) {
      EdgeRef src = use(recent());
      ConvSpec spec = random_conv();
      edges.push_back(b.conv2d(src, spec));
      spec.out_channels = coin(0.5) ? 2 : 4;
      edges.push_back(b.conv2d(src, spec));
      remaining -= 2;
    } else if (choice < 57) {
      edges.push_back(b.relu(use(recent())));
      remaining -= 1;
    } else if (choice < 64) {
      edges.push_back(b.identity(use(recent())));
      remaining -= 1;
    } else if (choice < 74) {
      edges.push_back(b.batchnorm(use(recent())));
      remaining -= 1;
    } else if (choice < 86) {
      std::vector<std::pair<EdgeRef, EdgeRef>> pairs;
      for (std::size_t i = 0; i < edges.size(); ++i)
        for (std::size_t j = i + 1; j < edges.size(); ++j)
          if (b.shape(edges[i]) == b.shape(edges[j])) pairs.emplace_back(edges[i], edges[j]);
      if (pairs.empty()) continue;
      auto [l, r] = pairs[pick(pairs.size())];
      edges.push_back(b.add(use(l), use(r)));
      remaining -= 1;
    } else if (choice < 93) {
      EdgeRef l = recent(), r = recent();
      edges.push_back(b.concat({use(l), use(r)}));
      remaining -= 1;
    } else if (remaining >= 2) {
      EdgeRef src = recent();
      const std::int64_t c = b.shape(src)[1];
      if (c < 2 || c % 2 != 0) continue;
      auto parts = b.split(use(src), {c / 2, c / 2});
      edges.push_back(b.concat({parts[0], parts[1]}));
      remaining -= 2;
    }
  }
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (!consumed.count(edges[i])) b.output(edges[i]);
  return b.build();
}

}  // namespace enerflow
