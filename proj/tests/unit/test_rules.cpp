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

#include "doctest.h"
#include "enerflow/builder.hpp"
#include "enerflow/errors.hpp"
#include "enerflow/generators.hpp"
#include "enerflow/graph_io.hpp"
#include "enerflow/interpreter.hpp"
#include "enerflow/rules.hpp"
#include "test_support.hpp"

using namespace enerflow;

namespace {

const SubstitutionRule& rule_named(const std::vector<SubstitutionRule>& rules, std::string_view name) {
  auto it = std::find_if(rules.begin(), rules.end(), [&](const SubstitutionRule& r) { return r.name == name; });
  REQUIRE(it != rules.end());
  return *it;
}

ConvSpec same3x3(std::int64_t oc, bool act = false) { return {oc, {3, 3}, {1, 1}, {1, 1}, act}; }

}  // namespace

TEST_SUITE("rules") {
  TEST_CASE("catalog") {
    const auto rules = default_rules();
    CHECK(rules.size() >= 6);
    for (const char* name : {"fuse-conv-relu", "split-conv-activation", "merge-parallel-convs", "split-merged-conv",
                             "fold-identity", "fuse-conv-batchnorm", "eliminate-split-concat"})
      CHECK(std::any_of(rules.begin(), rules.end(), [&](const SubstitutionRule& r) { return r.name == name; }));
    CHECK(fusion_rules().size() == rules.size() - 2);
    CHECK(select_rules("none").empty());
    CHECK(select_rules("all").size() == rules.size());
    auto picked = select_rules("fold-identity,fuse-conv-relu");
    REQUIRE(picked.size() == 2);
    CHECK(picked[0].name == "fold-identity");
    CHECK_THROWS_AS(select_rules("fuse-everything"), Error);
  }

  TEST_CASE("fuse-conv-relu matches a sole-consumer relu only") {
    const auto rules = default_rules();
    const auto& fuse = rule_named(rules, "fuse-conv-relu");
    GraphBuilder b(1);
    EdgeRef x = b.input("x", {1, 3, 6, 6});
    EdgeRef c = b.conv2d(x, same3x3(4));
    b.output(b.relu(c));
    Graph g = b.build();
    auto sites = match_rule(fuse, g);
    REQUIRE(sites.size() == 1);
    Graph fused = apply(fuse, g, sites[0]);
    CHECK(fused.operator_count() == g.operator_count() - 1);
    CHECK(fused.node(c.node).as<Conv2dParams>().has_activation);
    CHECK(equivalent(g, fused));
    CHECK(g.operator_count() == 2);

    GraphBuilder s(1);
    EdgeRef y = s.input("x", {1, 3, 6, 6});
    EdgeRef cy = s.conv2d(y, same3x3(3));
    EdgeRef r = s.relu(cy);
    s.output(s.add(r, cy));
    CHECK(match_rule(fuse, s.build()).empty());
  }

  TEST_CASE("fuse then split restores the original structure") {
    const auto rules = default_rules();
    const auto& fuse = rule_named(rules, "fuse-conv-relu");
    const auto& split = rule_named(rules, "split-conv-activation");
    Graph g = conv_relu_chain(1);
    Graph fused = apply(fuse, g, match_rule(fuse, g).at(0));
    auto sites = match_rule(split, fused);
    REQUIRE(sites.size() == 1);
    Graph back = apply(split, fused, sites[0]);
    CHECK(canonical_hash(back) == canonical_hash(g));
  }

  TEST_CASE("merge-parallel-convs and its inverse") {
    const auto rules = default_rules();
    const auto& merge = rule_named(rules, "merge-parallel-convs");
    const auto& unmerge = rule_named(rules, "split-merged-conv");
    GraphBuilder b(2);
    EdgeRef x = b.input("x", {1, 3, 6, 6});
    EdgeRef p = b.conv2d(x, same3x3(4));
    EdgeRef q = b.conv2d(x, same3x3(2));
    b.output(b.add(b.relu(p), p));
    b.output(q);
    Graph g = b.build();
    auto sites = match_rule(merge, g);
    REQUIRE(sites.size() == 1);
    Graph merged = apply(merge, g, sites[0]);
    CHECK(validate(merged).empty());
    CHECK(equivalent(g, merged));
    auto back_sites = match_rule(unmerge, merged);
    REQUIRE(back_sites.size() == 1);
    Graph back = apply(unmerge, merged, back_sites[0]);
    CHECK(equivalent(back, g));
    CHECK(back.operator_count() == g.operator_count());

    GraphBuilder d(2);
    EdgeRef y = d.input("x", {1, 3, 6, 6});
    d.output(d.conv2d(y, same3x3(4)));
    d.output(d.conv2d(y, {4, {1, 1}, {1, 1}, {0, 0}, false}));
    CHECK(match_rule(merge, d.build()).empty());
  }

  TEST_CASE("fold-identity rewires consumers") {
    const auto rules = default_rules();
    const auto& fold = rule_named(rules, "fold-identity");
    GraphBuilder b(3);
    EdgeRef x = b.input("x", {1, 2, 4, 4});
    EdgeRef r = b.relu(x);
    EdgeRef i = b.identity(r);
    b.output(b.relu(i));
    b.output(i);
    Graph g = b.build();
    auto sites = match_rule(fold, g);
    REQUIRE(sites.size() == 1);
    Graph folded = apply(fold, g, sites[0]);
    CHECK_FALSE(folded.contains(i.node));
    CHECK(folded.outputs()[1] == r);
    CHECK(equivalent(g, folded));
  }

  TEST_CASE("fuse-conv-batchnorm folds scale and shift") {
    const auto rules = default_rules();
    const auto& fold = rule_named(rules, "fuse-conv-batchnorm");
    GraphBuilder b(4);
    EdgeRef x = b.input("x", {1, 1, 2, 2});
    EdgeRef c = b.conv2d(x, {2, {1, 1}, {1, 1}, {0, 0}, false}, {1.0, -2.0}, {0.5, 0.25});
    b.output(b.batchnorm(c, {3.0, 0.5}, {1.0, -1.0}));
    Graph g = b.build();
    auto sites = match_rule(fold, g);
    REQUIRE(sites.size() == 1);
    Graph folded = apply(fold, g, sites[0]);
    CHECK(folded.operator_count() == 1);
    const auto& p = folded.node(c.node).as<Conv2dParams>();
    CHECK(*p.weight == std::vector<double>{3.0, -1.0});
    CHECK(*p.bias == std::vector<double>{2.5, -0.875});
    CHECK(equivalent(g, folded, 50, 1e-4));
  }

  TEST_CASE("eliminate-split-concat needs every part in order") {
    const auto rules = default_rules();
    const auto& elim = rule_named(rules, "eliminate-split-concat");
    GraphBuilder b(5);
    EdgeRef x = b.input("x", {1, 6, 3, 3});
    auto parts = b.split(b.relu(x), {2, 4});
    b.output(b.concat({parts[0], parts[1]}));
    Graph g = b.build();
    auto sites = match_rule(elim, g);
    REQUIRE(sites.size() == 1);
    Graph out = apply(elim, g, sites[0]);
    CHECK(out.operator_count() == 1);
    CHECK(equivalent(g, out));

    GraphBuilder s(5);
    EdgeRef y = s.input("x", {1, 6, 3, 3});
    auto ps = s.split(s.relu(y), {3, 3});
    s.output(s.concat({ps[1], ps[0]}));
    CHECK(match_rule(elim, s.build()).empty());
  }

  TEST_CASE("stale sites are rejected and apply is pure") {
    const auto rules = default_rules();
    const auto& fuse = rule_named(rules, "fuse-conv-relu");
    Graph g = conv_relu_chain(2);
    const std::string before = graph_to_json(g);
    auto sites = match_rule(fuse, g);
    REQUIRE(sites.size() == 2);
    Graph once = apply(fuse, g, sites[0]);
    CHECK(graph_to_json(g) == before);
    CHECK_THROWS_AS(apply(fuse, once, sites[0]), InvalidSite);
  }

  TEST_CASE("neighbors are deduplicated and deterministic") {
    GraphBuilder b(6);
    EdgeRef x = b.input("x", {1, 2, 4, 4});
    b.output(b.relu(b.identity(b.identity(x))));
    Graph g = b.build();
    const auto rules = default_rules();
    auto first = expand(g, rules);
    CHECK(first.size() == 1);
    auto second = expand(g, rules);
    REQUIRE(second.size() == first.size());
    for (std::size_t i = 0; i < first.size(); ++i) CHECK(first[i].hash == second[i].hash);

    GraphBuilder lone(7);
    lone.output(lone.relu(lone.input("x", {1, 2, 4, 4})));
    CHECK(neighbors(lone.build(), rules).empty());

    auto chain = neighbors(conv_relu_chain(1), rules);
    REQUIRE(chain.size() == 1);
    CHECK(chain[0].operator_count() == 1);
  }

  TEST_CASE("toy-squeeze offers a merge site") {
    const auto rules = default_rules();
    CHECK_FALSE(match_rule(rule_named(rules, "merge-parallel-convs"), toy_squeeze()).empty());
  }

  TEST_CASE("every rule is sound on random sites") {
    for (const auto& rule : default_rules()) {
      CAPTURE(rule.name);
      auto cases = testing::rule_instances(rule, 50);
      CHECK(cases.size() == 50);
      for (const auto& [g, site] : cases) {
        Graph out = apply(rule, g, site);
        CHECK(validate(out).empty());
        CHECK(equivalent(g, out, 50, 1e-4));
      }
    }
  }
}
