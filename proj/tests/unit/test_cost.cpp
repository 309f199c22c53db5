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
#include <cmath>

#include "doctest.h"
#include "enerflow/builder.hpp"
#include "enerflow/cost.hpp"
#include "enerflow/errors.hpp"
#include "enerflow/graph_io.hpp"
#include "enerflow/profile.hpp"
#include "enerflow/signature.hpp"
#include "test_support.hpp"

using namespace enerflow;

namespace {

struct Table1 {
  Graph graph = load_graph(testing::data_file("table1_graph.json"));
  CostDatabase db = load_database(testing::data_file("table1_db.jsonl"));
  std::string sig(int id) const { return signature(graph.node(id), graph).key; }
};

AlgorithmAssignment assign(int a1, int a2, int a3) { return {{1, a1}, {2, a2}, {3, a3}}; }

bool close(double a, double b, double rel = 1e-12) { return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)); }

}  // namespace

TEST_SUITE("cost") {
  TEST_CASE("lookup mirrors the sample table") {
    Table1 t;
    const auto& c1a = t.db.lookup(t.sig(1), 0);
    CHECK(c1a.record.time_ms == 0.0195);
    CHECK(c1a.record.power_w == 144.5);
    CHECK(c1a.label == "a");
    CHECK_THROWS_AS(t.db.lookup(t.sig(1), 2), NotApplicable);
    const auto& c3c = t.db.lookup(t.sig(3), 2);
    CHECK(c3c.record.time_ms == 0.083);
    CHECK(c3c.record.power_w == 144.0);
    CHECK_THROWS_AS(t.db.lookup("relu|in=1x1x1x1", 0), MissingEntry);
  }

  TEST_CASE("modeled time and energy are sums of records") {
    Table1 t;
    CHECK(close(model_time(t.graph, assign(0, 0, 2), t.db), 0.11191));
    CHECK(close(model_energy(t.graph, assign(1, 0, 2), t.db), 14.195));
    CHECK(close(model_energy(t.graph, assign(0, 0, 2), t.db), 15.255));
    CHECK(t.db.lookup(t.sig(1), 1).record.energy() == 1.75);
  }

  TEST_CASE("single-node power equals the stored power") {
    Table1 t;
    Graph one;
    EdgeRef x = one.add_input("x", {1, 3, 32, 32});
    one.add_output({one.add_node(OpKind::Conv2d, {x}, t.graph.node(1).params), 0});
    AlgorithmAssignment a{{1, 0}};
    CHECK(model_power(one, a, t.db) == 144.5);
    CHECK(model_time(one, a, t.db) == 0.0195);
    a[1] = 1;
    CHECK(model_power(one, a, t.db) == 84.0);
    CHECK(model_energy(one, a, t.db) == 1.75);
  }

  TEST_CASE("two identical nodes have the shared power") {
    GraphBuilder b(1);
    EdgeRef x = b.input("x", {1, 2, 4, 4});
    b.output(b.relu(b.relu(x)));
    Graph g = b.build();
    CostDatabase db;
    db.put("relu|in=1x2x4x4", 0, {0.3, 77.7, std::nullopt});
    CHECK(model_power(g, {{1, 0}, {2, 0}}, db) == 77.7);
  }

  TEST_CASE("empty graph models to zero") {
    Graph g;
    g.add_input("x", {1, 2});
    CostDatabase db;
    CHECK(model_time(g, {}, db) == 0.0);
    CHECK(model_energy(g, {}, db) == 0.0);
    CHECK(normalization_refs(g, db) == NormalizationRefs{});
  }

  TEST_CASE("distance counts differing nodes") {
    const AlgorithmAssignment a = assign(0, 0, 0);
    CHECK(distance(a, a) == 0);
    CHECK(distance(a, assign(0, 1, 0)) == 1);
    CHECK(distance(a, assign(1, 1, 1)) == 3);
    CHECK_THROWS_AS(distance(a, AlgorithmAssignment{{1, 0}, {2, 0}}), DomainMismatch);
    CHECK_THROWS_AS(distance(a, AlgorithmAssignment{{1, 0}, {2, 0}, {4, 0}}), DomainMismatch);
  }

  TEST_CASE("assignment errors") {
    Table1 t;
    CHECK_THROWS_AS(model_time(t.graph, {{1, 0}, {2, 0}}, t.db), DomainMismatch);
    CHECK_THROWS_AS(model_time(t.graph, assign(2, 0, 0), t.db), NotApplicable);
    CHECK_THROWS_AS(model_time(t.graph, assign(0, 0, 0), CostDatabase{}), MissingEntry);
  }

  TEST_CASE("cost function forms") {
    const Metrics m{9.0, 4.0, 4.0 / 9.0};
    CHECK(CostFunction::linear(1.0).evaluate(m) == 4.0);
    CHECK(CostFunction::linear(0.0).evaluate(m) == 9.0);
    CHECK(CostFunction::product(0.5).evaluate(m) == doctest::Approx(6.0).epsilon(1e-15));
    CHECK(CostFunction::time().evaluate(m) == 9.0);
    CHECK(CostFunction::energy().evaluate(m) == 4.0);
    CHECK(CostFunction::power().evaluate(m) == 4.0 / 9.0);
    const NormalizationRefs refs{3.0, 2.0, 2.0 / 3.0};
    CHECK(CostFunction::linear(0.25, refs).evaluate(m) == doctest::Approx(0.25 * 2.0 + 0.75 * 3.0));
    CHECK(CostFunction::custom(0.0, 0.5, 0.5, refs).evaluate(m) ==
          doctest::Approx(0.5 * 2.0 + 0.5 * (4.0 / 9.0) / (2.0 / 3.0)));
    CHECK_THROWS_AS(CostFunction::linear(1.5), Error);
    CHECK_THROWS_AS(CostFunction::product(-0.1), Error);
    CHECK_THROWS_AS(CostFunction::linear(0.5, {0.0, 1.0, 1.0}), Error);
    CHECK_THROWS_AS(CostFunction::custom(0.0, 0.0, 0.0), Error);
  }

  TEST_CASE("separability classification") {
    CHECK(CostFunction::time().is_separable());
    CHECK(CostFunction::energy().is_separable());
    CHECK(CostFunction::linear(0.3).is_separable());
    CHECK(CostFunction::custom(1.0, 1.0, 0.0).is_separable());
    CHECK_FALSE(CostFunction::power().is_separable());
    CHECK_FALSE(CostFunction::product(0.5).is_separable());
    CHECK_FALSE(CostFunction::custom(0.0, 0.5, 0.5).is_separable());
  }

  TEST_CASE("linear and product costs are monotone in time and energy") {
    for (double w : {0.0, 0.2, 0.5, 0.8, 1.0}) {
      for (double e = 0.5; e < 5.0; e += 0.5) {
        const Metrics lo{2.0, e, e / 2.0}, more_e{2.0, e + 0.1, (e + 0.1) / 2.0}, more_t{2.5, e, e / 2.5};
        for (const auto& f : {CostFunction::linear(w), CostFunction::product(w)}) {
          CHECK(f.evaluate(more_e) >= f.evaluate(lo));
          CHECK(f.evaluate(more_t) >= f.evaluate(lo));
        }
      }
    }
  }

  TEST_CASE("normalization references of the sample graph") {
    Table1 t;
    const auto refs = normalization_refs(t.graph, t.db);
    CHECK(close(refs.time_ms, 0.11191));
    CHECK(close(refs.energy_j, 14.195));
    CHECK(close(refs.power_w, 14.195 / 0.11191));

    Graph one;
    EdgeRef x = one.add_input("x", {1, 3, 32, 32});
    one.add_output({one.add_node(OpKind::Conv2d, {x}, t.graph.node(1).params), 0});
    CostDatabase db;
    db.put(t.sig(1), 0, {0.5, 100.0, std::nullopt});
    const auto single = normalization_refs(one, db);
    CHECK(single.time_ms == 0.5);
    CHECK(single.energy_j == 50.0);
    CHECK(single.power_w == 100.0);
  }

  TEST_CASE("additivity over disjoint unions and per-node deltas") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Graph a = random_graph(seed, 4);
      Graph b = random_graph(seed + 1000, 5);
      // Disjoint union: b's nodes renumbered after a's, its input renamed.
      Graph u = a;
      std::map<int, int> ids;
      int next = a.next_id();
      for (const auto& [id, n] : b.nodes()) ids[id] = next++;
      u.add_graph_input({"y", b.inputs()[0].shape});
      for (const auto& [id, n] : b.nodes()) {
        Node m = n;
        m.id = ids[id];
        for (auto& e : m.inputs) e.node = ids[e.node];
        if (m.kind == OpKind::Input) m.params = InputParams{"y"};
        u.insert_node(m);
      }
      for (auto e : b.outputs()) u.add_output({ids[e.node], e.port});
      REQUIRE(validate(u).empty());

      CostDatabase db;
      SyntheticProfiler prof(seed);
      ensure_profiled(u, db, prof);
      CostTable ta(a, db), tb(b, db), tu(u, db);
      const Metrics ma = ta.metrics(ta.default_choice()), mb = tb.metrics(tb.default_choice());
      const Metrics mu = tu.metrics(tu.default_choice());
      CHECK(close(mu.time_ms, ma.time_ms + mb.time_ms, 1e-12));
      CHECK(close(mu.energy_j, ma.energy_j + mb.energy_j, 1e-12));

      auto choice = tu.default_choice();
      for (std::size_t i = 0; i < tu.size(); ++i) {
        if (tu.nodes()[i].options.size() < 2) continue;
        auto moved = choice;
        moved[i] = 1;
        const auto& r0 = tu.nodes()[i].options[0].record;
        const auto& r1 = tu.nodes()[i].options[1].record;
        const Metrics mm = tu.metrics(moved);
        CHECK(std::abs((mm.time_ms - mu.time_ms) - (r1.time_ms - r0.time_ms)) <= 1e-12 * mm.time_ms);
        CHECK(std::abs((mm.energy_j - mu.energy_j) - (r1.energy() - r0.energy())) <= 1e-12 * mm.energy_j);
      }
    }
  }

  TEST_CASE("sample table rows are unit consistent") {
    Table1 t;
    for (const auto& [sig, algs] : t.db.table())
      for (const auto& [alg, e] : algs) {
        REQUIRE(e.record.listed_energy.has_value());
        const double derived = e.record.time_ms * e.record.power_w;
        CHECK(std::abs(derived - *e.record.listed_energy) <= 0.03 * *e.record.listed_energy);
      }
  }

  TEST_CASE("labels") {
    CHECK(default_algorithm_label(0) == "a");
    CHECK(default_algorithm_label(2) == "c");
    CHECK(default_algorithm_label(30) == "alg30");
  }
}
