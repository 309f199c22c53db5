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
#include <fstream>
#include <set>

#include "doctest.h"
#include "enerflow/builder.hpp"
#include "enerflow/errors.hpp"
#include "enerflow/generators.hpp"
#include "enerflow/graph_io.hpp"
#include "enerflow/profile.hpp"
#include "enerflow/signature.hpp"
#include "test_support.hpp"

using namespace enerflow;

namespace {

NodeSignature conv_sig(std::int64_t hw, std::int64_t oc = 8, std::int64_t k = 3) {
  GraphBuilder b;
  EdgeRef x = b.input("x", {1, 4, hw, hw});
  EdgeRef y = b.conv2d(x, {oc, {k, k}, {1, 1}, {k / 2, k / 2}, false});
  b.output(y);
  Graph g = b.build();
  return signature(g.node(y.node), g);
}

std::set<std::string> distinct_signatures(const Graph& g) {
  std::set<std::string> out;
  const ShapeMap shapes = infer_shapes(g);
  for (const auto& [id, n] : g.nodes())
    if (n.kind != OpKind::Input) out.insert(signature(n, shapes).key);
  return out;
}

std::size_t applicable_pairs(const Graph& g, std::uint64_t seed) {
  std::size_t n = 0;
  for (const auto& key : distinct_signatures(g)) {
    const NodeSignature sig = parse_signature(key);
    for (int alg = 0; alg < candidate_algorithms(sig.kind); ++alg)
      if (synthetic_profile(sig, alg, seed)) ++n;
  }
  return n;
}

std::string read(const std::filesystem::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_SUITE("profile") {
  TEST_CASE("synthetic records are deterministic and in range") {
    const NodeSignature sig = conv_sig(8);
    for (int alg = 0; alg < 4; ++alg) {
      auto a = synthetic_profile(sig, alg, 7);
      auto b = synthetic_profile(sig, alg, 7);
      CHECK(a == b);
      if (a) {
        CHECK(a->time_ms > 0.0);
        CHECK(a->power_w >= 40.0);
        CHECK(a->power_w <= 200.0);
      }
    }
    CHECK_FALSE(synthetic_profile(sig, 4, 7).has_value());
  }

  TEST_CASE("larger convolutions take longer") {
    for (std::uint64_t seed = 0; seed < 20; ++seed)
      for (std::int64_t hw : {4, 8, 16})
        for (std::int64_t oc : {2, 8, 16})
          for (int alg = 0; alg < 4; ++alg) {
            auto small = synthetic_profile(conv_sig(hw, oc), alg, seed);
            auto big = synthetic_profile(conv_sig(2 * hw, oc), alg, seed);
            if (small && big) CHECK(big->time_ms > small->time_ms);
          }
  }

  TEST_CASE("every signature of a 100-signature corpus has an applicable algorithm") {
    std::set<std::string> corpus;
    for (std::uint64_t seed = 0; corpus.size() < 100; ++seed)
      for (const auto& key : distinct_signatures(random_graph(seed, 8))) corpus.insert(key);
    std::size_t checked = 0;
    for (const auto& key : corpus) {
      const NodeSignature sig = parse_signature(key);
      int applicable = 0;
      for (int alg = 0; alg < candidate_algorithms(sig.kind); ++alg) applicable += synthetic_profile(sig, alg, 3).has_value();
      CHECK(applicable >= 1);
      ++checked;
    }
    CHECK(checked >= 100);
  }

  TEST_CASE("inapplicable algorithms occur at roughly the keyed rate") {
    std::size_t total = 0, missing = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed)
      for (std::int64_t hw : {4, 6, 8, 10})
        for (int alg = 0; alg < 4; ++alg) {
          ++total;
          missing += !synthetic_profile(conv_sig(hw), alg, seed).has_value();
        }
    const double rate = static_cast<double>(missing) / static_cast<double>(total);
    CHECK(rate > 0.1);
    CHECK(rate < 0.3);
  }

  TEST_CASE("ensure_profiled counts applicable pairs and is idempotent") {
    testing::TempDir dir;
    const auto journal = dir / "db.jsonl";
    Graph g = toy_squeeze();
    CostDatabase db;
    SyntheticProfiler prof(11);
    const std::size_t first = ensure_profiled(g, db, prof, journal);
    CHECK(first == applicable_pairs(g, 11));
    CHECK(first == db.size());
    std::size_t expected_calls = 0;
    for (const auto& key : distinct_signatures(g)) expected_calls += static_cast<std::size_t>(candidate_algorithms(parse_signature(key).kind));
    CHECK(prof.invocations() == expected_calls);
    CHECK(ensure_profiled(g, db, prof, journal) == 0);
    CHECK(prof.invocations() == expected_calls);
    CHECK(load_database(journal) == db);
  }

  TEST_CASE("three distinct signatures") {
    Graph g = conv_relu_chain(2);
    CHECK(distinct_signatures(g).size() == 2);
    GraphBuilder b;
    EdgeRef x = b.input("x", {1, 4, 8, 8});
    x = b.relu(b.conv2d(x, {4, {3, 3}, {1, 1}, {1, 1}, false}));
    x = b.maxpool(x, PoolParams{{2, 2}, {2, 2}, {0, 0}});
    b.output(x);
    Graph h = b.build();
    REQUIRE(distinct_signatures(h).size() == 3);
    CostDatabase db;
    SyntheticProfiler prof(0);
    CHECK(ensure_profiled(h, db, prof) == applicable_pairs(h, 0));
  }

  TEST_CASE("persist and load round trip") {
    testing::TempDir dir;
    CostDatabase table1 = load_database(testing::data_file("table1_db.jsonl"));
    persist(table1, dir / "copy.jsonl");
    CHECK(load_database(dir / "copy.jsonl") == table1);

    CostDatabase db;
    SyntheticProfiler prof(5);
    ensure_profiled(toy_resnet(), db, prof);
    persist(db, dir / "synthetic.jsonl");
    CostDatabase back = load_database(dir / "synthetic.jsonl");
    CHECK(back == db);
    persist(back, dir / "again.jsonl");
    CHECK(read(dir / "again.jsonl") == read(dir / "synthetic.jsonl"));
  }

  TEST_CASE("append then load sees old and new records") {
    testing::TempDir dir;
    const auto path = dir / "db.jsonl";
    CostDatabase::AlgorithmTable first{{0, {0, "a", {1.0, 10.0, std::nullopt}}}};
    CostDatabase::AlgorithmTable second{{1, {1, "b", {2.0, 20.0, std::nullopt}}}};
    append_records(path, "relu|in=1x2", first);
    append_records(path, "relu|in=1x3", second);
    CostDatabase db = load_database(path);
    CHECK(db.size() == 2);
    CHECK(db.lookup("relu|in=1x2", 0).record.time_ms == 1.0);
    CHECK(db.lookup("relu|in=1x3", 1).record.power_w == 20.0);
  }

  TEST_CASE("duplicate keys resolve last-write-wins") {
    testing::TempDir dir;
    const auto path = dir / "db.jsonl";
    append_records(path, "relu|in=1x2", {{0, {0, "a", {1.0, 10.0, std::nullopt}}}});
    append_records(path, "relu|in=1x2", {{0, {0, "a", {3.0, 10.0, std::nullopt}}}});
    CHECK(load_database(path).lookup("relu|in=1x2", 0).record.time_ms == 3.0);
  }

  TEST_CASE("loader rejects bad values with line numbers") {
    testing::TempDir dir;
    const auto path = dir / "bad.jsonl";
    {
      std::ofstream out(path);
      out << R"({"sig":"relu|in=1x2","alg":0,"alg_label":"a","time_ms":1.0,"power_w":10.0})" << "\n";
      out << "\n";
      out << R"({"sig":"relu|in=1x3","alg":0,"alg_label":"a","time_ms":1.0,"power_w":-5})" << "\n";
    }
    try {
      load_database(path);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
    {
      std::ofstream out(path);
      out << "{not json\n";
    }
    CHECK_THROWS_AS(load_database(path), ParseError);
    CHECK_THROWS_AS(load_database(dir / "missing.jsonl"), IoError);
    CHECK(load_database_or_empty(dir / "missing.jsonl").size() == 0);
  }

  TEST_CASE("external command protocol") {
    const NodeSignature sig = conv_sig(8);
    auto r = measure_external(R"(echo '{"time_ms":1.0,"power_w":100.0}')", sig, 0);
    REQUIRE(r.has_value());
    CHECK(r->time_ms == 1.0);
    CHECK(r->power_w == 100.0);

    CHECK_FALSE(measure_external(R"(echo '{"not_applicable": true}')", sig, 1).has_value());

    auto templated = measure_external(R"(grep -q '"alg":2' {spec} && echo '{"time_ms":1{alg}.5,"power_w":50}')", sig, 2);
    REQUIRE(templated.has_value());
    CHECK(templated->time_ms == 12.5);

    try {
      measure_external("echo boom >&2; exit 3", sig, 0);
      FAIL("expected CommandFailed");
    } catch (const CommandFailed& e) {
      CHECK(e.exit_code() == 3);
      CHECK(e.stderr_excerpt().find("boom") != std::string::npos);
    }
    CHECK_THROWS_AS(measure_external("echo not-json", sig, 0), ParseError);
    CHECK_THROWS_AS(measure_external(R"(echo '{"time_ms":0,"power_w":5}')", sig, 0), ParseError);
  }

  TEST_CASE("failed measurements keep earlier batches") {
    testing::TempDir dir;
    const auto journal = dir / "db.jsonl";
    GraphBuilder b;
    EdgeRef x = b.input("x", {1, 4, 8, 8});
    b.output(b.relu(b.conv2d(x, {4, {1, 1}, {1, 1}, {0, 0}, false})));
    Graph g = b.build();
    // Succeeds for conv2d specs, fails for the relu.
    ExternalProfiler prof(R"(grep -q '"kind":"conv2d"' {spec} && echo '{"time_ms":1.0,"power_w":10.0}')");
    CostDatabase db;
    CHECK_THROWS_AS(ensure_profiled(g, db, prof, journal), CommandFailed);
    CostDatabase saved = load_database(journal);
    CHECK(saved.signature_count() == 1);
    CHECK(saved.size() == 4);
  }

  TEST_CASE("profiler specs") {
    CHECK(make_profiler("none") == nullptr);
    CHECK(make_profiler("synthetic:seed=9")->describe() == "synthetic:seed=9");
    CHECK(make_profiler("synthetic")->describe() == "synthetic:seed=0");
    CHECK(make_profiler("external:cmd=true")->describe() == "external:cmd=true");
    CHECK_THROWS_AS(make_profiler("synthetic:seed=x"), Error);
    CHECK_THROWS_AS(make_profiler("gpu"), Error);
  }

  TEST_CASE("session profiles on demand") {
    CostDatabase db;
    SyntheticProfiler prof(1);
    ProfileSession session{db, &prof, std::nullopt, 0};
    session.ensure(conv_relu_chain(2));
    CHECK(session.new_records > 0);
    const std::size_t after = session.new_records;
    session.ensure(conv_relu_chain(3));
    CHECK(session.new_records == after);

    CostDatabase empty;
    ProfileSession passive{empty, nullptr, std::nullopt, 0};
    passive.ensure(conv_relu_chain(1));
    CHECK(empty.size() == 0);
  }
}
