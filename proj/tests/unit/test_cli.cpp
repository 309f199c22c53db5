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
#include <sstream>

#include "doctest.h"
#include "enerflow/cli.hpp"
#include "enerflow/errors.hpp"
#include "enerflow/generators.hpp"
#include "enerflow/graph_io.hpp"
#include "enerflow/interpreter.hpp"
#include "enerflow/profile.hpp"
#include "enerflow/signature.hpp"
#include "json.hpp"
#include "test_support.hpp"

using namespace enerflow;
using json = nlohmann::ordered_json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "enerflow");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string read(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string data(const char* name) { return testing::data_file(name).string(); }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("cost spec grammar") {
    CHECK(parse_cost_spec("time").function.kind() == CostFunction::Kind::Time);
    CHECK(parse_cost_spec("power").function.kind() == CostFunction::Kind::Power);
    auto lin = parse_cost_spec("linear:w=0.25");
    CHECK(lin.function.kind() == CostFunction::Kind::Linear);
    CHECK(lin.function.weight() == 0.25);
    CHECK(lin.normalized);
    CHECK(parse_cost_spec("product:w=1").function.kind() == CostFunction::Kind::Product);
    auto mix = parse_cost_spec("mix:power=0.5,energy=0.5");
    CHECK(mix.function.kind() == CostFunction::Kind::Custom);
    CHECK_FALSE(mix.function.is_separable());
    CHECK(default_radius(mix) == 2);
    CHECK(default_radius(lin) == 1);
    auto con = parse_cost_spec("constrained:time<=0.7");
    REQUIRE(con.time_bound_ms.has_value());
    CHECK(*con.time_bound_ms == 0.7);
    for (const char* bad : {"speed", "linear:w=2", "linear:x=0.5", "linear:w=abc", "mix:heat=1", "constrained:time<0.7",
                            "constrained:time<=-1", "mix:time=0,energy=0"})
      CHECK_THROWS_AS(parse_cost_spec(bad), Error);
  }

  TEST_CASE("gen writes deterministic valid graphs") {
    testing::TempDir dir;
    REQUIRE(run({"gen", "toy-squeeze", "--out", (dir / "a.json").string()}).code == 0);
    REQUIRE(run({"gen", "toy-squeeze", "--out", (dir / "b.json").string()}).code == 0);
    CHECK(read(dir / "a.json") == read(dir / "b.json"));
    CHECK(validate(load_graph(dir / "a.json")).empty());
    auto chain = run({"gen", "chain:3"});
    REQUIRE(chain.code == 0);
    Graph g = graph_from_json(chain.out);
    CHECK(g.operator_count() == 6);
    CHECK(run({"gen", "toy-vgg"}).code == exit_code::invalid_input);
  }

  TEST_CASE("optimize on the sample table picks b, a, c for energy") {
    testing::TempDir dir;
    auto r = run({"optimize", "--graph", data("table1_graph.json"), "--db", data("table1_db.jsonl"), "--profiler",
                  "none", "--cost", "energy", "--out", dir.path().string()});
    REQUIRE(r.code == 0);
    json a = json::parse(read(dir / "assignment.json"));
    CHECK(a["1"]["label"] == "b");
    CHECK(a["2"]["label"] == "a");
    CHECK(a["3"]["label"] == "c");
    json report = json::parse(read(dir / "report.json"));
    CHECK(report["optimized"]["energy_j"].get<double>() == doctest::Approx(14.195));
    CHECK(r.out.find("energy") != std::string::npos);
  }

  TEST_CASE("exit codes") {
    testing::TempDir dir;
    const std::string out = dir.path().string();
    CHECK(run({"optimize", "--graph", data("table1_graph.json"), "--db", data("table1_db.jsonl"), "--profiler", "none",
               "--cost", "constrained:time<=0.0001", "--out", out, "--quiet"})
              .code == exit_code::infeasible);
    CHECK(run({"optimize", "--graph", data("valley_graph.json"), "--db", data("table1_db.jsonl"), "--profiler", "none",
               "--out", out, "--quiet"})
              .code == exit_code::missing_entries);
    CHECK(run({"optimize", "--graph", (dir / "nope.json").string(), "--out", out}).code == exit_code::invalid_input);
    CHECK(run({"optimize", "--graph", data("table1_graph.json"), "--cost", "bogus", "--out", out}).code ==
          exit_code::invalid_input);
    CHECK(run({"frobnicate"}).code == exit_code::invalid_input);

    std::ofstream(dir / "bad.json") << R"({"inputs":[],"nodes":[{"id":3,"kind":"warp","inputs":[]}],"outputs":[3]})";
    auto bad = run({"optimize", "--graph", (dir / "bad.json").string(), "--out", out});
    CHECK(bad.code == exit_code::invalid_input);
    CHECK(bad.err.find("3") != std::string::npos);
  }

  TEST_CASE("no rules and one algorithm per node leaves the graph alone") {
    testing::TempDir dir;
    const auto graph = dir / "g.json";
    save_graph(conv_relu_chain(2), graph);
    CostDatabase db;
    SyntheticProfiler prof(0);
    ensure_profiled(conv_relu_chain(2), db, prof);
    CostDatabase single;
    for (const auto& [sig, algs] : db.table()) single.put(sig, algs.begin()->first, algs.begin()->second.record);
    persist(single, dir / "db.jsonl");
    auto r = run({"optimize", "--graph", graph.string(), "--db", (dir / "db.jsonl").string(), "--profiler", "none",
                  "--rules", "none", "--cost", "time", "--out", (dir / "out").string(), "--quiet"});
    REQUIRE(r.code == 0);
    CHECK(canonical_hash(load_graph(dir / "out" / "optimized_graph.json")) == canonical_hash(conv_relu_chain(2)));
  }

  TEST_CASE("profile reports new records then zero, and external failures exit 4") {
    testing::TempDir dir;
    const auto graph = dir / "g.json";
    save_graph(toy_squeeze(), graph);
    const std::string db = (dir / "db.jsonl").string();
    auto first = run({"profile", "--graph", graph.string(), "--db", db, "--quiet"});
    REQUIRE(first.code == 0);
    CostDatabase expected;
    SyntheticProfiler prof(0);
    const std::size_t count = ensure_profiled(toy_squeeze(), expected, prof);
    CHECK(std::stoul(first.out) == count);
    auto second = run({"profile", "--graph", graph.string(), "--db", db, "--quiet"});
    REQUIRE(second.code == 0);
    CHECK(std::stoul(second.out) == 0);
    CHECK(load_database(db) == expected);

    auto failing = run({"profile", "--graph", graph.string(), "--db", (dir / "other.jsonl").string(), "--profiler",
                        "external:cmd=exit 7"});
    CHECK(failing.code == exit_code::command_failed);
  }

  TEST_CASE("the database path can come from the environment") {
    testing::TempDir dir;
    const auto graph = dir / "g.json";
    save_graph(conv_relu_chain(1), graph);
    const auto db = dir / "env.jsonl";
    ::setenv("ENERFLOW_DB", db.c_str(), 1);
    auto r = run({"profile", "--graph", graph.string(), "--quiet"});
    ::unsetenv("ENERFLOW_DB");
    REQUIRE(r.code == 0);
    CHECK(std::filesystem::exists(db));
  }

  TEST_CASE("optimize is deterministic and its report is recomputable") {
    testing::TempDir dir;
    const auto graph = dir / "g.json";
    save_graph(toy_squeeze(), graph);
    const std::string db = (dir / "db.jsonl").string();
    for (const char* sub : {"one", "two"}) {
      auto r = run({"optimize", "--graph", graph.string(), "--db", db, "--cost", "linear:w=0.5", "--alpha", "1.1",
                    "--out", (dir / sub).string(), "--quiet"});
      REQUIRE(r.code == 0);
      CHECK(r.out.empty());
    }
    for (const char* file : {"optimized_graph.json", "assignment.json", "report.json"})
      CHECK(read(dir / "one" / file) == read(dir / "two" / file));

    Graph g0 = load_graph(graph);
    Graph opt = load_graph(dir / "one" / "optimized_graph.json");
    CHECK(validate(opt).empty());
    CHECK(equivalent(g0, opt, 50, 1e-4));
    json report = json::parse(read(dir / "one" / "report.json"));
    AlgorithmAssignment a;
    const json assignment = json::parse(read(dir / "one" / "assignment.json"));
    for (const auto& [id, v] : assignment.items()) a[std::stoi(id)] = v["alg"];
    CostDatabase loaded = load_database(db);
    const Metrics m = model_metrics(opt, a, loaded);
    CHECK(report["optimized"]["time_ms"].get<double>() == m.time_ms);
    CHECK(report["optimized"]["energy_j"].get<double>() == m.energy_j);
    CHECK(report["optimized"]["power_w"].get<double>() == m.power_w);
    const auto& refs = report["normalization"];
    const auto f = CostFunction::linear(0.5, {refs["time_ms"], refs["energy_j"], refs["power_w"]});
    CHECK(report["optimized"]["cost"].get<double>() == f.evaluate(m));
  }

  TEST_CASE("compare follows the ablation pattern") {
    testing::TempDir dir;
    const auto graph = dir / "g.json";
    save_graph(toy_squeeze(), graph);
    auto r = run({"compare", "--graph", graph.string(), "--db", (dir / "db.jsonl").string(), "--cost", "energy",
                  "--json", (dir / "cmp.json").string()});
    REQUIRE(r.code == 0);
    json doc = json::parse(read(dir / "cmp.json"));
    const auto& rows = doc["rows"];
    REQUIRE(rows.size() == 4);
    const double origin = rows[0]["cost"], inner = rows[1]["cost"], outer = rows[2]["cost"], both = rows[3]["cost"];
    CHECK(both <= inner);
    CHECK(inner <= origin);
    CHECK(both <= outer);
    CHECK(outer <= origin);
    CHECK(r.out.find("outer-only") != std::string::npos);
  }

  TEST_CASE("ablation degenerate cases") {
    Graph g = toy_squeeze();
    CostDatabase full;
    SyntheticProfiler prof(0);
    ensure_profiled(g, full, prof);
    CostDatabase single;
    for (const auto& [sig, algs] : full.table()) single.put(sig, algs.begin()->first, algs.begin()->second.record);
    ProfileSession s1{single, nullptr, std::nullopt, 0};
    auto rows = ablation(g, {}, s1, CostFunction::energy(), SearchConfig{});
    CHECK(rows[1].cost == rows[0].cost);
    CHECK(rows[2].cost == rows[0].cost);
    ProfileSession s2{full, nullptr, std::nullopt, 0};
    rows = ablation(g, {}, s2, CostFunction::energy(), SearchConfig{});
    CHECK(rows[2].cost == rows[0].cost);
  }
}
