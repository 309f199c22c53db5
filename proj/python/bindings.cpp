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
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "enerflow/cli.hpp"
#include "enerflow/errors.hpp"
#include "enerflow/generators.hpp"
#include "enerflow/graph_io.hpp"
#include "enerflow/profile.hpp"
#include "enerflow/search.hpp"

namespace py = pybind11;
using namespace enerflow;

namespace {

py::dict metrics_dict(const Metrics& m) {
  py::dict d;
  d["time_ms"] = m.time_ms;
  d["energy_j"] = m.energy_j;
  d["power_w"] = m.power_w;
  return d;
}

CostFunction resolve_cost(const CostSpec& spec, const Graph& g, const CostDatabase& db) {
  return spec.normalized ? spec.function.with_refs(normalization_refs(g, db)) : spec.function;
}

py::dict optimize(const Graph& g0, CostDatabase& db, const std::string& rules, const std::string& cost, double alpha,
                  int d, const std::string& profiler_spec) {
  const CostSpec spec = parse_cost_spec(cost);
  SearchConfig cfg;
  cfg.alpha = alpha;
  cfg.d = d > 0 ? d : default_radius(spec);
  cfg.check();
  const auto selected = select_rules(rules);
  auto profiler = make_profiler(profiler_spec);
  ProfileSession session{db, profiler.get(), std::nullopt, 0};
  OptimizationResult r;
  {
    py::gil_scoped_release release;
    session.ensure(g0);
    r = spec.time_bound_ms ? constrained_optimize(g0, selected, session, cfg, *spec.time_bound_ms)
                           : outer_search(g0, selected, session, resolve_cost(spec, g0, db), cfg);
  }
  py::dict out;
  out["graph"] = r.graph;
  out["assignment"] = r.assignment;
  out["cost"] = r.cost;
  out["metrics"] = metrics_dict(r.metrics);
  out["graphs_explored"] = r.stats.graphs_explored;
  out["new_records"] = session.new_records;
  return out;
}

}  // namespace

PYBIND11_MODULE(_enerflow, m) {
  m.doc() = "Energy-aware graph substitution and algorithm assignment";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

  py::class_<Graph>(m, "Graph")
      .def_property_readonly("operator_count", &Graph::operator_count)
      .def("operator_ids", &Graph::operator_ids)
      .def("canonical_hash", [](const Graph& g) { return canonical_hash(g); })
      .def("to_json", [](const Graph& g) { return graph_to_json(g); })
      .def_static("from_json", [](const std::string& text) { return graph_from_json(text); })
      .def("__repr__", [](const Graph& g) {
        return "<enerflow.Graph operators=" + std::to_string(g.operator_count()) + ">";
      });

  py::class_<CostDatabase>(m, "CostDatabase")
      .def(py::init<>())
      .def("__len__", &CostDatabase::size)
      .def_property_readonly("signature_count", &CostDatabase::signature_count)
      .def("has_signature", &CostDatabase::has_signature)
      .def("put",
           [](CostDatabase& db, const std::string& sig, AlgorithmId alg, double time_ms, double power_w,
              const std::string& label) { db.put(sig, alg, CostRecord{time_ms, power_w, std::nullopt}, label); },
           py::arg("sig"), py::arg("alg"), py::arg("time_ms"), py::arg("power_w"), py::arg("label") = "")
      .def("__eq__", [](const CostDatabase& a, const CostDatabase& b) { return a == b; });

  m.def("generate_model", [](const std::string& name) { return generate_model(name); }, py::arg("name"),
        "toy-squeeze, toy-resnet or chain:N.");
  m.def("load_graph", &load_graph, py::arg("path"));
  m.def("save_graph", &save_graph, py::arg("graph"), py::arg("path"));
  m.def("load_database", &load_database, py::arg("path"));
  m.def("persist", &persist, py::arg("db"), py::arg("path"));

  m.def(
      "profile",
      [](const Graph& g, CostDatabase& db, const std::string& profiler_spec) {
        auto profiler = make_profiler(profiler_spec);
        if (!profiler) return std::size_t{0};
        return ensure_profiled(g, db, *profiler);
      },
      py::arg("graph"), py::arg("db"), py::arg("profiler") = "synthetic:seed=0",
      "Profiles missing signatures; returns the number of new records.");

  m.def(
      "metrics",
      [](const Graph& g, const AlgorithmAssignment& a, const CostDatabase& db) {
        return metrics_dict(model_metrics(g, a, db));
      },
      py::arg("graph"), py::arg("assignment"), py::arg("db"));

  m.def(
      "inner_search",
      [](const Graph& g, const CostDatabase& db, const std::string& cost, int d) {
        const CostSpec spec = parse_cost_spec(cost);
        return inner_search(g, db, resolve_cost(spec, g, db), d > 0 ? d : default_radius(spec));
      },
      py::arg("graph"), py::arg("db"), py::arg("cost") = "energy", py::arg("d") = 0,
      "Best algorithm assignment of a fixed graph, as {node id: algorithm id}.");

  m.def("optimize", &optimize, py::arg("graph"), py::arg("db"), py::arg("rules") = "all",
        py::arg("cost") = "energy", py::arg("alpha") = 1.05, py::arg("d") = 0,
        py::arg("profiler") = "synthetic:seed=0");

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "enerflow");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line tool; returns (exit code, stdout, stderr).");
}
