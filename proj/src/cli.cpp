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
#include "enerflow/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "enerflow/errors.hpp"
#include "enerflow/generators.hpp"
#include "enerflow/graph_io.hpp"
#include "enerflow/profile.hpp"
#include "enerflow/signature.hpp"
#include "json.hpp"

namespace enerflow {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Cost specs

namespace {

double parse_number(std::string_view text, std::string_view what) {
  const std::string s(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.empty() || used != s.size() || !std::isfinite(v))
    throw Error("bad number '" + s + "' for " + std::string(what));
  return v;
}

std::map<std::string, double> parse_pairs(std::string_view body, std::string_view spec) {
  std::map<std::string, double> out;
  std::size_t start = 0;
  while (start <= body.size()) {
    const std::size_t end = std::min(body.find(',', start), body.size());
    const std::string_view item = body.substr(start, end - start);
    const std::size_t eq = item.find('=');
    if (eq == std::string_view::npos || eq == 0) throw Error("expected key=value in cost spec '" + std::string(spec) + "'");
    const std::string key(item.substr(0, eq));
    if (out.count(key)) throw Error("duplicate key '" + key + "' in cost spec");
    out[key] = parse_number(item.substr(eq + 1), key);
    start = end + 1;
  }
  return out;
}

}  // namespace

CostSpec parse_cost_spec(std::string_view text) {
  CostSpec spec;
  spec.text = std::string(text);
  if (text == "time") {
    spec.function = CostFunction::time();
    return spec;
  }
  if (text == "energy") {
    spec.function = CostFunction::energy();
    return spec;
  }
  if (text == "power") {
    spec.function = CostFunction::power();
    return spec;
  }
  const std::size_t colon = text.find(':');
  if (colon == std::string_view::npos) throw Error("unknown cost spec '" + spec.text + "'");
  const std::string_view head = text.substr(0, colon);
  const std::string_view body = text.substr(colon + 1);
  if (head == "constrained") {
    constexpr std::string_view prefix = "time<=";
    if (body.rfind(prefix, 0) != 0) throw Error("expected constrained:time<=F, got '" + spec.text + "'");
    const double bound = parse_number(body.substr(prefix.size()), "time bound");
    if (!(bound > 0.0)) throw Error("time bound must be positive");
    spec.time_bound_ms = bound;
    spec.function = CostFunction::energy();
    return spec;
  }
  const auto pairs = parse_pairs(body, text);
  if (head == "linear" || head == "product") {
    if (pairs.size() != 1 || !pairs.count("w")) throw Error("expected " + std::string(head) + ":w=F");
    const double w = pairs.at("w");
    spec.function = head == "linear" ? CostFunction::linear(w) : CostFunction::product(w);
    spec.normalized = true;
    return spec;
  }
  if (head == "mix") {
    for (const auto& [key, value] : pairs)
      if (key != "time" && key != "energy" && key != "power") throw Error("unknown mix weight '" + key + "'");
    auto get = [&](const char* key) { return pairs.count(key) ? pairs.at(key) : 0.0; };
    spec.function = CostFunction::custom(get("time"), get("energy"), get("power"));
    spec.normalized = true;
    return spec;
  }
  throw Error("unknown cost spec '" + spec.text + "'");
}

int default_radius(const CostSpec& spec) {
  if (spec.time_bound_ms) return 1;
  return spec.function.is_separable() ? 1 : 2;
}

std::vector<AblationRow> ablation(const Graph& g0, std::span<const SubstitutionRule> rules, ProfileSession& session,
                                  const CostFunction& f, const SearchConfig& cfg) {
  session.ensure(g0);
  std::vector<AblationRow> rows;
  CostTable table(g0, session.db);
  const Metrics origin = table.metrics(table.default_choice());
  rows.push_back({"origin", origin, f.evaluate(origin)});
  const Metrics inner = table.metrics(inner_search(table, f, cfg.d));
  rows.push_back({"inner-only", inner, f.evaluate(inner)});
  SearchConfig outer_cfg = cfg;
  outer_cfg.inner_enabled = false;
  const OptimizationResult outer = outer_search(g0, rules, session, f, outer_cfg);
  rows.push_back({"outer-only", outer.metrics, outer.cost});
  const OptimizationResult both = outer_search(g0, rules, session, f, cfg);
  rows.push_back({"both", both.metrics, both.cost});
  return rows;
}

// ---------------------------------------------------------------------------
// Reporting

namespace {

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string percent_change(double from, double to) {
  if (from == 0.0) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.1f%%", 100.0 * (to - from) / from);
  return buf;
}

json metrics_json(const Metrics& m, double cost) {
  return json{{"time_ms", m.time_ms}, {"energy_j", m.energy_j}, {"power_w", m.power_w}, {"cost", cost}};
}

json stats_json(const SearchStats& s) {
  return json{{"graphs_explored", s.graphs_explored},
              {"graphs_generated", s.graphs_generated},
              {"graphs_enqueued", s.graphs_enqueued},
              {"improvements", s.improvements},
              {"assignments_evaluated", s.assignments_evaluated},
              {"inner_iterations", s.inner_iterations},
              {"queue_cap_hits", s.queue_cap_hits},
              {"node_cap_hits", s.node_cap_hits}};
}

std::string hex(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

fs::path default_db_path() {
  if (const char* env = std::getenv("ENERFLOW_DB"); env && *env) return env;
  return "enerflow_db.jsonl";
}

struct CommonOptions {
  std::string graph;
  std::string db;
  std::string rules = "all";
  std::string cost = "energy";
  double alpha = 1.05;
  int d = 0;
  std::uint64_t seed = 0;
  std::string profiler = "synthetic:seed=0";
  bool quiet = false;
};

struct Prepared {
  Graph g0;
  std::vector<SubstitutionRule> rules;
  CostSpec spec;
  CostFunction f = CostFunction::energy();
  SearchConfig cfg;
  fs::path db_path;
};

Prepared prepare(const CommonOptions& o, CostDatabase& db, std::unique_ptr<Profiler>& profiler,
                 std::optional<ProfileSession>& session) {
  Prepared p;
  p.g0 = load_graph(o.graph);
  if (auto problems = validate(p.g0); !problems.empty()) throw GraphError("invalid graph: " + problems.front());
  p.rules = select_rules(o.rules);
  p.spec = parse_cost_spec(o.cost);
  p.cfg.alpha = o.alpha;
  p.cfg.d = o.d > 0 ? o.d : default_radius(p.spec);
  p.cfg.seed = o.seed;
  p.cfg.check();
  p.db_path = o.db.empty() ? default_db_path() : fs::path(o.db);
  db = load_database_or_empty(p.db_path);
  profiler = make_profiler(o.profiler);
  session.emplace(ProfileSession{db, profiler.get(),
                                 profiler ? std::optional<fs::path>(p.db_path) : std::nullopt, 0});
  session->ensure(p.g0);
  p.f = p.spec.function;
  if (p.spec.normalized) p.f = p.f.with_refs(normalization_refs(p.g0, db));
  return p;
}

json assignment_json(const Graph& g, const AlgorithmAssignment& a, const CostDatabase& db) {
  json out = json::object();
  const ShapeMap shapes = infer_shapes(g);
  for (const auto& [id, alg] : a) {
    const auto& entry = db.lookup(signature(g.node(id), shapes).key, alg);
    out[std::to_string(id)] = json{{"alg", alg}, {"label", entry.label}};
  }
  return out;
}

void print_report(std::ostream& out, const json& report, const OptimizationResult& r, const CostDatabase& db,
                  std::size_t new_records) {
  const auto& o = report["origin"];
  const auto& n = report["optimized"];
  out << "cost function  " << report["cost_function"].get<std::string>() << "\n";
  auto line = [&](const char* name, const json& m) {
    out << name << "time " << fixed(m["time_ms"].get<double>(), 5) << " ms  power "
        << fixed(m["power_w"].get<double>(), 2) << " W  energy " << fixed(m["energy_j"].get<double>(), 4)
        << " J/1000\n";
  };
  line("origin         ", o);
  line("optimized      ", n);
  out << "change         time " << percent_change(o["time_ms"], n["time_ms"]) << "  power "
      << percent_change(o["power_w"], n["power_w"]) << "  energy " << percent_change(o["energy_j"], n["energy_j"])
      << "\n";
  out << "search         " << r.stats.graphs_explored << " graphs explored, " << r.stats.graphs_generated
      << " generated, " << r.stats.assignments_evaluated << " assignments evaluated, " << new_records
      << " records profiled, " << fixed(r.stats.wall_ms, 1) << " ms\n";
  out << "assignment\n";
  const ShapeMap shapes = infer_shapes(r.graph);
  for (const auto& [id, alg] : r.assignment) {
    const Node& node = r.graph.node(id);
    const auto& e = db.lookup(signature(node, shapes).key, alg);
    char buf[160];
    std::snprintf(buf, sizeof buf, "  %4d  %-10s %-5s %10.5f ms %8.2f W %10.4f\n", id,
                  std::string(to_string(node.kind)).c_str(), e.label.c_str(), e.record.time_ms, e.record.power_w,
                  e.record.energy());
    out << buf;
  }
}

int cmd_optimize(const CommonOptions& o, const std::string& out_dir, std::ostream& out) {
  CostDatabase db;
  std::unique_ptr<Profiler> profiler;
  std::optional<ProfileSession> session;
  Prepared p = prepare(o, db, profiler, session);

  OptimizationResult r = p.spec.time_bound_ms
                             ? constrained_optimize(p.g0, p.rules, *session, p.cfg, *p.spec.time_bound_ms)
                             : outer_search(p.g0, p.rules, *session, p.f, p.cfg);
  const CostFunction& reported = p.spec.time_bound_ms ? CostFunction::energy() : p.f;
  CostTable origin_table(p.g0, db);
  const Metrics origin = origin_table.metrics(origin_table.default_choice());

  json report;
  report["cost_function"] = p.spec.time_bound_ms ? "energy subject to time<=" + json(*p.spec.time_bound_ms).dump() + " ms"
                                                  : p.f.describe();
  report["config"] = json{{"graph", o.graph}, {"rules", o.rules}, {"cost", o.cost}, {"alpha", p.cfg.alpha},
                          {"d", p.cfg.d},     {"seed", p.cfg.seed}, {"profiler", o.profiler}};
  if (p.spec.normalized)
    report["normalization"] = json{{"time_ms", p.f.refs().time_ms}, {"energy_j", p.f.refs().energy_j},
                                   {"power_w", p.f.refs().power_w}};
  report["origin"] = metrics_json(origin, reported.evaluate(origin));
  report["optimized"] = metrics_json(r.metrics, r.cost);
  report["change_percent"] = json{
      {"time", origin.time_ms ? 100.0 * (r.metrics.time_ms - origin.time_ms) / origin.time_ms : 0.0},
      {"energy", origin.energy_j ? 100.0 * (r.metrics.energy_j - origin.energy_j) / origin.energy_j : 0.0},
      {"power", origin.power_w ? 100.0 * (r.metrics.power_w - origin.power_w) / origin.power_w : 0.0}};
  report["stats"] = stats_json(r.stats);
  report["origin_hash"] = hex(canonical_hash(p.g0));
  report["optimized_hash"] = hex(canonical_hash(r.graph));
  report["origin_operators"] = p.g0.operator_count();
  report["optimized_operators"] = r.graph.operator_count();

  json table = json::array();
  const ShapeMap shapes = infer_shapes(r.graph);
  for (const auto& [id, alg] : r.assignment) {
    const Node& node = r.graph.node(id);
    const std::string sig = signature(node, shapes).key;
    const auto& e = db.lookup(sig, alg);
    json row{{"node", id},           {"kind", std::string(to_string(node.kind))},
             {"signature", sig},     {"alg", alg},
             {"label", e.label},     {"time_ms", e.record.time_ms},
             {"power_w", e.record.power_w}, {"energy_j", e.record.energy()}};
    table.push_back(std::move(row));
  }
  report["assignment"] = std::move(table);

  const fs::path dir(out_dir);
  fs::create_directories(dir);
  save_graph(r.graph, dir / "optimized_graph.json");
  write_text(dir / "assignment.json", assignment_json(r.graph, r.assignment, db).dump(2) + "\n");
  write_text(dir / "report.json", report.dump(2) + "\n");
  if (!o.quiet) print_report(out, report, r, db, session->new_records);
  return exit_code::ok;
}

int cmd_profile(const std::string& graph_path, const std::string& db_arg, const std::string& profiler_spec,
                bool quiet, std::ostream& out) {
  Graph g = load_graph(graph_path);
  if (auto problems = validate(g); !problems.empty()) throw GraphError("invalid graph: " + problems.front());
  const fs::path db_path = db_arg.empty() ? default_db_path() : fs::path(db_arg);
  CostDatabase db = load_database_or_empty(db_path);
  auto profiler = make_profiler(profiler_spec);
  if (!profiler) throw Error("profile needs a profiler; 'none' measures nothing");
  const std::size_t added = ensure_profiled(g, db, *profiler, db_path);
  if (quiet)
    out << added << "\n";
  else
    out << added << " new records (" << db.size() << " total, " << db.signature_count() << " signatures) in "
        << db_path.string() << "\n";
  return exit_code::ok;
}

int cmd_gen(const std::string& model, const std::string& out_path, std::ostream& out) {
  Graph g = generate_model(model);
  if (out_path.empty() || out_path == "-")
    out << graph_to_json(g);
  else
    save_graph(g, out_path);
  return exit_code::ok;
}

int cmd_compare(const CommonOptions& o, const std::string& json_path, std::ostream& out) {
  CostDatabase db;
  std::unique_ptr<Profiler> profiler;
  std::optional<ProfileSession> session;
  Prepared p = prepare(o, db, profiler, session);
  if (p.spec.time_bound_ms) throw Error("compare needs an unconstrained cost");
  const auto rows = ablation(p.g0, p.rules, *session, p.f, p.cfg);

  json doc;
  doc["cost_function"] = p.f.describe();
  doc["config"] = json{{"graph", o.graph}, {"rules", o.rules}, {"alpha", p.cfg.alpha}, {"d", p.cfg.d}};
  json list = json::array();
  for (const auto& row : rows) {
    json m = metrics_json(row.metrics, row.cost);
    m["name"] = row.name;
    list.push_back(std::move(m));
  }
  doc["rows"] = std::move(list);
  if (!json_path.empty()) write_text(json_path, doc.dump(2) + "\n");

  if (!o.quiet) {
    const Metrics& base = rows.front().metrics;
    out << "cost function: " << p.f.describe() << "\n";
    char buf[200];
    std::snprintf(buf, sizeof buf, "%-11s %12s %10s %14s %12s %9s\n", "config", "time (ms)", "power (W)",
                  "energy (J/1k)", "cost", "energy");
    out << buf;
    for (const auto& row : rows) {
      std::snprintf(buf, sizeof buf, "%-11s %12.5f %10.2f %14.4f %12.6g %9s\n", row.name.c_str(),
                    row.metrics.time_ms, row.metrics.power_w, row.metrics.energy_j, row.cost,
                    percent_change(base.energy_j, row.metrics.energy_j).c_str());
      out << buf;
    }
  }
  return exit_code::ok;
}

void add_common(CLI::App* cmd, CommonOptions& o, bool with_profiler_default) {
  cmd->add_option("--graph", o.graph, "Graph JSON file")->required();
  cmd->add_option("--db", o.db, "Cost database (JSON Lines); defaults to $ENERFLOW_DB or ./enerflow_db.jsonl");
  cmd->add_option("--rules", o.rules, "all | fusion-only | none | comma-separated rule names");
  cmd->add_option("--cost", o.cost,
                  "time | energy | power | linear:w=F | product:w=F | mix:time=F,energy=F,power=F | "
                  "constrained:time<=F");
  cmd->add_option("--alpha", o.alpha, "Outer-search relaxation factor (>= 1)");
  cmd->add_option("--d", o.d, "Inner-search radius; default 1 for separable costs, else 2");
  cmd->add_option("--seed", o.seed, "Search seed");
  if (with_profiler_default)
    cmd->add_option("--profiler", o.profiler, "synthetic:seed=N | external:cmd=TEMPLATE | none");
  cmd->add_flag("--quiet", o.quiet, "Suppress the human-readable report");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Energy-aware optimizer for computation graphs", "enerflow"};
  app.require_subcommand(1);

  CommonOptions opt_o;
  std::string out_dir = ".";
  auto* optimize = app.add_subcommand("optimize", "Search for an equivalent graph and algorithm assignment");
  add_common(optimize, opt_o, true);
  optimize->add_option("--out", out_dir, "Output directory");

  std::string prof_graph, prof_db, prof_spec = "synthetic:seed=0";
  bool prof_quiet = false;
  auto* profile = app.add_subcommand("profile", "Measure every unprofiled node signature of a graph");
  profile->add_option("--graph", prof_graph, "Graph JSON file")->required();
  profile->add_option("--db", prof_db, "Cost database (JSON Lines)");
  profile->add_option("--profiler", prof_spec, "synthetic:seed=N | external:cmd=TEMPLATE");
  profile->add_flag("--quiet", prof_quiet, "Print only the count");

  std::string model, gen_out;
  auto* gen = app.add_subcommand("gen", "Emit a generated model graph");
  gen->add_option("model", model, "toy-squeeze | toy-resnet | chain:N")->required();
  gen->add_option("--out", gen_out, "Output file (stdout when omitted)");

  CommonOptions cmp_o;
  std::string cmp_json;
  auto* compare = app.add_subcommand("compare", "Ablation of inner and outer search");
  add_common(compare, cmp_o, true);
  compare->add_option("--json", cmp_json, "Also write the comparison as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_code::ok : exit_code::invalid_input;
  }

  try {
    if (*optimize) return cmd_optimize(opt_o, out_dir, out);
    if (*profile) return cmd_profile(prof_graph, prof_db, prof_spec, prof_quiet, out);
    if (*gen) return cmd_gen(model, gen_out, out);
    if (*compare) return cmd_compare(cmp_o, cmp_json, out);
  } catch (const Infeasible& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::infeasible;
  } catch (const MissingEntry& e) {
    err << "error: " << e.what() << " (run `enerflow profile` or pass a profiler)\n";
    return exit_code::missing_entries;
  } catch (const NotApplicable& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::missing_entries;
  } catch (const CommandFailed& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::command_failed;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::invalid_input;
  }
  return exit_code::invalid_input;
}

}  // namespace enerflow
