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
#include "enerflow/cost.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "enerflow/errors.hpp"
#include "enerflow/signature.hpp"

namespace enerflow {

std::string default_algorithm_label(AlgorithmId alg) {
  if (alg >= 0 && alg < 26) return std::string(1, static_cast<char>('a' + alg));
  return "alg" + std::to_string(alg);
}

// ---------------------------------------------------------------------------
// CostDatabase

void CostDatabase::put(const std::string& sig, AlgorithmId alg, CostRecord record, std::string label) {
  if (label.empty()) label = default_algorithm_label(alg);
  table_[sig][alg] = CostEntry{alg, std::move(label), record};
}

const CostDatabase::AlgorithmTable* CostDatabase::algorithms(const std::string& sig) const {
  auto it = table_.find(sig);
  return it == table_.end() ? nullptr : &it->second;
}

const CostEntry& CostDatabase::lookup(const std::string& sig, AlgorithmId alg) const {
  const auto* algs = algorithms(sig);
  if (!algs) throw MissingEntry(sig);
  auto it = algs->find(alg);
  if (it == algs->end()) throw NotApplicable(sig, alg);
  return it->second;
}

std::size_t CostDatabase::size() const {
  std::size_t n = 0;
  for (const auto& [sig, algs] : table_) n += algs.size();
  return n;
}

std::size_t distance(const AlgorithmAssignment& a, const AlgorithmAssignment& b) {
  if (a.size() != b.size()) throw DomainMismatch("assignments cover different node sets");
  std::size_t d = 0;
  for (auto ia = a.begin(), ib = b.begin(); ia != a.end(); ++ia, ++ib) {
    if (ia->first != ib->first) throw DomainMismatch("assignments cover different node sets");
    if (ia->second != ib->second) ++d;
  }
  return d;
}

// ---------------------------------------------------------------------------
// CostTable

CostTable::CostTable(const Graph& graph, const CostDatabase& db) {
  const ShapeMap shapes = infer_shapes(graph);
  for (const auto& [id, n] : graph.nodes()) {
    if (n.kind == OpKind::Input) continue;
    NodeChoices c;
    c.node_id = id;
    c.signature = signature(n, shapes).key;
    const auto* algs = db.algorithms(c.signature);
    if (!algs || algs->empty()) throw MissingEntry(c.signature);
    for (const auto& [alg, entry] : *algs) c.options.push_back(entry);
    nodes_.push_back(std::move(c));
  }
}

Metrics CostTable::metrics(std::span<const int> choice) const {
  Metrics m;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const CostRecord& r = nodes_[i].options[static_cast<std::size_t>(choice[i])].record;
    m.time_ms += r.time_ms;
    m.energy_j += r.energy();
  }
  if (m.time_ms > 0.0)
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const CostRecord& r = nodes_[i].options[static_cast<std::size_t>(choice[i])].record;
      m.power_w += (r.time_ms / m.time_ms) * r.power_w;
    }
  return m;
}

AlgorithmAssignment CostTable::to_assignment(std::span<const int> choice) const {
  AlgorithmAssignment a;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    a[nodes_[i].node_id] = nodes_[i].options[static_cast<std::size_t>(choice[i])].alg;
  return a;
}

std::vector<int> CostTable::to_choice(const AlgorithmAssignment& a) const {
  if (a.size() != nodes_.size()) throw DomainMismatch("assignment does not cover the graph's operator nodes");
  std::vector<int> choice;
  choice.reserve(nodes_.size());
  for (const auto& c : nodes_) {
    auto it = a.find(c.node_id);
    if (it == a.end()) throw DomainMismatch("assignment misses node " + std::to_string(c.node_id));
    auto opt = std::find_if(c.options.begin(), c.options.end(),
                            [&](const CostEntry& e) { return e.alg == it->second; });
    if (opt == c.options.end()) throw NotApplicable(c.signature, it->second);
    choice.push_back(static_cast<int>(opt - c.options.begin()));
  }
  return choice;
}

Metrics model_metrics(const Graph& g, const AlgorithmAssignment& a, const CostDatabase& db) {
  CostTable table(g, db);
  return table.metrics(table.to_choice(a));
}

double model_time(const Graph& g, const AlgorithmAssignment& a, const CostDatabase& db) {
  return model_metrics(g, a, db).time_ms;
}

double model_energy(const Graph& g, const AlgorithmAssignment& a, const CostDatabase& db) {
  return model_metrics(g, a, db).energy_j;
}

double model_power(const Graph& g, const AlgorithmAssignment& a, const CostDatabase& db) {
  return model_metrics(g, a, db).power_w;
}

// ---------------------------------------------------------------------------
// CostFunction

namespace {

void check_weight(double w) {
  if (!(w >= 0.0 && w <= 1.0)) throw Error("cost weight must lie in [0, 1]");
}

void check_refs(const NormalizationRefs& r) {
  if (!(r.time_ms > 0.0 && r.energy_j > 0.0 && r.power_w > 0.0))
    throw Error("normalization references must be positive");
}

std::string fmt(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

}  // namespace

CostFunction CostFunction::time() { return {Kind::Time, 0.0, {}}; }
CostFunction CostFunction::energy() { return {Kind::Energy, 1.0, {}}; }
CostFunction CostFunction::power() { return {Kind::Power, 0.0, {}}; }

CostFunction CostFunction::linear(double w, NormalizationRefs refs) {
  check_weight(w);
  check_refs(refs);
  return {Kind::Linear, w, refs};
}

CostFunction CostFunction::product(double w, NormalizationRefs refs) {
  check_weight(w);
  check_refs(refs);
  return {Kind::Product, w, refs};
}

CostFunction CostFunction::custom(double w_time, double w_energy, double w_power, NormalizationRefs refs) {
  if (w_time < 0.0 || w_energy < 0.0 || w_power < 0.0 || w_time + w_energy + w_power <= 0.0)
    throw Error("mix weights must be non-negative and not all zero");
  check_refs(refs);
  CostFunction f{Kind::Custom, 0.0, refs};
  f.wt_ = w_time;
  f.we_ = w_energy;
  f.wp_ = w_power;
  return f;
}

CostFunction CostFunction::with_refs(NormalizationRefs refs) const {
  check_refs(refs);
  CostFunction f = *this;
  f.refs_ = refs;
  return f;
}

double CostFunction::evaluate(const Metrics& m) const {
  const double t = m.time_ms / refs_.time_ms;
  const double e = m.energy_j / refs_.energy_j;
  switch (kind_) {
    case Kind::Time: return m.time_ms;
    case Kind::Energy: return m.energy_j;
    case Kind::Power: return m.power_w;
    case Kind::Linear: return w_ * e + (1.0 - w_) * t;
    case Kind::Product: return std::pow(e, w_) * std::pow(t, 1.0 - w_);
    case Kind::Custom: return wt_ * t + we_ * e + wp_ * (m.power_w / refs_.power_w);
  }
  return 0.0;
}

bool CostFunction::is_separable() const {
  switch (kind_) {
    case Kind::Time:
    case Kind::Energy:
    case Kind::Linear: return true;
    case Kind::Custom: return wp_ == 0.0;
    default: return false;
  }
}

std::string CostFunction::describe() const {
  switch (kind_) {
    case Kind::Time: return "time";
    case Kind::Energy: return "energy";
    case Kind::Power: return "power";
    case Kind::Linear: return "linear(w=" + fmt(w_) + ")";
    case Kind::Product: return "product(w=" + fmt(w_) + ")";
    case Kind::Custom: return "mix(time=" + fmt(wt_) + ",energy=" + fmt(we_) + ",power=" + fmt(wp_) + ")";
  }
  return "?";
}

double eval_cost(const CostFunction& f, const Graph& g, const AlgorithmAssignment& a, const CostDatabase& db) {
  return f.evaluate(model_metrics(g, a, db));
}

NormalizationRefs normalization_refs(const Graph& g, const CostDatabase& db) {
  CostTable table(g, db);
  std::vector<int> fastest(table.size()), greenest(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& opts = table.nodes()[i].options;
    for (std::size_t k = 1; k < opts.size(); ++k) {
      if (opts[k].record.time_ms < opts[fastest[i]].record.time_ms) fastest[i] = static_cast<int>(k);
      if (opts[k].record.energy() < opts[greenest[i]].record.energy()) greenest[i] = static_cast<int>(k);
    }
  }
  NormalizationRefs r;
  r.time_ms = table.metrics(fastest).time_ms;
  r.energy_j = table.metrics(greenest).energy_j;
  if (!(r.time_ms > 0.0 && r.energy_j > 0.0)) return NormalizationRefs{};
  r.power_w = r.energy_j / r.time_ms;
  return r;
}

}  // namespace enerflow
