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
#include "enerflow/search.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <queue>
#include <unordered_set>

#include "enerflow/errors.hpp"

namespace enerflow {

void SearchConfig::check() const {
  if (!(alpha >= 1.0)) throw Error("alpha must be at least 1");
  if (d < 1) throw Error("d must be at least 1");
  if (max_queue < 1) throw Error("max_queue must be at least 1");
  if (space_limit < 1) throw Error("space_limit must be at least 1");
  if (!(brute_force_limit >= 1.0)) throw Error("brute_force_limit must be at least 1");
}

// ---------------------------------------------------------------------------
// Inner search

namespace {

double cost_of(const CostTable& table, const CostFunction& f, std::span<const int> choice) {
  return f.evaluate(table.metrics(choice));
}

// Calls visit(subset) for every k-subset of [0, n) in lexicographic order.
void for_each_subset(int n, int k, const std::function<void(const std::vector<int>&)>& visit) {
  std::vector<int> idx(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
  while (true) {
    visit(idx);
    int i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) return;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

}  // namespace

std::vector<int> inner_search(const CostTable& table, const CostFunction& f, int d, SearchStats* stats) {
  if (d < 1) throw Error("d must be at least 1");
  const int n = static_cast<int>(table.size());
  std::vector<int> current = table.default_choice();
  if (n == 0) return current;
  const int radius = std::min(d, n);
  double current_cost = cost_of(table, f, current);
  std::size_t evaluated = 0, sweeps = 0;

  bool changed = true;
  while (changed) {
    changed = false;
    ++sweeps;
    for (int k = 1; k <= radius; ++k) {
      for_each_subset(n, k, [&](const std::vector<int>& subset) {
        // Odometer over the option indices of the subset, lexicographic.
        std::vector<int> tuple(subset.size(), 0);
        while (true) {
          bool moves_all = true;
          for (std::size_t j = 0; j < subset.size(); ++j)
            if (tuple[j] == current[static_cast<std::size_t>(subset[j])]) moves_all = false;
          if (moves_all) {
            std::vector<int> candidate = current;
            for (std::size_t j = 0; j < subset.size(); ++j) candidate[static_cast<std::size_t>(subset[j])] = tuple[j];
            ++evaluated;
            const double c = cost_of(table, f, candidate);
            if (c < current_cost) {
              current = std::move(candidate);
              current_cost = c;
              changed = true;
            }
          }
          std::size_t j = subset.size();
          while (j > 0) {
            --j;
            const auto limit = static_cast<int>(table.nodes()[static_cast<std::size_t>(subset[j])].options.size());
            if (++tuple[j] < limit) break;
            tuple[j] = 0;
            if (j == 0) return;
          }
        }
      });
    }
  }
  if (stats) {
    stats->assignments_evaluated += evaluated;
    stats->inner_iterations += sweeps;
  }
  return current;
}

AlgorithmAssignment inner_search(const Graph& g, const CostDatabase& db, const CostFunction& f, int d,
                                 SearchStats* stats) {
  CostTable table(g, db);
  return table.to_assignment(inner_search(table, f, d, stats));
}

std::vector<int> brute_force_assignment(const CostTable& table, const CostFunction& f, double limit) {
  double space = 1.0;
  for (const auto& node : table.nodes()) space *= static_cast<double>(node.options.size());
  if (space > limit)
    throw SpaceTooLarge("assignment space of " + std::to_string(static_cast<long long>(space)) +
                        " exceeds the enumeration limit");
  std::vector<int> choice = table.default_choice();
  std::vector<int> best = choice;
  double best_cost = cost_of(table, f, choice);
  while (true) {
    std::size_t j = choice.size();
    while (j > 0) {
      --j;
      if (++choice[j] < static_cast<int>(table.nodes()[j].options.size())) break;
      choice[j] = 0;
      if (j == 0) return best;
    }
    if (choice.empty()) return best;
    const double c = cost_of(table, f, choice);
    if (c < best_cost) {
      best_cost = c;
      best = choice;
    }
  }
}

AlgorithmAssignment brute_force_assignment(const Graph& g, const CostDatabase& db, const CostFunction& f,
                                           double limit) {
  CostTable table(g, db);
  return table.to_assignment(brute_force_assignment(table, f, limit));
}

// ---------------------------------------------------------------------------
// Outer search

namespace {

struct Solved {
  AlgorithmAssignment assignment;
  Metrics metrics;
  double cost = 0.0;
};

struct QueueEntry {
  double cost;
  std::uint64_t hash;
  Graph graph;
};

struct CheaperFirst {
  bool operator()(const QueueEntry& a, const QueueEntry& b) const {
    if (a.cost != b.cost) return a.cost > b.cost;
    return a.hash > b.hash;
  }
};

std::size_t node_cap(const Graph& g0, const SearchConfig& cfg) {
  if (cfg.max_graph_nodes) return cfg.max_graph_nodes;
  return std::max<std::size_t>(1, 4 * g0.operator_count());
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

OptimizationResult outer_search(const Graph& g0, std::span<const SubstitutionRule> rules, ProfileSession& session,
                                const CostFunction& f, const SearchConfig& cfg) {
  cfg.check();
  const auto start = std::chrono::steady_clock::now();
  const std::size_t records_before = session.new_records;
  const std::size_t cap = node_cap(g0, cfg);
  SearchStats stats;

  auto solve = [&](const Graph& g) {
    session.ensure(g);
    CostTable table(g, session.db);
    std::vector<int> choice = cfg.inner_enabled ? inner_search(table, f, cfg.d, &stats) : table.default_choice();
    Solved s;
    s.assignment = table.to_assignment(choice);
    s.metrics = table.metrics(choice);
    s.cost = f.evaluate(s.metrics);
    return s;
  };

  Solved origin = solve(g0);
  OptimizationResult best{g0, origin.assignment, origin.cost, origin.metrics, {}};

  std::priority_queue<QueueEntry, std::vector<QueueEntry>, CheaperFirst> queue;
  std::unordered_set<std::uint64_t> visited;
  const std::uint64_t h0 = canonical_hash(g0);
  visited.insert(h0);
  queue.push({origin.cost, h0, g0});
  stats.graphs_enqueued = 1;

  while (!queue.empty()) {
    QueueEntry entry = queue.top();
    queue.pop();
    ++stats.graphs_explored;
    for (Neighbor& nb : expand(entry.graph, rules)) {
      if (!visited.insert(nb.hash).second) continue;
      if (nb.graph.operator_count() > cap) {
        ++stats.node_cap_hits;
        continue;
      }
      ++stats.graphs_generated;
      Solved s = solve(nb.graph);
      const double best_before = best.cost;
      if (s.cost < best_before) {
        best.graph = nb.graph;
        best.assignment = s.assignment;
        best.cost = s.cost;
        best.metrics = s.metrics;
        ++stats.improvements;
      }
      if (s.cost < cfg.alpha * best_before) {
        if (stats.graphs_enqueued >= cfg.max_queue) {
          ++stats.queue_cap_hits;
          continue;
        }
        queue.push({s.cost, nb.hash, std::move(nb.graph)});
        ++stats.graphs_enqueued;
      }
    }
  }

  stats.profiled_records = session.new_records - records_before;
  stats.wall_ms = elapsed_ms(start);
  best.stats = stats;
  return best;
}

OptimizationResult outer_search(const Graph& g0, std::span<const SubstitutionRule> rules, CostDatabase& db,
                                const CostFunction& f, const SearchConfig& cfg) {
  ProfileSession session{db, nullptr, std::nullopt, 0};
  return outer_search(g0, rules, session, f, cfg);
}

std::vector<Graph> graph_closure(const Graph& g0, std::span<const SubstitutionRule> rules, std::size_t max_nodes,
                                 std::size_t limit) {
  std::vector<Graph> out{g0};
  std::unordered_set<std::uint64_t> visited{canonical_hash(g0)};
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (Neighbor& nb : expand(out[i], rules)) {
      if (nb.graph.operator_count() > max_nodes || !visited.insert(nb.hash).second) continue;
      if (out.size() >= limit)
        throw SpaceTooLarge("graph closure exceeds " + std::to_string(limit) + " graphs");
      out.push_back(std::move(nb.graph));
    }
  }
  return out;
}

OptimizationResult brute_force_space(const Graph& g0, std::span<const SubstitutionRule> rules,
                                     ProfileSession& session, const CostFunction& f, const SearchConfig& cfg) {
  cfg.check();
  const auto start = std::chrono::steady_clock::now();
  const std::size_t records_before = session.new_records;
  std::vector<Graph> closure = graph_closure(g0, rules, node_cap(g0, cfg), cfg.space_limit);

  std::optional<OptimizationResult> best;
  SearchStats stats;
  for (Graph& g : closure) {
    session.ensure(g);
    CostTable table(g, session.db);
    double space = 1.0;
    for (const auto& node : table.nodes()) space *= static_cast<double>(node.options.size());
    std::vector<int> choice = brute_force_assignment(table, f, cfg.brute_force_limit);
    stats.assignments_evaluated += static_cast<std::size_t>(space);
    ++stats.graphs_explored;
    const Metrics m = table.metrics(choice);
    const double c = f.evaluate(m);
    if (!best || c < best->cost) best = OptimizationResult{std::move(g), table.to_assignment(choice), c, m, {}};
  }
  stats.graphs_generated = closure.size() - 1;
  stats.profiled_records = session.new_records - records_before;
  stats.wall_ms = elapsed_ms(start);
  best->stats = stats;
  return std::move(*best);
}

OptimizationResult brute_force_space(const Graph& g0, std::span<const SubstitutionRule> rules, CostDatabase& db,
                                     const CostFunction& f, const SearchConfig& cfg) {
  ProfileSession session{db, nullptr, std::nullopt, 0};
  return brute_force_space(g0, rules, session, f, cfg);
}

// ---------------------------------------------------------------------------
// Constrained optimization

namespace {

void accumulate(SearchStats& total, const SearchStats& s) {
  total.graphs_explored += s.graphs_explored;
  total.graphs_generated += s.graphs_generated;
  total.graphs_enqueued += s.graphs_enqueued;
  total.improvements += s.improvements;
  total.assignments_evaluated += s.assignments_evaluated;
  total.inner_iterations += s.inner_iterations;
  total.queue_cap_hits += s.queue_cap_hits;
  total.node_cap_hits += s.node_cap_hits;
  total.profiled_records += s.profiled_records;
}

}  // namespace

OptimizationResult constrained_optimize(const Graph& g0, std::span<const SubstitutionRule> rules,
                                        ProfileSession& session, const SearchConfig& cfg, double bound_ms) {
  const auto start = std::chrono::steady_clock::now();
  session.ensure(g0);
  const NormalizationRefs refs = normalization_refs(g0, session.db);
  SearchStats total;
  auto run = [&](double w) {
    OptimizationResult r = outer_search(g0, rules, session, CostFunction::linear(w, refs), cfg);
    accumulate(total, r.stats);
    return r;
  };

  OptimizationResult best = run(0.0);
  if (best.metrics.time_ms > bound_ms) throw Infeasible(best.metrics.time_ms);
  auto consider = [&](OptimizationResult&& r) {
    if (r.metrics.time_ms > bound_ms) return false;
    if (r.metrics.energy_j < best.metrics.energy_j) best = std::move(r);
    return true;
  };

  if (!consider(run(1.0))) {
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 20; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (consider(run(mid)))
        lo = mid;
      else
        hi = mid;
    }
  }
  // Reported under the Energy objective.
  best.cost = best.metrics.energy_j;
  total.wall_ms = elapsed_ms(start);
  best.stats = total;
  return best;
}

OptimizationResult constrained_optimize(const Graph& g0, std::span<const SubstitutionRule> rules, CostDatabase& db,
                                        const SearchConfig& cfg, double bound_ms) {
  ProfileSession session{db, nullptr, std::nullopt, 0};
  return constrained_optimize(g0, rules, session, cfg, bound_ms);
}

}  // namespace enerflow
