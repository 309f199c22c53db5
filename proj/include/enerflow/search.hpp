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
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "enerflow/cost.hpp"
#include "enerflow/graph.hpp"
#include "enerflow/profile.hpp"
#include "enerflow/rules.hpp"

namespace enerflow {

struct SearchConfig {
  double alpha = 1.05;
  /// Inner neighborhood radius. A radius covering every node makes the inner search exhaustive.
  int d = 1;
  std::size_t max_queue = 100000;
  /// Operator-count cap on generated graphs; 0 means 4x the origin.
  std::size_t max_graph_nodes = 0;
  std::uint64_t seed = 0;
  /// Largest assignment space brute_force_assignment will enumerate.
  double brute_force_limit = 1e6;
  /// Largest graph closure brute_force_space will enumerate.
  std::size_t space_limit = 10000;
  /// When false every graph keeps the default assignment (outer-only ablation).
  bool inner_enabled = true;

  /// Throws Error on alpha < 1, d < 1 or a zero cap.
  void check() const;
};

struct SearchStats {
  std::size_t graphs_explored = 0;   // dequeued and expanded
  std::size_t graphs_generated = 0;  // distinct neighbors seen
  std::size_t graphs_enqueued = 0;
  std::size_t improvements = 0;
  std::size_t assignments_evaluated = 0;
  std::size_t inner_iterations = 0;  // sweeps
  std::size_t queue_cap_hits = 0;
  std::size_t node_cap_hits = 0;
  std::size_t profiled_records = 0;
  double wall_ms = 0.0;

  friend bool operator==(const SearchStats& a, const SearchStats& b) {
    return a.graphs_explored == b.graphs_explored && a.graphs_generated == b.graphs_generated &&
           a.graphs_enqueued == b.graphs_enqueued && a.improvements == b.improvements &&
           a.assignments_evaluated == b.assignments_evaluated && a.inner_iterations == b.inner_iterations &&
           a.queue_cap_hits == b.queue_cap_hits && a.node_cap_hits == b.node_cap_hits &&
           a.profiled_records == b.profiled_records;
  }
};

struct OptimizationResult {
  Graph graph;
  AlgorithmAssignment assignment;
  double cost = 0.0;
  Metrics metrics;
  SearchStats stats;
};

/// Local search over assignments from the all-lowest-id start. Sweeps subsets of 1..d nodes
/// (ascending ids, lexicographic tuples) and accepts the first strict improvement, until a
/// sweep changes nothing. Returns indices into table.nodes()[i].options.
std::vector<int> inner_search(const CostTable& table, const CostFunction& f, int d, SearchStats* stats = nullptr);
/// Throws MissingEntry.
AlgorithmAssignment inner_search(const Graph& g, const CostDatabase& db, const CostFunction& f, int d,
                                 SearchStats* stats = nullptr);

/// Global optimum by enumeration; ties go to the lexicographically smallest id vector.
/// Throws SpaceTooLarge above `limit` assignments.
std::vector<int> brute_force_assignment(const CostTable& table, const CostFunction& f, double limit = 1e6);
AlgorithmAssignment brute_force_assignment(const Graph& g, const CostDatabase& db, const CostFunction& f,
                                           double limit = 1e6);

/// Best-first search over equivalent graphs. Candidates cheaper than alpha times the best cost
/// so far are enqueued; canonical hashes already seen are skipped. New graphs are profiled
/// through `session`.
OptimizationResult outer_search(const Graph& g0, std::span<const SubstitutionRule> rules, ProfileSession& session,
                                const CostFunction& f, const SearchConfig& cfg = {});
OptimizationResult outer_search(const Graph& g0, std::span<const SubstitutionRule> rules, CostDatabase& db,
                                const CostFunction& f, const SearchConfig& cfg = {});

/// Breadth-first closure of g0 under `rules` (within the node cap), each graph solved by
/// brute_force_assignment. Throws SpaceTooLarge past cfg.space_limit graphs.
OptimizationResult brute_force_space(const Graph& g0, std::span<const SubstitutionRule> rules,
                                     ProfileSession& session, const CostFunction& f, const SearchConfig& cfg = {});
OptimizationResult brute_force_space(const Graph& g0, std::span<const SubstitutionRule> rules, CostDatabase& db,
                                     const CostFunction& f, const SearchConfig& cfg = {});

/// Graphs reachable from g0 under `rules`, in breadth-first order, g0 first.
std::vector<Graph> graph_closure(const Graph& g0, std::span<const SubstitutionRule> rules, std::size_t max_nodes,
                                 std::size_t limit);

/// Least-energy result whose modeled time is within `bound_ms`, by bisection on the energy
/// weight of a normalized Linear cost. Throws Infeasible when the pure-time run misses the bound.
OptimizationResult constrained_optimize(const Graph& g0, std::span<const SubstitutionRule> rules,
                                        ProfileSession& session, const SearchConfig& cfg, double bound_ms);
OptimizationResult constrained_optimize(const Graph& g0, std::span<const SubstitutionRule> rules, CostDatabase& db,
                                        const SearchConfig& cfg, double bound_ms);

}  // namespace enerflow
