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
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "enerflow/graph.hpp"

namespace enerflow {

/// Where a pattern node takes an input from: an earlier pattern node's output port, or a
/// wildcard variable that binds to any edge (all uses of one variable must agree).
struct PatternInput {
  enum class Source { Node, Var };
  Source source = Source::Var;
  int index = 0;
  int port = 0;

  static PatternInput node(int index, int port = 0) { return {Source::Node, index, port}; }
  static PatternInput var(int index) { return {Source::Var, index, 0}; }
};

struct MatchSite {
  /// Graph node id bound to each pattern node, in pattern order.
  std::vector<int> nodes;
  /// Edge bound to each wildcard variable.
  std::vector<EdgeRef> vars;
  friend auto operator<=>(const MatchSite&, const MatchSite&) = default;
};

struct PatternNode {
  OpKind kind;
  std::vector<PatternInput> inputs;
  /// Local test on the candidate node; empty accepts everything.
  std::function<bool(const Node&)> predicate;
  /// Inputs are left to the constraint (concat takes any number of operands).
  bool variadic = false;
};

/// Template subgraph. Pattern nodes are listed producers first; `constraint` checks the
/// complete binding against the whole graph (sole-consumer tests and the like).
struct Pattern {
  std::vector<PatternNode> nodes;
  int num_vars = 0;
  std::function<bool(const Graph&, const MatchSite&)> constraint;
};

struct SubstitutionRule {
  std::string name;
  std::string description;
  Pattern pattern;
  /// Builds the rewritten graph from a copy of the input; the caller prunes and validates.
  std::function<Graph(const Graph&, const MatchSite&)> rewrite;
};

/// Every site of `rule` in `graph`, ordered by bound node ids.
std::vector<MatchSite> match_rule(const SubstitutionRule& rule, const Graph& graph);

/// Rewrites one site into a new graph; `graph` is untouched. Throws InvalidSite when the
/// site no longer matches.
Graph apply(const SubstitutionRule& rule, const Graph& graph, const MatchSite& site);

struct Neighbor {
  Graph graph;
  std::uint64_t hash = 0;
  std::string rule;
};

/// All single-rewrite successors in rule order then site order, deduplicated by canonical hash.
std::vector<Neighbor> expand(const Graph& graph, std::span<const SubstitutionRule> rules);
std::vector<Graph> neighbors(const Graph& graph, std::span<const SubstitutionRule> rules);

/// fuse-conv-relu, split-conv-activation, merge-parallel-convs, split-merged-conv,
/// fold-identity, fuse-conv-batchnorm, eliminate-split-concat.
std::vector<SubstitutionRule> default_rules();
/// The non-growing subset (everything except the two inverse rules).
std::vector<SubstitutionRule> fusion_rules();
/// "all", "fusion-only", "none" or a comma-separated list of rule names. Throws Error on an
/// unknown name.
std::vector<SubstitutionRule> select_rules(std::string_view spec);

}  // namespace enerflow
