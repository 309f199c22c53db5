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
#include "enerflow/rules.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

#include "enerflow/errors.hpp"

namespace enerflow {

// ---------------------------------------------------------------------------
// Matching

namespace {

struct Matcher {
  const Pattern& pattern;
  const Graph& graph;
  MatchSite current;
  std::vector<bool> var_bound;
  std::set<int> used;
  std::vector<MatchSite> results;

  bool inputs_fit(const PatternNode& pn, const Node& n, std::vector<int>& newly_bound) {
    if (pn.variadic) return true;
    if (pn.inputs.size() != n.inputs.size()) return false;
    for (std::size_t k = 0; k < pn.inputs.size(); ++k) {
      const auto& pi = pn.inputs[k];
      const EdgeRef actual = n.inputs[k];
      if (pi.source == PatternInput::Source::Node) {
        if (actual != EdgeRef{current.nodes[pi.index], pi.port}) return false;
      } else if (var_bound[pi.index]) {
        if (current.vars[pi.index] != actual) return false;
      } else {
        var_bound[pi.index] = true;
        current.vars[pi.index] = actual;
        newly_bound.push_back(pi.index);
      }
    }
    return true;
  }

  void run(std::size_t i) {
    if (i == pattern.nodes.size()) {
      if (!pattern.constraint || pattern.constraint(graph, current)) results.push_back(current);
      return;
    }
    const PatternNode& pn = pattern.nodes[i];
    for (const auto& [id, n] : graph.nodes()) {
      if (n.kind != pn.kind || used.count(id)) continue;
      std::vector<int> newly_bound;
      current.nodes.push_back(id);
      if (inputs_fit(pn, n, newly_bound) && (!pn.predicate || pn.predicate(n))) {
        used.insert(id);
        run(i + 1);
        used.erase(id);
      }
      current.nodes.pop_back();
      for (int v : newly_bound) var_bound[v] = false;
    }
  }
};

// Same binding check as the matcher, for one given site.
bool site_matches(const Pattern& pattern, const Graph& graph, const MatchSite& site) {
  if (site.nodes.size() != pattern.nodes.size() || site.vars.size() != static_cast<std::size_t>(pattern.num_vars))
    return false;
  if (std::set<int>(site.nodes.begin(), site.nodes.end()).size() != site.nodes.size()) return false;
  for (std::size_t i = 0; i < pattern.nodes.size(); ++i) {
    const Node* n = graph.find(site.nodes[i]);
    const PatternNode& pn = pattern.nodes[i];
    if (!n || n->kind != pn.kind) return false;
    if (!pn.variadic && n->inputs.size() != pn.inputs.size()) return false;
    for (std::size_t k = 0; !pn.variadic && k < pn.inputs.size(); ++k) {
      const auto& pi = pn.inputs[k];
      const EdgeRef expect = pi.source == PatternInput::Source::Node ? EdgeRef{site.nodes[pi.index], pi.port}
                                                                    : site.vars[pi.index];
      if (n->inputs[k] != expect) return false;
    }
    if (pn.predicate && !pn.predicate(*n)) return false;
  }
  return !pattern.constraint || pattern.constraint(graph, site);
}

}  // namespace

std::vector<MatchSite> match_rule(const SubstitutionRule& rule, const Graph& graph) {
  Matcher m{rule.pattern, graph, {}, std::vector<bool>(rule.pattern.num_vars, false), {}, {}};
  m.current.vars.resize(rule.pattern.num_vars);
  m.run(0);
  std::sort(m.results.begin(), m.results.end());
  return m.results;
}

Graph apply(const SubstitutionRule& rule, const Graph& graph, const MatchSite& site) {
  if (!site_matches(rule.pattern, graph, site)) throw InvalidSite("stale or foreign match site for rule " + rule.name);
  Graph out = rule.rewrite(graph, site);
  out.prune_dead();
  if (auto v = validate(out); !v.empty())
    throw Error("rule " + rule.name + " produced an invalid graph: " + v.front());
  return out;
}

std::vector<Neighbor> expand(const Graph& graph, std::span<const SubstitutionRule> rules) {
  std::vector<Neighbor> out;
  std::unordered_set<std::uint64_t> seen;
  for (const auto& rule : rules)
    for (const auto& site : match_rule(rule, graph)) {
      Graph g = apply(rule, graph, site);
      const auto h = canonical_hash(g);
      if (seen.insert(h).second) out.push_back({std::move(g), h, rule.name});
    }
  return out;
}

std::vector<Graph> neighbors(const Graph& graph, std::span<const SubstitutionRule> rules) {
  std::vector<Graph> out;
  for (auto& n : expand(graph, rules)) out.push_back(std::move(n.graph));
  return out;
}

// ---------------------------------------------------------------------------
// Rule catalog

namespace {

bool same_window(const Conv2dParams& a, const Conv2dParams& b) {
  return a.kernel == b.kernel && a.stride == b.stride && a.padding == b.padding &&
         a.has_activation == b.has_activation;
}

std::vector<double> concat_values(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

SubstitutionRule fuse_conv_relu() {
  SubstitutionRule r;
  r.name = "fuse-conv-relu";
  r.description = "conv2d followed by its only consumer relu becomes conv2d with activation";
  r.pattern.num_vars = 1;
  r.pattern.nodes = {
      {OpKind::Conv2d, {PatternInput::var(0)}, [](const Node& n) { return !n.as<Conv2dParams>().has_activation; }},
      {OpKind::Relu, {PatternInput::node(0)}, {}},
  };
  r.pattern.constraint = [](const Graph& g, const MatchSite& s) { return g.sole_consumer({s.nodes[0], 0}, s.nodes[1]); };
  r.rewrite = [](const Graph& g, const MatchSite& s) {
    Graph out = g;
    const int conv = s.nodes[0], relu = s.nodes[1];
    out.mutable_node(conv).as<Conv2dParams>().has_activation = true;
    out.remove_node(relu);
    out.replace_uses({relu, 0}, {conv, 0});
    return out;
  };
  return r;
}

SubstitutionRule split_conv_activation() {
  SubstitutionRule r;
  r.name = "split-conv-activation";
  r.description = "conv2d with activation becomes conv2d followed by relu";
  r.pattern.num_vars = 1;
  r.pattern.nodes = {
      {OpKind::Conv2d, {PatternInput::var(0)}, [](const Node& n) { return n.as<Conv2dParams>().has_activation; }},
  };
  r.rewrite = [](const Graph& g, const MatchSite& s) {
    Graph out = g;
    const int conv = s.nodes[0];
    out.mutable_node(conv).as<Conv2dParams>().has_activation = false;
    const int relu = out.add_node(OpKind::Relu, {});
    out.replace_uses({conv, 0}, {relu, 0});
    out.mutable_node(relu).inputs = {{conv, 0}};
    return out;
  };
  return r;
}

SubstitutionRule merge_parallel_convs() {
  SubstitutionRule r;
  r.name = "merge-parallel-convs";
  r.description = "two conv2d nodes reading the same tensor with equal windows become one wider conv2d and a split";
  r.pattern.num_vars = 1;
  r.pattern.nodes = {
      {OpKind::Conv2d, {PatternInput::var(0)}, {}},
      {OpKind::Conv2d, {PatternInput::var(0)}, {}},
  };
  r.pattern.constraint = [](const Graph& g, const MatchSite& s) {
    return s.nodes[0] < s.nodes[1] &&
           same_window(g.node(s.nodes[0]).as<Conv2dParams>(), g.node(s.nodes[1]).as<Conv2dParams>());
  };
  r.rewrite = [](const Graph& g, const MatchSite& s) {
    Graph out = g;
    const int a = s.nodes[0], b = s.nodes[1];
    const auto& pa = g.node(a).as<Conv2dParams>();
    const auto& pb = g.node(b).as<Conv2dParams>();
    Conv2dParams merged = pa;
    merged.out_channels = pa.out_channels + pb.out_channels;
    merged.weight = make_weights(concat_values(*pa.weight, *pb.weight));
    merged.bias = make_weights(concat_values(*pa.bias, *pb.bias));
    const int conv = out.add_node(OpKind::Conv2d, {s.vars[0]}, std::move(merged));
    const int split = out.add_node(OpKind::Split, {{conv, 0}}, SplitParams{1, {pa.out_channels, pb.out_channels}});
    out.replace_uses({a, 0}, {split, 0});
    out.replace_uses({b, 0}, {split, 1});
    out.remove_node(a);
    out.remove_node(b);
    return out;
  };
  return r;
}

SubstitutionRule split_merged_conv() {
  SubstitutionRule r;
  r.name = "split-merged-conv";
  r.description = "conv2d consumed only by a channel split becomes one conv2d per part";
  r.pattern.num_vars = 1;
  r.pattern.nodes = {
      {OpKind::Conv2d, {PatternInput::var(0)}, {}},
      {OpKind::Split, {PatternInput::node(0)},
       [](const Node& n) {
         const auto& p = n.as<SplitParams>();
         return p.axis == 1 && p.sizes.size() >= 2;
       }},
  };
  r.pattern.constraint = [](const Graph& g, const MatchSite& s) { return g.sole_consumer({s.nodes[0], 0}, s.nodes[1]); };
  r.rewrite = [](const Graph& g, const MatchSite& s) {
    Graph out = g;
    const int conv = s.nodes[0], split = s.nodes[1];
    const auto& pc = g.node(conv).as<Conv2dParams>();
    const auto& sizes = g.node(split).as<SplitParams>().sizes;
    const std::size_t per_channel = pc.weight->size() / static_cast<std::size_t>(pc.out_channels);
    std::int64_t offset = 0;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      Conv2dParams part = pc;
      part.out_channels = sizes[i];
      const auto first = static_cast<std::size_t>(offset);
      const auto count = static_cast<std::size_t>(sizes[i]);
      part.weight = make_weights(std::vector<double>(pc.weight->begin() + first * per_channel,
                                                     pc.weight->begin() + (first + count) * per_channel));
      part.bias = make_weights(std::vector<double>(pc.bias->begin() + first, pc.bias->begin() + first + count));
      const int id = out.add_node(OpKind::Conv2d, {s.vars[0]}, std::move(part));
      out.replace_uses({split, static_cast<int>(i)}, {id, 0});
      offset += sizes[i];
    }
    out.remove_node(split);
    out.remove_node(conv);
    return out;
  };
  return r;
}

SubstitutionRule fold_identity() {
  SubstitutionRule r;
  r.name = "fold-identity";
  r.description = "identity is removed and its consumers read its producer";
  r.pattern.num_vars = 1;
  r.pattern.nodes = {{OpKind::Identity, {PatternInput::var(0)}, {}}};
  r.rewrite = [](const Graph& g, const MatchSite& s) {
    Graph out = g;
    out.remove_node(s.nodes[0]);
    out.replace_uses({s.nodes[0], 0}, s.vars[0]);
    return out;
  };
  return r;
}

// conv(x) * scale + shift == conv'(x) with w' = w * scale[o], b' = b * scale[o] + shift[o].
SubstitutionRule fuse_conv_batchnorm() {
  SubstitutionRule r;
  r.name = "fuse-conv-batchnorm";
  r.description = "batchnorm after an activation-free conv2d is folded into the conv weights";
  r.pattern.num_vars = 1;
  r.pattern.nodes = {
      {OpKind::Conv2d, {PatternInput::var(0)}, [](const Node& n) { return !n.as<Conv2dParams>().has_activation; }},
      {OpKind::BatchNorm, {PatternInput::node(0)}, {}},
  };
  r.pattern.constraint = [](const Graph& g, const MatchSite& s) { return g.sole_consumer({s.nodes[0], 0}, s.nodes[1]); };
  r.rewrite = [](const Graph& g, const MatchSite& s) {
    Graph out = g;
    const int conv = s.nodes[0], bn = s.nodes[1];
    auto& pc = out.mutable_node(conv).as<Conv2dParams>();
    const auto& pb = g.node(bn).as<BatchNormParams>();
    std::vector<double> w = *pc.weight;
    std::vector<double> b = *pc.bias;
    const std::size_t per_channel = w.size() / b.size();
    for (std::size_t o = 0; o < b.size(); ++o) {
      const double scale = (*pb.scale)[o];
      for (std::size_t i = 0; i < per_channel; ++i) w[o * per_channel + i] *= scale;
      b[o] = b[o] * scale + (*pb.shift)[o];
    }
    pc.weight = make_weights(std::move(w));
    pc.bias = make_weights(std::move(b));
    out.remove_node(bn);
    out.replace_uses({bn, 0}, {conv, 0});
    return out;
  };
  return r;
}

SubstitutionRule eliminate_split_concat() {
  SubstitutionRule r;
  r.name = "eliminate-split-concat";
  r.description = "concat of every part of a split, in order and on the same axis, is the split input";
  r.pattern.num_vars = 1;
  r.pattern.nodes = {
      {OpKind::Split, {PatternInput::var(0)}, {}},
      {OpKind::Concat, {}, {}, /*variadic=*/true},
  };
  r.pattern.constraint = [](const Graph& g, const MatchSite& s) {
    const Node& split = g.node(s.nodes[0]);
    const Node& concat = g.node(s.nodes[1]);
    if (split.as<SplitParams>().axis != concat.as<ConcatParams>().axis) return false;
    if (concat.inputs.size() != split.as<SplitParams>().sizes.size()) return false;
    for (std::size_t i = 0; i < concat.inputs.size(); ++i)
      if (concat.inputs[i] != EdgeRef{split.id, static_cast<int>(i)}) return false;
    return true;
  };
  r.rewrite = [](const Graph& g, const MatchSite& s) {
    Graph out = g;
    out.remove_node(s.nodes[1]);
    out.replace_uses({s.nodes[1], 0}, s.vars[0]);
    return out;
  };
  return r;
}

}  // namespace

std::vector<SubstitutionRule> default_rules() {
  return {fuse_conv_relu(),   split_conv_activation(), merge_parallel_convs(), split_merged_conv(),
          fold_identity(),    fuse_conv_batchnorm(),   eliminate_split_concat()};
}

std::vector<SubstitutionRule> fusion_rules() {
  std::vector<SubstitutionRule> out;
  for (auto& r : default_rules())
    if (r.name != "split-conv-activation" && r.name != "split-merged-conv") out.push_back(std::move(r));
  return out;
}

std::vector<SubstitutionRule> select_rules(std::string_view spec) {
  if (spec == "all") return default_rules();
  if (spec == "fusion-only") return fusion_rules();
  if (spec == "none" || spec.empty()) return {};
  auto catalog = default_rules();
  std::vector<SubstitutionRule> out;
  std::size_t start = 0;
  while (start <= spec.size()) {
    auto end = spec.find(',', start);
    auto name = spec.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    auto it = std::find_if(catalog.begin(), catalog.end(), [&](const SubstitutionRule& r) { return r.name == name; });
    if (it == catalog.end()) throw Error("unknown rule '" + std::string(name) + "'");
    out.push_back(*it);
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

}  // namespace enerflow
