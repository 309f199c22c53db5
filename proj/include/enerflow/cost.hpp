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

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "enerflow/graph.hpp"

namespace enerflow {

/// Algorithms are small non-negative integers; 0 displays as "a", 1 as "b", ...
using AlgorithmId = int;
std::string default_algorithm_label(AlgorithmId alg);

/// Per-inference cost of one node under one algorithm.
/// Units: time in ms, power in W, energy in J per 1000 inferences (ms * W).
struct CostRecord {
  double time_ms = 0.0;
  double power_w = 0.0;
  /// A transcribed energy measurement, used instead of time * power when present.
  std::optional<double> listed_energy;

  double energy() const { return listed_energy.value_or(time_ms * power_w); }
  friend bool operator==(const CostRecord&, const CostRecord&) = default;
};

struct CostEntry {
  AlgorithmId alg = 0;
  std::string label;
  CostRecord record;
  friend bool operator==(const CostEntry&, const CostEntry&) = default;
};

/// Measured costs keyed by node signature. A signature's applicable algorithms are exactly
/// the algorithms with a record; a signature present in the database is fully profiled.
class CostDatabase {
 public:
  using AlgorithmTable = std::map<AlgorithmId, CostEntry>;

  /// Inserts or overwrites one record.
  void put(const std::string& sig, AlgorithmId alg, CostRecord record, std::string label = {});
  bool has_signature(const std::string& sig) const { return table_.count(sig) != 0; }
  /// nullptr when the signature has not been profiled.
  const AlgorithmTable* algorithms(const std::string& sig) const;
  /// Throws MissingEntry (unknown signature) or NotApplicable (no record for `alg`).
  const CostEntry& lookup(const std::string& sig, AlgorithmId alg) const;

  std::size_t size() const;
  std::size_t signature_count() const { return table_.size(); }
  const std::map<std::string, AlgorithmTable>& table() const { return table_; }

  friend bool operator==(const CostDatabase&, const CostDatabase&) = default;

 private:
  std::map<std::string, AlgorithmTable> table_;
};

/// Total map from operator node id to algorithm. Input nodes carry no algorithm.
using AlgorithmAssignment = std::map<int, AlgorithmId>;

/// Number of nodes mapped differently. Throws DomainMismatch if the node sets differ.
std::size_t distance(const AlgorithmAssignment& a, const AlgorithmAssignment& b);

struct Metrics {
  double time_ms = 0.0;
  double energy_j = 0.0;  // per 1000 inferences
  double power_w = 0.0;
};

/// Cost options of every operator node of one graph, resolved against a database once so
/// that assignments can be evaluated as index vectors.
class CostTable {
 public:
  struct NodeChoices {
    int node_id = -1;
    std::string signature;
    std::vector<CostEntry> options;  // ascending algorithm id
  };

  /// Throws MissingEntry for any unprofiled signature.
  CostTable(const Graph& graph, const CostDatabase& db);

  const std::vector<NodeChoices>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }

  /// `choice[i]` indexes nodes()[i].options.
  Metrics metrics(std::span<const int> choice) const;
  AlgorithmAssignment to_assignment(std::span<const int> choice) const;
  /// Throws DomainMismatch or NotApplicable.
  std::vector<int> to_choice(const AlgorithmAssignment& a) const;
  /// Lowest applicable algorithm for every node.
  std::vector<int> default_choice() const { return std::vector<int>(nodes_.size(), 0); }

 private:
  std::vector<NodeChoices> nodes_;
};

/// Sum of node times. Throws MissingEntry, NotApplicable or DomainMismatch.
double model_time(const Graph& g, const AlgorithmAssignment& a, const CostDatabase& db);
/// Sum of node energies.
double model_energy(const Graph& g, const AlgorithmAssignment& a, const CostDatabase& db);
/// Average power over one inference: sum(time * power) / sum(time). Equals
/// model_energy / model_time unless a record carries a listed energy.
double model_power(const Graph& g, const AlgorithmAssignment& a, const CostDatabase& db);
Metrics model_metrics(const Graph& g, const AlgorithmAssignment& a, const CostDatabase& db);

struct NormalizationRefs {
  double time_ms = 1.0;
  double energy_j = 1.0;
  double power_w = 1.0;
  friend bool operator==(const NormalizationRefs&, const NormalizationRefs&) = default;
};

/// Scalarization of (time, energy, power). Linear and Product weight energy by w and time
/// by 1 - w, each metric divided by its reference.
class CostFunction {
 public:
  enum class Kind { Time, Energy, Power, Linear, Product, Custom };

  static CostFunction time();
  static CostFunction energy();
  static CostFunction power();
  static CostFunction linear(double w, NormalizationRefs refs = {});
  static CostFunction product(double w, NormalizationRefs refs = {});
  /// w_time * T/T_ref + w_energy * E/E_ref + w_power * P/P_ref.
  static CostFunction custom(double w_time, double w_energy, double w_power, NormalizationRefs refs = {});

  double evaluate(const Metrics& m) const;
  /// True when the cost is a non-negative combination of time and energy only, so it
  /// separates per node.
  bool is_separable() const;

  Kind kind() const { return kind_; }
  double weight() const { return w_; }
  const NormalizationRefs& refs() const { return refs_; }
  CostFunction with_refs(NormalizationRefs refs) const;
  /// "energy", "linear(w=0.5)", ...
  std::string describe() const;

 private:
  CostFunction(Kind kind, double w, NormalizationRefs refs) : kind_(kind), w_(w), refs_(refs) {}

  Kind kind_;
  double w_ = 0.0;
  double wt_ = 0.0, we_ = 0.0, wp_ = 0.0;
  NormalizationRefs refs_;
};

double eval_cost(const CostFunction& f, const Graph& g, const AlgorithmAssignment& a, const CostDatabase& db);

/// T_ref and E_ref are the minimum modeled time and energy of `g` over all assignments
/// (both metrics separate per node, so the greedy per-node minimum is exact); P_ref = E_ref / T_ref.
NormalizationRefs normalization_refs(const Graph& g, const CostDatabase& db);

}  // namespace enerflow
