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
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "enerflow/cost.hpp"
#include "enerflow/signature.hpp"

namespace enerflow {

/// Number of algorithm ids probed for a node of this kind (conv2d 4, matmul 3, others 2).
int candidate_algorithms(OpKind kind);

/// Floating-point work of one inference of the node.
double node_flops(const NodeSignature& sig);

/// Deterministic stand-in for hardware measurement. time = c * flops^0.9 * m + overhead where
/// the multiplier m in [0.5, 2] and the overhead are keyed by (operator family, algorithm,
/// seed), so larger nodes of one family always cost more. Power lies in [40, 200] W and
/// leans higher for faster algorithms. Each algorithm is inapplicable with probability 0.2,
/// but at least one candidate is always applicable. nullopt means not applicable.
std::optional<CostRecord> synthetic_profile(const NodeSignature& sig, AlgorithmId alg, std::uint64_t seed);

/// Runs one measurement command. The template's "{spec}" is replaced by the path of a JSON
/// node-spec file (signature fields plus "alg") and "{alg}" by the algorithm id. The command
/// must print {"time_ms": t, "power_w": p} or {"not_applicable": true} on stdout.
/// Throws CommandFailed or ParseError.
std::optional<CostRecord> measure_external(const std::string& command_template, const NodeSignature& sig,
                                           AlgorithmId alg);

class Profiler {
 public:
  virtual ~Profiler() = default;
  virtual std::optional<CostRecord> measure(const NodeSignature& sig, AlgorithmId alg) = 0;
  virtual int candidates(const NodeSignature& sig) const { return candidate_algorithms(sig.kind); }
  virtual std::string describe() const = 0;
  /// Number of measure() calls so far.
  std::size_t invocations() const { return invocations_; }

 protected:
  std::size_t invocations_ = 0;
};

class SyntheticProfiler final : public Profiler {
 public:
  explicit SyntheticProfiler(std::uint64_t seed) : seed_(seed) {}
  std::optional<CostRecord> measure(const NodeSignature& sig, AlgorithmId alg) override;
  std::string describe() const override { return "synthetic:seed=" + std::to_string(seed_); }

 private:
  std::uint64_t seed_;
};

/// One command invocation per (signature, algorithm), strictly sequential: concurrent
/// hardware runs would corrupt each other's power readings.
class ExternalProfiler final : public Profiler {
 public:
  explicit ExternalProfiler(std::string command_template) : template_(std::move(command_template)) {}
  std::optional<CostRecord> measure(const NodeSignature& sig, AlgorithmId alg) override;
  std::string describe() const override { return "external:cmd=" + template_; }

 private:
  std::string template_;
};

/// "synthetic:seed=N", "external:cmd=TEMPLATE" or "none" (nullptr). Throws Error.
std::unique_ptr<Profiler> make_profiler(std::string_view spec);

// ---------------------------------------------------------------------------
// Persistence: JSON Lines, one record per line,
//   {"sig": "...", "alg": 0, "alg_label": "a", "time_ms": 0.0195, "power_w": 144.5}
// with an optional "energy_j" for transcribed energy measurements. Duplicate keys resolve
// last-write-wins on load.

/// Throws IoError or ParseError (with the 1-based line number).
CostDatabase load_database(const std::filesystem::path& path);
/// Empty database when the file does not exist.
CostDatabase load_database_or_empty(const std::filesystem::path& path);
/// Rewrites the file with every record, sorted by signature then algorithm.
void persist(const CostDatabase& db, const std::filesystem::path& path);
/// Appends all records of one signature and flushes.
void append_records(const std::filesystem::path& path, const std::string& sig,
                    const CostDatabase::AlgorithmTable& records);
std::string record_line(const std::string& sig, const CostEntry& entry);

/// Profiles every signature of `g` missing from `db`. Each signature is measured under all
/// candidate algorithms and committed as one batch (to `db` and, when given, appended to
/// `journal`), so a signature present in the database is always complete. Returns the
/// number of new records. Throws whatever the profiler throws; earlier batches stay persisted.
std::size_t ensure_profiled(const Graph& g, CostDatabase& db, Profiler& profiler,
                            const std::optional<std::filesystem::path>& journal = std::nullopt);

/// Database plus an optional profiler and journal, handed to the search so that new graphs
/// can be profiled on demand.
struct ProfileSession {
  CostDatabase& db;
  Profiler* profiler = nullptr;
  std::optional<std::filesystem::path> journal;
  std::size_t new_records = 0;

  /// No-op without a profiler; the cost table then reports MissingEntry.
  void ensure(const Graph& g);
};

}  // namespace enerflow
