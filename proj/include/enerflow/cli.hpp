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

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "enerflow/cost.hpp"
#include "enerflow/search.hpp"

namespace enerflow {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int invalid_input = 1;
inline constexpr int infeasible = 2;
inline constexpr int missing_entries = 3;
inline constexpr int command_failed = 4;
}  // namespace exit_code

/// Parsed --cost argument:
///   time | energy | power | linear:w=F | product:w=F | mix:time=F,energy=F,power=F |
///   constrained:time<=F
struct CostSpec {
  std::string text;
  CostFunction function = CostFunction::energy();
  /// Linear, product and mix costs are divided by the origin graph's references.
  bool normalized = false;
  /// Set for constrained:time<=F.
  std::optional<double> time_bound_ms;
};

/// Throws Error on malformed input.
CostSpec parse_cost_spec(std::string_view text);

/// Default inner radius: 1 for separable costs, 2 otherwise.
int default_radius(const CostSpec& spec);

struct AblationRow {
  std::string name;  // origin, inner-only, outer-only, both
  Metrics metrics;
  double cost = 0.0;
};

/// The four search configurations of the ablation, evaluated under `f`.
std::vector<AblationRow> ablation(const Graph& g0, std::span<const SubstitutionRule> rules, ProfileSession& session,
                                  const CostFunction& f, const SearchConfig& cfg);

/// Entry point of the `enerflow` tool. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace enerflow
