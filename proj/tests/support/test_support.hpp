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

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>
#include <utility>
#include <vector>

#include "enerflow/generators.hpp"
#include "enerflow/graph.hpp"
#include "enerflow/rules.hpp"

namespace enerflow::testing {

inline std::filesystem::path data_file(const std::string& name) {
  return std::filesystem::path(ENERFLOW_DATA_DIR) / name;
}

/// Fresh directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("enerflow-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// `count` (graph, site) pairs where `rule` matches, drawn from random graphs and their
/// one-step rewrites so that sites created only by other rules also occur.
inline std::vector<std::pair<Graph, MatchSite>> rule_instances(const SubstitutionRule& rule, std::size_t count,
                                                               std::uint64_t seed0 = 1) {
  std::vector<std::pair<Graph, MatchSite>> out;
  const auto catalog = default_rules();
  for (std::uint64_t seed = seed0; out.size() < count && seed < seed0 + 20000; ++seed) {
    std::mt19937_64 rng(seed);
    Graph g = random_graph(seed, 3 + static_cast<int>(seed % 6));
    std::vector<Graph> candidates{g};
    auto next = neighbors(g, catalog);
    if (!next.empty()) candidates.push_back(next[rng() % next.size()]);
    for (const Graph& c : candidates) {
      auto sites = match_rule(rule, c);
      if (sites.empty()) continue;
      out.emplace_back(c, sites[rng() % sites.size()]);
      break;
    }
  }
  return out;
}

}  // namespace enerflow::testing
