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
#include "enerflow/profile.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "enerflow/errors.hpp"
#include "hashing.hpp"
#include "json.hpp"

namespace enerflow {

using json = nlohmann::ordered_json;

int candidate_algorithms(OpKind kind) {
  switch (kind) {
    case OpKind::Conv2d: return 4;
    case OpKind::MatMul: return 3;
    default: return 2;
  }
}

double node_flops(const NodeSignature& sig) {
  if (sig.input_shapes.empty()) return 1.0;
  const TensorShape& in = sig.input_shapes.front();
  const double numel = static_cast<double>(in.numel());
  auto window = [&](std::int64_t size, std::size_t axis) {
    const auto* k = sig.param("k");
    const auto* s = sig.param("s");
    const auto* p = sig.param("p");
    return (size + 2 * (*p)[axis] - (*k)[axis]) / (*s)[axis] + 1;
  };
  switch (sig.kind) {
    case OpKind::Conv2d: {
      const double oc = static_cast<double>(sig.param_or("oc", 1));
      const double oh = static_cast<double>(window(in[2], 0));
      const double ow = static_cast<double>(window(in[3], 1));
      const auto* k = sig.param("k");
      const double out = static_cast<double>(in[0]) * oc * oh * ow;
      return 2.0 * out * static_cast<double>(in[1] * (*k)[0] * (*k)[1]) + (sig.param_or("act", 0) ? out : 0.0);
    }
    case OpKind::MatMul:
      return 2.0 * numel * static_cast<double>(sig.param_or("out", 1));
    case OpKind::MaxPool:
    case OpKind::AvgPool: {
      const auto* k = sig.param("k");
      const double out = static_cast<double>(in[0] * in[1] * window(in[2], 0) * window(in[3], 1));
      return out * static_cast<double>((*k)[0] * (*k)[1]);
    }
    case OpKind::BatchNorm:
      return 2.0 * numel;
    case OpKind::Concat: {
      double total = 0.0;
      for (const auto& s : sig.input_shapes) total += static_cast<double>(s.numel());
      return total;
    }
    default:
      return numel;
  }
}

// ---------------------------------------------------------------------------
// Synthetic profiler

namespace {

// Operator family: kind and hyperparameters without input shapes.
std::string family_key(const NodeSignature& sig) {
  std::string key(to_string(sig.kind));
  for (const auto& [name, values] : sig.params) {
    key += '|' + name + '=';
    for (auto v : values) key += std::to_string(v) + ',';
  }
  return key;
}

double keyed_uniform(std::uint64_t seed, std::string_view key, AlgorithmId alg, std::string_view tag) {
  detail::Hasher h;
  h.bytes("enerflow-synthetic").u64(seed).bytes(key).i64(alg).bytes(tag);
  return static_cast<double>(h.digest() >> 11) * 0x1.0p-53;
}

constexpr double kTimeScale = 2e-6;  // ms per flop^0.9
constexpr double kInapplicableRate = 0.2;

bool synthetic_applicable(const NodeSignature& sig, AlgorithmId alg, std::uint64_t seed) {
  const int n = candidate_algorithms(sig.kind);
  if (alg < 0 || alg >= n) return false;
  int fallback = 0;
  double best = -1.0;
  bool any = false;
  for (int a = 0; a < n; ++a) {
    const double u = keyed_uniform(seed, sig.key, a, "avail");
    if (u >= kInapplicableRate) any = true;
    if (u > best) {
      best = u;
      fallback = a;
    }
  }
  if (!any) return alg == fallback;
  return keyed_uniform(seed, sig.key, alg, "avail") >= kInapplicableRate;
}

}  // namespace

std::optional<CostRecord> synthetic_profile(const NodeSignature& sig, AlgorithmId alg, std::uint64_t seed) {
  if (!synthetic_applicable(sig, alg, seed)) return std::nullopt;
  const std::string family = family_key(sig);
  const double multiplier = 0.5 + 1.5 * keyed_uniform(seed, family, alg, "multiplier");
  const double overhead = 0.002 + 0.008 * keyed_uniform(seed, family, alg, "overhead");
  const double jitter = 0.9 + 0.2 * keyed_uniform(seed, sig.key, alg, "jitter");
  const double flops = std::max(node_flops(sig), 1.0);
  CostRecord r;
  r.time_ms = kTimeScale * std::pow(flops, 0.9) * multiplier * jitter + overhead;
  const double speed = (2.0 - multiplier) / 1.5;
  r.power_w = 40.0 + 160.0 * (0.6 * speed + 0.4 * keyed_uniform(seed, sig.key, alg, "power"));
  return r;
}

std::optional<CostRecord> SyntheticProfiler::measure(const NodeSignature& sig, AlgorithmId alg) {
  ++invocations_;
  return synthetic_profile(sig, alg, seed_);
}

// ---------------------------------------------------------------------------
// External profiler

namespace {

std::string replace_all(std::string s, std::string_view from, const std::string& to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
    s.replace(pos, from.size(), to);
  return s;
}

json node_spec_json(const NodeSignature& sig, AlgorithmId alg) {
  json spec;
  spec["signature"] = sig.key;
  spec["kind"] = std::string(to_string(sig.kind));
  json shapes = json::array();
  for (const auto& s : sig.input_shapes) shapes.push_back(s.dims());
  spec["input_shapes"] = shapes;
  json params = json::object();
  for (const auto& [name, values] : sig.params) params[name] = values;
  spec["params"] = params;
  spec["alg"] = alg;
  return spec;
}

std::filesystem::path scratch_path(std::string_view stem) {
  static std::atomic<unsigned> counter{0};
  return std::filesystem::temp_directory_path() /
         ("enerflow-" + std::string(stem) + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::optional<CostRecord> measure_external(const std::string& command_template, const NodeSignature& sig,
                                           AlgorithmId alg) {
  const auto spec_path = scratch_path("spec").replace_extension(".json");
  const auto err_path = scratch_path("stderr");
  {
    std::ofstream out(spec_path);
    if (!out) throw IoError("cannot write node spec " + spec_path.string());
    out << node_spec_json(sig, alg).dump() << '\n';
  }
  std::string cmd = replace_all(command_template, "{spec}", spec_path.string());
  cmd = replace_all(cmd, "{alg}", std::to_string(alg));
  cmd = "(" + cmd + ") 2>'" + err_path.string() + "'";

  std::string output;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) throw CommandFailed(-1, "could not start command");
  std::array<char, 4096> buf{};
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) output.append(buf.data(), n);
  const int status = ::pclose(pipe);
  const std::string err = read_file(err_path);
  std::error_code ec;
  std::filesystem::remove(spec_path, ec);
  std::filesystem::remove(err_path, ec);

  const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  if (code != 0) throw CommandFailed(code, err.substr(0, 200));

  json doc;
  try {
    doc = json::parse(output);
  } catch (const json::parse_error& e) {
    throw ParseError("measurement output", 1, e.what());
  }
  if (!doc.is_object()) throw ParseError("measurement output", 1, "expected a JSON object");
  if (doc.value("not_applicable", false)) return std::nullopt;
  if (!doc.contains("time_ms") || !doc.contains("power_w") || !doc["time_ms"].is_number() ||
      !doc["power_w"].is_number())
    throw ParseError("measurement output", 1, "expected numeric time_ms and power_w");
  CostRecord r{doc["time_ms"].get<double>(), doc["power_w"].get<double>(), std::nullopt};
  if (!(r.time_ms > 0.0 && r.power_w > 0.0)) throw ParseError("measurement output", 1, "time_ms and power_w must be positive");
  return r;
}

std::optional<CostRecord> ExternalProfiler::measure(const NodeSignature& sig, AlgorithmId alg) {
  ++invocations_;
  return measure_external(template_, sig, alg);
}

std::unique_ptr<Profiler> make_profiler(std::string_view spec) {
  if (spec == "none") return nullptr;
  if (spec.rfind("synthetic", 0) == 0) {
    std::uint64_t seed = 0;
    auto rest = spec.substr(std::string_view("synthetic").size());
    if (!rest.empty()) {
      if (rest.rfind(":seed=", 0) != 0) throw Error("expected synthetic:seed=N, got '" + std::string(spec) + "'");
      try {
        seed = std::stoull(std::string(rest.substr(6)));
      } catch (const std::exception&) {
        throw Error("bad synthetic seed in '" + std::string(spec) + "'");
      }
    }
    return std::make_unique<SyntheticProfiler>(seed);
  }
  if (spec.rfind("external:cmd=", 0) == 0) {
    auto cmd = spec.substr(std::string_view("external:cmd=").size());
    if (cmd.empty()) throw Error("external profiler needs a command template");
    return std::make_unique<ExternalProfiler>(std::string(cmd));
  }
  throw Error("unknown profiler '" + std::string(spec) + "'");
}

// ---------------------------------------------------------------------------
// Persistence

std::string record_line(const std::string& sig, const CostEntry& e) {
  json j;
  j["sig"] = sig;
  j["alg"] = e.alg;
  j["alg_label"] = e.label;
  j["time_ms"] = e.record.time_ms;
  j["power_w"] = e.record.power_w;
  if (e.record.listed_energy) j["energy_j"] = *e.record.listed_energy;
  return j.dump();
}

CostDatabase load_database(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open cost database " + path.string());
  CostDatabase db;
  std::string line;
  std::size_t lineno = 0;
  const std::string where = path.string();
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(where, lineno, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("sig") || !j["sig"].is_string() || !j.contains("alg") ||
        !j["alg"].is_number_integer() || !j.contains("time_ms") || !j["time_ms"].is_number() ||
        !j.contains("power_w") || !j["power_w"].is_number())
      throw ParseError(where, lineno, "record needs sig, alg, time_ms and power_w");
    const int alg = j["alg"].get<int>();
    if (alg < 0) throw ParseError(where, lineno, "alg must be non-negative");
    CostRecord r;
    r.time_ms = j["time_ms"].get<double>();
    r.power_w = j["power_w"].get<double>();
    if (!(r.time_ms > 0.0)) throw ParseError(where, lineno, "time_ms must be positive");
    if (!(r.power_w > 0.0)) throw ParseError(where, lineno, "power_w must be positive");
    if (j.contains("energy_j")) {
      if (!j["energy_j"].is_number() || !(j["energy_j"].get<double>() > 0.0))
        throw ParseError(where, lineno, "energy_j must be positive");
      r.listed_energy = j["energy_j"].get<double>();
    }
    db.put(j["sig"].get<std::string>(), alg, r, j.value("alg_label", std::string()));
  }
  return db;
}

CostDatabase load_database_or_empty(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return {};
  return load_database(path);
}

void persist(const CostDatabase& db, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write cost database " + path.string());
  for (const auto& [sig, algs] : db.table())
    for (const auto& [alg, entry] : algs) out << record_line(sig, entry) << '\n';
  if (!out) throw IoError("failed writing cost database " + path.string());
}

void append_records(const std::filesystem::path& path, const std::string& sig,
                    const CostDatabase::AlgorithmTable& records) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot append to cost database " + path.string());
  for (const auto& [alg, entry] : records) out << record_line(sig, entry) << '\n';
  out.flush();
  if (!out) throw IoError("failed appending to cost database " + path.string());
}

std::size_t ensure_profiled(const Graph& g, CostDatabase& db, Profiler& profiler,
                            const std::optional<std::filesystem::path>& journal) {
  const ShapeMap shapes = infer_shapes(g);
  std::set<std::string> done;
  std::size_t added = 0;
  for (const auto& [id, n] : g.nodes()) {
    if (n.kind == OpKind::Input) continue;
    NodeSignature sig = signature(n, shapes);
    if (db.has_signature(sig.key) || !done.insert(sig.key).second) continue;
    CostDatabase::AlgorithmTable batch;
    const int candidates = profiler.candidates(sig);
    for (AlgorithmId alg = 0; alg < candidates; ++alg)
      if (auto rec = profiler.measure(sig, alg))
        batch[alg] = CostEntry{alg, default_algorithm_label(alg), *rec};
    if (batch.empty()) throw Error("no applicable algorithm for " + sig.key);
    for (const auto& [alg, entry] : batch) db.put(sig.key, alg, entry.record, entry.label);
    if (journal) append_records(*journal, sig.key, batch);
    added += batch.size();
  }
  return added;
}

void ProfileSession::ensure(const Graph& g) {
  if (profiler) new_records += ensure_profiled(g, db, *profiler, journal);
}

}  // namespace enerflow
