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

#include <optional>
#include <stdexcept>
#include <string>

namespace enerflow {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Structural problem in a graph (dangling reference, cycle, bad arity).
class GraphError : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  ShapeMismatch(int node_id, const std::string& reason)
      : Error("shape mismatch at node " + std::to_string(node_id) + ": " + reason),
        node_id_(node_id) {}
  int node_id() const { return node_id_; }

 private:
  int node_id_;
};

/// Malformed graph file. `node_id` names the offending node when known.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what, std::optional<int> node_id = std::nullopt)
      : Error(what), node_id_(node_id) {}
  std::optional<int> node_id() const { return node_id_; }

 private:
  std::optional<int> node_id_;
};

class MissingInput : public Error {
 public:
  explicit MissingInput(const std::string& name)
      : Error("missing input tensor '" + name + "'"), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

class InvalidSite : public Error {
 public:
  using Error::Error;
};

/// A node signature has no records in the cost database; profiling is needed.
class MissingEntry : public Error {
 public:
  explicit MissingEntry(const std::string& sig)
      : Error("no cost records for signature " + sig), sig_(sig) {}
  const std::string& signature() const { return sig_; }

 private:
  std::string sig_;
};

class NotApplicable : public Error {
 public:
  NotApplicable(const std::string& sig, int alg)
      : Error("algorithm " + std::to_string(alg) + " not applicable to " + sig),
        sig_(sig), alg_(alg) {}
  const std::string& signature() const { return sig_; }
  int algorithm() const { return alg_; }

 private:
  std::string sig_;
  int alg_;
};

class DomainMismatch : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& where, std::size_t line, const std::string& reason)
      : Error(where + ":" + std::to_string(line) + ": " + reason), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class CommandFailed : public Error {
 public:
  CommandFailed(int exit_code, const std::string& stderr_excerpt)
      : Error("measurement command failed with exit code " + std::to_string(exit_code) +
              (stderr_excerpt.empty() ? std::string() : ": " + stderr_excerpt)),
        exit_code_(exit_code), stderr_(stderr_excerpt) {}
  int exit_code() const { return exit_code_; }
  const std::string& stderr_excerpt() const { return stderr_; }

 private:
  int exit_code_;
  std::string stderr_;
};

class SpaceTooLarge : public Error {
 public:
  using Error::Error;
};

class Infeasible : public Error {
 public:
  explicit Infeasible(double best_time_ms)
      : Error("time bound unattainable; best achievable time is " +
              std::to_string(best_time_ms) + " ms"),
        best_time_(best_time_ms) {}
  double best_time_ms() const { return best_time_; }

 private:
  double best_time_;
};

}  // namespace enerflow
