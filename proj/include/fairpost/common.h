// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FAIRPOST_COMMON_H_
#define FAIRPOST_COMMON_H_

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fairpost {

// Failure categories. The CLI maps each one to a distinct exit code.
enum class ErrorKind {
  kConfig,
  kData,
  kTransport,
  kSolver,
  kCapability,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error ConfigError(const std::string& m) {
  return Error(ErrorKind::kConfig, m);
}
inline Error DataError(const std::string& m) {
  return Error(ErrorKind::kData, m);
}

int ExitCodeFor(ErrorKind kind);
const char* ErrorKindName(ErrorKind kind);

// Collects non-fatal conditions (excluded cells, degenerate columns, ...).
// Operations take an optional pointer; nullptr discards the messages.
struct Diagnostics {
  std::vector<std::string> warnings;
  void Warn(std::string message) { warnings.push_back(std::move(message)); }
};

inline void Warn(Diagnostics* diag, std::string message) {
  if (diag != nullptr) diag->Warn(std::move(message));
}

// Group membership of one example. Disjoint groups store the group index;
// overlapping groups store a bitmask over the G indicator columns.
struct GroupLabel {
  bool overlapping = false;
  uint32_t value = 0;

  static GroupLabel Disjoint(int a) {
    return {false, static_cast<uint32_t>(a)};
  }
  static GroupLabel Mask(uint32_t bits) { return {true, bits}; }

  int index() const { return static_cast<int>(value); }
  bool Has(int i) const { return (value >> i) & 1u; }
  // Superset membership used by overlapping-group events {A in I}.
  bool Contains(uint32_t subset) const { return (value & subset) == subset; }
  bool operator==(const GroupLabel&) const = default;
};

double LogSumExp(std::span<const double> z);
std::vector<double> Softmax(std::span<const double> z);

// Shortest round-trip decimal representation of a double.
std::string FormatDouble(double v);
double ParseDouble(std::string_view text);

// Lower-case hex SHA-256 digest.
std::string Sha256Hex(std::string_view data);

// Deterministic 64-bit seed derived from a base seed and a text key.
uint64_t DeriveSeed(uint64_t seed, std::string_view key);

std::string ReadFile(const std::string& path);
void WriteFile(const std::string& path, std::string_view contents);

}  // namespace fairpost

#endif  // FAIRPOST_COMMON_H_
