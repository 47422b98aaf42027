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

#ifndef FAIRPOST_BUNDLE_H_
#define FAIRPOST_BUNDLE_H_

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "fairpost/promptkit.h"
#include "json.hpp"

namespace fairpost {

struct Provenance {
  std::string model;
  std::vector<std::string> prompt_hashes;
  std::string timestamp;
};

// Elicited per-option log probabilities for one example. Which vectors are
// present depends on the strategy.
struct LogitBundle {
  std::string example_id;
  promptkit::Strategy strategy = promptkit::Strategy::kYOnly;
  bool swapped = false;
  std::optional<std::vector<double>> q_y;                       // K
  std::optional<std::vector<double>> q_a;                       // G
  std::optional<std::vector<std::vector<double>>> q_a_given_y;  // K x G
  std::optional<std::vector<std::vector<double>>> q_y_given_a;  // G x K
  std::optional<std::vector<double>> q_ay;                      // G*K
  std::optional<std::vector<std::array<double, 2>>> q_a_ind;    // G x 2
  Provenance provenance;

  // Throws a data error unless exactly the strategy's vectors are present
  // with the right shapes and finite entries.
  void Validate(int num_classes, int num_groups) const;
};

nlohmann::json BundleToJson(const LogitBundle& b);
LogitBundle BundleFromJson(const nlohmann::json& j);
void WriteBundlesJsonl(const std::string& path,
                       const std::vector<LogitBundle>& bundles);
std::vector<LogitBundle> ReadBundlesJsonl(const std::string& path);

}  // namespace fairpost

#endif  // FAIRPOST_BUNDLE_H_
