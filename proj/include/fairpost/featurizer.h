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

// Composes elicited logits into joint (group, class) log-space features.

#ifndef FAIRPOST_FEATURIZER_H_
#define FAIRPOST_FEATURIZER_H_

#include <array>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fairpost/bundle.h"
#include "json.hpp"

namespace fairpost::featurizer {

inline constexpr int kMaxOverlappingGroups = 20;

enum class FeatureKind { kJoint, kYOnly };

const char* FeatureKindName(FeatureKind kind);
FeatureKind FeatureKindFromString(const std::string& s);

// Cells are ordered row-major over (group cell, class): flat = cell * K + k.
// For overlapping groups the group cell is a membership bitmask in
// [0, 2^G), the empty set first.
struct FeatureLayout {
  int num_classes = 2;
  int num_groups = 2;
  bool overlapping = false;
  FeatureKind kind = FeatureKind::kJoint;

  int num_group_cells() const {
    return overlapping ? (1 << num_groups) : num_groups;
  }
  int size() const {
    return kind == FeatureKind::kYOnly ? num_classes
                                       : num_group_cells() * num_classes;
  }
  int Flat(int cell, int k) const { return cell * num_classes + k; }
  bool operator==(const FeatureLayout&) const = default;

  nlohmann::json ToJson() const;
  static FeatureLayout FromJson(const nlohmann::json& j);
};

struct JointFeature {
  std::vector<double> q;
  FeatureLayout layout;
};

JointFeature ComposeJoint(std::span<const double> q_ay, int num_classes,
                          int num_groups);
JointFeature ComposeCondIndep(std::span<const double> q_a,
                              std::span<const double> q_y);
// conditionals[k] holds the group logits elicited under class k.
JointFeature ComposeDecomposed(std::span<const double> q_y,
                               const std::vector<std::vector<double>>& conditionals);
// Swapped factorization: conditionals[a] holds class logits under group a.
JointFeature ComposeDecomposedSwapped(
    std::span<const double> q_a,
    const std::vector<std::vector<double>>& conditionals);
// indicators[i] = {logit of "not in group i", logit of "in group i"}.
JointFeature ComposeOverlapping(std::span<const double> q_y,
                                const std::vector<std::array<double, 2>>& indicators);
JointFeature YOnlyFeature(std::span<const double> q_y);

// Dispatches on the bundle strategy. A y_only bundle yields a y_only feature.
JointFeature Featurize(const LogitBundle& bundle, int num_classes,
                       int num_groups);

// A feature matrix: one row per example, all rows sharing one layout.
struct FeatureSet {
  FeatureLayout layout;
  std::vector<std::string> ids;
  Eigen::MatrixXd rows;  // n x layout.size()

  int size() const { return static_cast<int>(ids.size()); }
};

FeatureSet FeaturizeAll(const std::vector<LogitBundle>& bundles,
                        int num_classes, int num_groups);

// JSON Lines: one {"id", "layout", "q"} object per row.
void WriteFeaturesJsonl(const std::string& path, const FeatureSet& set);
FeatureSet ReadFeaturesJsonl(const std::string& path);
// Little-endian flat binary with a fixed header.
void WriteFeaturesBinary(const std::string& path, const FeatureSet& set);
FeatureSet ReadFeaturesBinary(const std::string& path);

}  // namespace fairpost::featurizer

#endif  // FAIRPOST_FEATURIZER_H_
