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

// Calibration of joint log-space features against (group, class) labels.

#ifndef FAIRPOST_CALIBRATOR_H_
#define FAIRPOST_CALIBRATOR_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fairpost/common.h"
#include "fairpost/featurizer.h"
#include "fairpost/logistic.h"
#include "json.hpp"

namespace fairpost::calibrator {

using featurizer::FeatureKind;
using featurizer::FeatureLayout;

// kJoint predicts the (group cell, class) label. kLabel predicts the class
// only and yields a y_only distribution.
enum class Target { kJoint, kLabel };

struct CalibratorOptions {
  Target target = Target::kJoint;
  LogisticOptions logistic;
  uint64_t seed = 0;
};

struct CalibratorModel {
  FeatureLayout input_layout;
  FeatureLayout output_layout;
  Eigen::MatrixXd weights;  // classes x (input dim + 1)
  int iterations = 0;
  double final_loss = 0.0;
  bool converged = false;
  uint64_t seed = 0;

  nlohmann::json ToJson() const;
  static CalibratorModel FromJson(const nlohmann::json& j);
};

// The joint class of an example: cell * K + y.
int JointLabel(int y, const GroupLabel& a, int num_classes);

// A y_only feature set may be fitted to joint labels when `layout` carries
// the group count; the output then spans the joint cells.
CalibratorModel Fit(const featurizer::FeatureSet& features,
                    std::span<const int> y, std::span<const GroupLabel> a,
                    const CalibratorOptions& options,
                    Diagnostics* diag = nullptr);

std::vector<double> Predict(const CalibratorModel& model,
                            std::span<const double> feature);
Eigen::MatrixXd PredictAll(const CalibratorModel& model,
                           const Eigen::MatrixXd& features);

// Sums the joint over group cells. A y_only vector is returned unchanged.
std::vector<double> MarginalY(std::span<const double> p,
                              const FeatureLayout& layout);

// Distribution over group cells, optionally conditioned on class j. Zero
// conditioning mass yields the uniform distribution and a warning.
std::vector<double> MarginalGroup(std::span<const double> p,
                                  const FeatureLayout& layout,
                                  std::optional<int> condition = std::nullopt,
                                  Diagnostics* diag = nullptr);

void SaveModel(const std::string& path, const CalibratorModel& model);
CalibratorModel LoadModel(const std::string& path);

}  // namespace fairpost::calibrator

#endif  // FAIRPOST_CALIBRATOR_H_
