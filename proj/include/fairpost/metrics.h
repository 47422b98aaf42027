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

// Accuracy and group-fairness violations of (possibly randomized)
// classifiers. Rates are expectations under each example's output
// distribution.

#ifndef FAIRPOST_METRICS_H_
#define FAIRPOST_METRICS_H_

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fairpost/common.h"
#include "json.hpp"

namespace fairpost::metrics {

enum class Criterion { kSP, kTPR, kFPR, kEO, kTPRMulticlass, kWFPR };

const char* CriterionName(Criterion c);
Criterion CriterionFromString(const std::string& s);

struct FairnessSpec {
  Criterion criterion = Criterion::kSP;
  int positive_class = 1;  // the rate measured by TPR / FPR
  int negative_class = 0;  // the class conditioned on by FPR
  double tolerance = 0.0;

  nlohmann::json ToJson() const;
  static FairnessSpec FromJson(const nlohmann::json& j);
};

struct PredictionSet {
  Eigen::MatrixXd dist;  // n x K, rows in the simplex
  std::vector<int> y;
  std::vector<GroupLabel> a;
  int num_groups = 2;
  bool overlapping = false;
  std::string split;

  int size() const { return static_cast<int>(y.size()); }
  int num_classes() const { return static_cast<int>(dist.cols()); }
  // Throws a data error on shape mismatches or out-of-range labels.
  void Validate() const;
};

// One-hot rows for hard predictions.
Eigen::MatrixXd OneHot(const std::vector<int>& predictions, int num_classes);

double Accuracy(const PredictionSet& p);
double VSp(const PredictionSet& p, Diagnostics* diag = nullptr);
double VTpr(const PredictionSet& p, int positive_class = 1,
            Diagnostics* diag = nullptr);
double VFpr(const PredictionSet& p, int positive_class = 1,
            int negative_class = 0, Diagnostics* diag = nullptr);
double VEo(const PredictionSet& p, Diagnostics* diag = nullptr);
double VTprMulticlass(const PredictionSet& p, Diagnostics* diag = nullptr);
// Overlapping groups; events are supersets {A_i = 1 for all i in I}.
double VFprOverlapping(const PredictionSet& p, int positive_class = 1,
                       int negative_class = 0, Diagnostics* diag = nullptr);
double VFprWeighted(const PredictionSet& p, int positive_class = 1,
                    int negative_class = 0, Diagnostics* diag = nullptr);

// Dispatch. FPR on overlapping labels uses the all-way subgroup variant.
// Throws a config error when the criterion does not fit the label shape.
double Violation(const FairnessSpec& spec, const PredictionSet& p,
                 Diagnostics* diag = nullptr);
void CheckCompatible(const FairnessSpec& spec, int num_classes,
                     bool overlapping);

}  // namespace fairpost::metrics

#endif  // FAIRPOST_METRICS_H_
