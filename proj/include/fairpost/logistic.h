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

// Weighted multinomial logistic regression with an L2 penalty, fit by
// full-batch accelerated gradient descent with backtracking.

#ifndef FAIRPOST_LOGISTIC_H_
#define FAIRPOST_LOGISTIC_H_

#include <span>

#include <Eigen/Dense>

#include "fairpost/common.h"

namespace fairpost {

struct LogisticOptions {
  double l2 = 1e-4;  // penalty (l2 / 2) * ||W||^2, bias column excluded
  int max_iterations = 5000;
  double gradient_tolerance = 1e-6;  // max-norm of the gradient
};

// weights: C x (D + 1); the last column is the bias.
struct LogisticModel {
  Eigen::MatrixXd weights;
  int iterations = 0;
  double final_loss = 0.0;
  bool converged = false;

  int num_classes() const { return static_cast<int>(weights.rows()); }
  int input_dim() const { return static_cast<int>(weights.cols()) - 1; }
};

// Objective: sum_i w_i CE_i / sum_i w_i + penalty. Empty weights mean 1.
// Fills `gradient` (same shape as weights) when non-null.
double LogisticLoss(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& x,
                    std::span<const int> labels,
                    std::span<const double> sample_weights, double l2,
                    Eigen::MatrixXd* gradient);

// A single observed class yields a constant model for that class and a
// warning. `init` (optional) warm-starts the solver.
LogisticModel FitLogistic(const Eigen::MatrixXd& x, std::span<const int> labels,
                          int num_classes,
                          std::span<const double> sample_weights,
                          const LogisticOptions& options,
                          Diagnostics* diag = nullptr,
                          const Eigen::MatrixXd* init = nullptr);

// Row-wise class probabilities, n x C.
Eigen::MatrixXd PredictProba(const Eigen::MatrixXd& weights,
                             const Eigen::MatrixXd& x);

}  // namespace fairpost

#endif  // FAIRPOST_LOGISTIC_H_
