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

#include "fairpost/logistic.h"

#include <cmath>
#include <set>

namespace fairpost {
namespace {

// Logit assigned to the classes a constant model never predicts.
constexpr double kConstantMargin = 30.0;

Eigen::MatrixXd Logits(const Eigen::MatrixXd& w, const Eigen::MatrixXd& x) {
  const Eigen::Index d = x.cols();
  Eigen::MatrixXd z = x * w.leftCols(d).transpose();
  z.rowwise() += w.col(d).transpose();
  return z;
}

// In-place row softmax; returns the per-row log normalizer.
Eigen::VectorXd SoftmaxRows(Eigen::MatrixXd* z) {
  Eigen::VectorXd lse(z->rows());
  for (Eigen::Index i = 0; i < z->rows(); ++i) {
    const double m = z->row(i).maxCoeff();
    double s = 0.0;
    for (Eigen::Index c = 0; c < z->cols(); ++c) {
      const double e = std::exp((*z)(i, c) - m);
      (*z)(i, c) = e;
      s += e;
    }
    z->row(i) /= s;
    lse(i) = m + std::log(s);
  }
  return lse;
}

}  // namespace

double LogisticLoss(const Eigen::MatrixXd& w, const Eigen::MatrixXd& x,
                    std::span<const int> labels,
                    std::span<const double> sample_weights, double l2,
                    Eigen::MatrixXd* gradient) {
  const Eigen::Index n = x.rows(), d = x.cols();
  Eigen::MatrixXd z = Logits(w, x);
  double total_weight = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    total_weight += sample_weights.empty() ? 1.0 : sample_weights[i];
  if (!(total_weight > 0.0)) throw DataError("logistic: zero total weight");
  double loss = 0.0;
  Eigen::VectorXd picked(n);
  for (Eigen::Index i = 0; i < n; ++i) picked(i) = z(i, labels[i]);
  const Eigen::VectorXd lse = SoftmaxRows(&z);  // z now holds probabilities
  for (Eigen::Index i = 0; i < n; ++i) {
    const double wi = sample_weights.empty() ? 1.0 : sample_weights[i];
    loss += wi * (lse(i) - picked(i));
  }
  loss /= total_weight;
  const auto wf = w.leftCols(d);
  loss += 0.5 * l2 * wf.squaredNorm();
  if (gradient != nullptr) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double wi = sample_weights.empty() ? 1.0 : sample_weights[i];
      z(i, labels[i]) -= 1.0;
      z.row(i) *= wi / total_weight;
    }
    gradient->resize(w.rows(), w.cols());
    gradient->leftCols(d) = z.transpose() * x + l2 * wf;
    gradient->col(d) = z.colwise().sum().transpose();
  }
  return loss;
}

LogisticModel FitLogistic(const Eigen::MatrixXd& x, std::span<const int> labels,
                          int num_classes,
                          std::span<const double> sample_weights,
                          const LogisticOptions& options, Diagnostics* diag,
                          const Eigen::MatrixXd* init) {
  const Eigen::Index n = x.rows(), d = x.cols();
  if (n == 0) throw DataError("logistic: no training rows");
  if (static_cast<Eigen::Index>(labels.size()) != n)
    throw DataError("logistic: label count does not match rows");
  if (!sample_weights.empty() &&
      static_cast<Eigen::Index>(sample_weights.size()) != n)
    throw DataError("logistic: weight count does not match rows");
  std::set<int> observed;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes)
      throw DataError("logistic: label out of range");
    if (sample_weights.empty() || sample_weights[i] > 0.0)
      observed.insert(labels[i]);
  }
  if (observed.empty()) throw DataError("logistic: zero total weight");

  LogisticModel model;
  model.weights = Eigen::MatrixXd::Zero(num_classes, d + 1);
  if (observed.size() == 1) {
    const int only = *observed.begin();
    Warn(diag, "logistic: all training labels are class " +
                   std::to_string(only) + "; fitted a constant model");
    model.weights.col(d).setConstant(-kConstantMargin);
    model.weights(only, d) = 0.0;
    model.converged = true;
    model.final_loss = LogisticLoss(model.weights, x, labels, sample_weights,
                                    options.l2, nullptr);
    return model;
  }
  if (init != nullptr && init->rows() == num_classes && init->cols() == d + 1)
    model.weights = *init;

  Eigen::MatrixXd& w = model.weights;
  Eigen::MatrixXd g, gy;
  double f = LogisticLoss(w, x, labels, sample_weights, options.l2, &g);
  Eigen::MatrixXd y = w;
  double fy = f;
  gy = g;
  double t = 1.0;
  double step = 1.0;
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    if (g.cwiseAbs().maxCoeff() <= options.gradient_tolerance) {
      model.converged = true;
      break;
    }
    const double gsq = gy.squaredNorm();
    Eigen::MatrixXd wn;
    double fn = 0.0;
    for (;;) {
      wn = y - step * gy;
      fn = LogisticLoss(wn, x, labels, sample_weights, options.l2, nullptr);
      if (fn <= fy - 0.5 * step * gsq || step < 1e-20) break;
      step *= 0.5;
    }
    if (fn > f) {
      // Momentum overshot; restart from the current iterate.
      if (y == w) {
        if (step < 1e-20) break;
        continue;
      }
      y = w;
      fy = f;
      gy = g;
      t = 1.0;
      continue;
    }
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = wn + ((t - 1.0) / tn) * (wn - w);
    t = tn;
    w = std::move(wn);
    f = LogisticLoss(w, x, labels, sample_weights, options.l2, &g);
    fy = LogisticLoss(y, x, labels, sample_weights, options.l2, &gy);
    step *= 1.25;
  }
  model.iterations = it;
  model.final_loss = f;
  return model;
}

Eigen::MatrixXd PredictProba(const Eigen::MatrixXd& weights,
                             const Eigen::MatrixXd& x) {
  if (x.cols() + 1 != weights.cols())
    throw DataError("logistic: input dimension " + std::to_string(x.cols()) +
                    " does not match model dimension " +
                    std::to_string(weights.cols() - 1));
  Eigen::MatrixXd z = Logits(weights, x);
  SoftmaxRows(&z);
  return z;
}

}  // namespace fairpost
