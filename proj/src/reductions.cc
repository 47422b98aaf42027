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

#include <algorithm>
#include <cmath>

#include "fairpost/fairalg.h"

namespace fairpost::fairalg {
namespace {

// Moments gamma_c(h) = E[h | A=a, event] - E[h | event], one pair of signed
// constraints per (event, group). h is the indicator of the positive class.
struct Moments {
  std::vector<Eigen::VectorXd> coef;  // per signed constraint, over examples
  Eigen::VectorXd error_if_positive;  // per example, 1/n when y != pos
  Eigen::VectorXd error_if_negative;  // per example, 1/n when y == pos
};

Moments BuildMoments(const TrainingSet& d, const FairnessSpec& spec) {
  const int n = d.size();
  const int pos = spec.positive_class;
  std::vector<int> events;  // the conditioning class, -1 for all
  switch (spec.criterion) {
    case Criterion::kSP: events = {-1}; break;
    case Criterion::kTPR: events = {pos}; break;
    case Criterion::kEO: events = {0, 1}; break;
    default: throw ConfigError("reductions supports SP, TPR and EO only");
  }
  Moments m;
  for (int ev : events) {
    std::vector<double> group_count(d.num_groups, 0.0);
    double count = 0.0;
    for (int i = 0; i < n; ++i) {
      if (ev >= 0 && d.y[i] != ev) continue;
      group_count[d.a[i].index()] += 1.0;
      count += 1.0;
    }
    if (count == 0.0) continue;
    for (int g = 0; g < d.num_groups; ++g) {
      if (group_count[g] == 0.0) continue;
      Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
      for (int i = 0; i < n; ++i) {
        if (ev >= 0 && d.y[i] != ev) continue;
        c[i] = (d.a[i].index() == g ? 1.0 / group_count[g] : 0.0) - 1.0 / count;
      }
      m.coef.push_back(c);
      m.coef.push_back(-c);
    }
  }
  m.error_if_positive.resize(n);
  m.error_if_negative.resize(n);
  for (int i = 0; i < n; ++i) {
    m.error_if_positive[i] = d.y[i] != pos ? 1.0 / n : 0.0;
    m.error_if_negative[i] = d.y[i] == pos ? 1.0 / n : 0.0;
  }
  return m;
}

Eigen::VectorXd Indicator(const Eigen::MatrixXd& w, const Eigen::MatrixXd& x,
                          int pos) {
  const std::vector<int> h = ArgmaxRows(PredictProba(w, x));
  Eigen::VectorXd out(h.size());
  for (size_t i = 0; i < h.size(); ++i) out[i] = h[i] == pos ? 1.0 : 0.0;
  return out;
}

}  // namespace

ReductionsEnsemble ReductionsFit(const TrainingSet& d, const FairnessSpec& spec,
                                 const ReductionsOptions& o, Diagnostics* diag) {
  if (d.num_classes != 2)
    throw ConfigError("reductions needs binary labels (K = 2), got K = " +
                      std::to_string(d.num_classes));
  if (d.overlapping) throw ConfigError("reductions needs disjoint group labels");
  if (d.size() == 0) throw DataError("reductions: no training rows");
  if (!(o.eps >= 0.0) || !(o.bound > 0.0) || o.iterations < 1)
    throw ConfigError("reductions: eps >= 0, bound > 0 and iterations >= 1 required");
  metrics::CheckCompatible(spec, 2, false);
  const int n = d.size();
  const int pos = spec.positive_class, neg = 1 - pos;
  const Moments mom = BuildMoments(d, spec);
  const int m = static_cast<int>(mom.coef.size());
  const double eta = o.eta > 0.0 ? o.eta : 2.0 / o.bound;

  Eigen::MatrixXd warm;
  auto best_response = [&](const Eigen::VectorXd& lambda) {
    // Cost difference of predicting the positive class.
    Eigen::VectorXd delta = mom.error_if_positive - mom.error_if_negative;
    for (int c = 0; c < m; ++c) delta += lambda[c] * mom.coef[c];
    std::vector<int> labels(n);
    std::vector<double> weights(n);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      labels[i] = delta[i] < 0.0 ? pos : neg;
      weights[i] = std::abs(delta[i]);
      total += weights[i];
    }
    if (!(total > 1e-15)) {
      labels.assign(d.y.begin(), d.y.end());
      weights.assign(n, 1.0);
    }
    LogisticModel lm = FitLogistic(d.x, labels, 2, weights, o.logistic, nullptr,
                                   warm.size() ? &warm : nullptr);
    warm = lm.weights;
    return lm.weights;
  };
  auto gammas = [&](const Eigen::VectorXd& h) {
    Eigen::VectorXd g(m);
    for (int c = 0; c < m; ++c) g[c] = mom.coef[c].dot(h);
    return g;
  };
  auto error = [&](const Eigen::VectorXd& h) {
    return mom.error_if_positive.dot(h) +
           mom.error_if_negative.dot(Eigen::VectorXd::Ones(n) - h);
  };
  auto lagrangian = [&](double err, const Eigen::VectorXd& g,
                        const Eigen::VectorXd& lambda) {
    return err + lambda.dot(g - Eigen::VectorXd::Constant(m, o.eps));
  };

  ReductionsEnsemble out;
  out.spec = spec;
  out.eps = o.eps;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd lambda_sum = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd gamma_sum = Eigen::VectorXd::Zero(m);
  double err_sum = 0.0;
  for (int t = 0; t < o.iterations; ++t) {
    const Eigen::ArrayXd e = theta.array().exp();
    const Eigen::VectorXd lambda = (o.bound * e / (1.0 + e.sum())).matrix();
    Eigen::MatrixXd w = best_response(lambda);
    const Eigen::VectorXd h = Indicator(w, d.x, pos);
    const Eigen::VectorXd g = gammas(h);
    out.members.push_back(std::move(w));
    lambda_sum += lambda;
    gamma_sum += g;
    err_sum += error(h);
    theta += eta * (g - Eigen::VectorXd::Constant(m, o.eps));
  }
  const double T = o.iterations;
  out.mixture.assign(out.members.size(), 1.0 / T);
  const Eigen::VectorXd gq = gamma_sum / T, lbar = lambda_sum / T;
  const double errq = err_sum / T;
  out.moment_violation = m > 0 ? gq.maxCoeff() : 0.0;

  // Gap of the averaged play: the best multiplier against Q and the best
  // response against the averaged multipliers.
  const double l = lagrangian(errq, gq, lbar);
  const double high = errq + o.bound * std::max(0.0, out.moment_violation - o.eps);
  const Eigen::VectorXd hb = Indicator(best_response(lbar), d.x, pos);
  const double low = lagrangian(error(hb), gammas(hb), lbar);
  out.gap = std::max(high - l, l - low);
  if (out.moment_violation > o.eps + 1e-3)
    Warn(diag, "reductions: mixture moment " + FormatDouble(out.moment_violation) +
                   " exceeds eps " + FormatDouble(o.eps));
  return out;
}

Eigen::MatrixXd ReductionsPredict(const ReductionsEnsemble& model,
                                  const Eigen::MatrixXd& x) {
  const int pos = model.spec.positive_class;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(x.rows(), 2);
  for (size_t t = 0; t < model.members.size(); ++t) {
    if (x.cols() + 1 != model.members[t].cols())
      throw DataError("reductions: input dimension does not match model");
    out.col(pos) += model.mixture[t] * Indicator(model.members[t], x, pos);
  }
  out.col(1 - pos) = Eigen::VectorXd::Ones(x.rows()) - out.col(pos);
  return out;
}

}  // namespace fairpost::fairalg
