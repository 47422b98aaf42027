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
#include <map>
#include <numeric>
#include <random>

#include "fairpost/fairalg.h"

namespace fairpost::fairalg {
namespace {

Eigen::MatrixXd Kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                       double sigma) {
  const Eigen::VectorXd na = a.rowwise().squaredNorm();
  const Eigen::VectorXd nb = b.rowwise().squaredNorm();
  Eigen::MatrixXd d = -2.0 * a * b.transpose();
  d.colwise() += na;
  d.rowwise() += nb.transpose();
  return (-(d.array().max(0.0)) / (sigma * sigma)).exp().matrix();
}

Eigen::VectorXd Uniform(const std::vector<int>& members, int n) {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
  for (int i : members) u[i] = 1.0 / members.size();
  return u;
}

// Terms for one conditional subset of the batch (all rows when
// condition < 0). Each returned term carries unit weight.
std::vector<MmdTerm> SubsetTerms(std::span<const int> y,
                                 std::span<const GroupLabel> a, int condition,
                                 int num_groups, bool overlapping) {
  const int n = static_cast<int>(y.size());
  std::vector<int> pool;
  for (int i = 0; i < n; ++i)
    if (condition < 0 || y[i] == condition) pool.push_back(i);
  std::vector<MmdTerm> out;
  if (overlapping) {
    // Events {A in I} with superset membership, each compared with the
    // mass-weighted mixture of all events.
    std::map<uint32_t, std::vector<int>> members;
    for (int i : pool) {
      const uint32_t m = a[i].value;
      for (uint32_t s = m; s != 0; s = (s - 1) & m) members[s].push_back(i);
    }
    std::vector<const std::vector<int>*> kept;
    double total = 0.0;
    for (const auto& [s, idx] : members) {
      if (idx.size() < 2) continue;
      kept.push_back(&idx);
      total += idx.size();
    }
    if (kept.size() < 2) return out;
    Eigen::VectorXd mix = Eigen::VectorXd::Zero(n);
    for (const auto* idx : kept) mix += (idx->size() / total) * Uniform(*idx, n);
    for (const auto* idx : kept) out.push_back({Uniform(*idx, n) - mix, 1.0});
    return out;
  }
  std::vector<std::vector<int>> groups(num_groups);
  for (int i : pool) groups[a[i].index()].push_back(i);
  if (num_groups == 2) {
    if (groups[0].size() >= 2 && groups[1].size() >= 2)
      out.push_back({Uniform(groups[0], n) - Uniform(groups[1], n), 1.0});
    return out;
  }
  if (pool.size() < 2) return out;
  const Eigen::VectorXd all = Uniform(pool, n);
  int present = 0;
  for (const auto& g : groups) present += g.size() >= 2;
  if (present < 2) return out;
  for (const auto& g : groups)
    if (g.size() >= 2) out.push_back({Uniform(g, n) - all, 1.0});
  return out;
}

// Forward pass; fills pre-activations, hidden units and probabilities.
void Forward(const MinDiffModel& m, const Eigen::MatrixXd& x,
             Eigen::MatrixXd* pre, Eigen::MatrixXd* hidden,
             Eigen::MatrixXd* prob) {
  *pre = x * m.w1.transpose();
  pre->rowwise() += m.b1.transpose();
  *hidden = pre->cwiseMax(0.0);
  *prob = *hidden * m.w2.transpose();
  prob->rowwise() += m.b2.transpose();
  for (Eigen::Index i = 0; i < prob->rows(); ++i) {
    const double mx = prob->row(i).maxCoeff();
    prob->row(i) = (prob->row(i).array() - mx).exp();
    prob->row(i) /= prob->row(i).sum();
  }
}

struct Adam {
  MinDiffGradient m, v;
  int t = 0;
};

template <typename T>
void AdamStep(T* param, const T& grad, T* m, T* v, double lr, double b1,
              double b2, double eps, int t) {
  *m = b1 * *m + (1.0 - b1) * grad;
  *v = b2 * *v + (1.0 - b2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(b1, t), c2 = 1.0 - std::pow(b2, t);
  param->array() -= lr * (m->array() / c1) / ((v->array() / c2).sqrt() + eps);
}

}  // namespace

double MmdSq(const Eigen::MatrixXd& s1, const Eigen::MatrixXd& s2,
             double sigma) {
  if (s1.rows() == 0 || s2.rows() == 0) throw DataError("mmd: empty sample");
  if (s1.cols() != s2.cols()) throw DataError("mmd: dimension mismatch");
  return Kernel(s1, s1, sigma).mean() + Kernel(s2, s2, sigma).mean() -
         2.0 * Kernel(s1, s2, sigma).mean();
}

std::vector<MmdTerm> RegularizerTerms(const FairnessSpec& spec,
                                      std::span<const int> y,
                                      std::span<const GroupLabel> a,
                                      int num_groups, bool overlapping,
                                      int num_classes) {
  std::vector<int> conditions;
  switch (spec.criterion) {
    case Criterion::kSP:
      conditions = {-1};
      break;
    case Criterion::kTPR:
      conditions = {spec.positive_class};
      break;
    case Criterion::kFPR:
    case Criterion::kWFPR:
      conditions = {spec.negative_class};
      break;
    case Criterion::kEO:
    case Criterion::kTPRMulticlass:
      for (int j = 0; j < num_classes; ++j) conditions.push_back(j);
      break;
  }
  // Average over conditions, then over the terms of each condition.
  std::vector<std::vector<MmdTerm>> per;
  for (int c : conditions) {
    std::vector<MmdTerm> t = SubsetTerms(y, a, c, num_groups, overlapping);
    if (!t.empty()) per.push_back(std::move(t));
  }
  std::vector<MmdTerm> out;
  for (auto& t : per)
    for (auto& term : t) {
      term.weight = 1.0 / (per.size() * t.size());
      out.push_back(std::move(term));
    }
  return out;
}

double MinDiffObjective(const MinDiffModel& model, const Eigen::MatrixXd& x,
                        std::span<const int> y, std::span<const GroupLabel> a,
                        int num_groups, bool overlapping,
                        MinDiffGradient* gradient) {
  const Eigen::Index n = x.rows();
  const int k = model.num_classes();
  Eigen::MatrixXd pre, hidden, prob;
  Forward(model, x, &pre, &hidden, &prob);
  double ce = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) ce -= std::log(std::max(prob(i, y[i]), 1e-300));
  ce /= n;

  double reg = 0.0;
  Eigen::MatrixXd dprob = Eigen::MatrixXd::Zero(n, k);
  if (model.lambda > 0.0) {
    const std::vector<MmdTerm> terms =
        RegularizerTerms(model.spec, y, a, num_groups, overlapping, k);
    if (!terms.empty()) {
      Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
      for (const MmdTerm& t : terms) q += t.weight * t.c * t.c.transpose();
      const Eigen::MatrixXd kern = Kernel(prob, prob, model.sigma);
      const Eigen::MatrixXd qk = q.cwiseProduct(kern);
      reg = qk.sum();
      if (gradient != nullptr) {
        const double s2 = model.sigma * model.sigma;
        const Eigen::VectorXd rows = qk.rowwise().sum();
        dprob = (-4.0 / s2) * (rows.asDiagonal() * prob - qk * prob);
        dprob *= model.lambda;
      }
    }
  }
  if (gradient != nullptr) {
    // Softmax backward for the regularizer, plus the cross-entropy term.
    Eigen::MatrixXd dz(n, k);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double dot = dprob.row(i).dot(prob.row(i));
      dz.row(i) = prob.row(i).cwiseProduct(dprob.row(i).array().matrix() -
                                           Eigen::RowVectorXd::Constant(k, dot));
      Eigen::RowVectorXd ce_grad = prob.row(i);
      ce_grad[y[i]] -= 1.0;
      dz.row(i) += ce_grad / static_cast<double>(n);
    }
    gradient->w2 = dz.transpose() * hidden;
    gradient->b2 = dz.colwise().sum().transpose();
    Eigen::MatrixXd dh = dz * model.w2;
    dh.array() *= (pre.array() > 0.0).cast<double>();
    gradient->w1 = dh.transpose() * x;
    gradient->b1 = dh.colwise().sum().transpose();
  }
  return ce + model.lambda * reg;
}

MinDiffModel MinDiffInit(int input_dim, int num_classes, int hidden,
                         uint64_t seed) {
  std::mt19937_64 rng(seed);
  MinDiffModel m;
  auto fill = [&rng](auto* mat, int fan_in) {
    const double b = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-b, b);
    for (Eigen::Index i = 0; i < mat->size(); ++i) mat->data()[i] = u(rng);
  };
  m.w1.resize(hidden, input_dim);
  m.b1.resize(hidden);
  m.w2.resize(num_classes, hidden);
  m.b2.resize(num_classes);
  fill(&m.w1, input_dim);
  fill(&m.b1, input_dim);
  fill(&m.w2, hidden);
  fill(&m.b2, hidden);
  return m;
}

MinDiffModel MinDiffFit(const TrainingSet& data, const FairnessSpec& spec,
                        const MinDiffOptions& o, Diagnostics* diag) {
  const int n = data.size();
  if (n == 0) throw DataError("mindiff: no training rows");
  if (!(o.lambda >= 0.0)) throw ConfigError("mindiff: lambda must be >= 0");
  if (o.hidden < 1 || o.epochs < 1 || o.batch_size < 1)
    throw ConfigError("mindiff: hidden width, epochs and batch size must be positive");
  if (spec.criterion == Criterion::kTPR || spec.criterion == Criterion::kFPR ||
      spec.criterion == Criterion::kWFPR)
    metrics::CheckCompatible(spec, data.num_classes, data.overlapping);
  if (spec.criterion == Criterion::kTPRMulticlass)
    Warn(diag, "mindiff: TPR_MULTICLASS is regularized with the EO terms");

  MinDiffModel m = MinDiffInit(static_cast<int>(data.x.cols()), data.num_classes,
                               o.hidden, o.seed);
  m.spec = spec;
  m.lambda = o.lambda;
  m.sigma = o.sigma;
  Adam adam;
  adam.m = {Eigen::MatrixXd::Zero(m.w1.rows(), m.w1.cols()),
            Eigen::MatrixXd::Zero(m.w2.rows(), m.w2.cols()),
            Eigen::VectorXd::Zero(m.b1.size()), Eigen::VectorXd::Zero(m.b2.size())};
  adam.v = adam.m;

  std::mt19937_64 rng(DeriveSeed(o.seed, "mindiff/shuffle"));
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  MinDiffGradient g;
  for (int epoch = 0; epoch < o.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (int start = 0; start < n; start += o.batch_size) {
      const int len = std::min(o.batch_size, n - start);
      Eigen::MatrixXd xb(len, data.x.cols());
      std::vector<int> yb(len);
      std::vector<GroupLabel> ab(len);
      for (int r = 0; r < len; ++r) {
        const int i = order[start + r];
        xb.row(r) = data.x.row(i);
        yb[r] = data.y[i];
        ab[r] = data.a[i];
      }
      m.step_losses.push_back(MinDiffObjective(m, xb, yb, ab, data.num_groups,
                                               data.overlapping, &g));
      ++adam.t;
      AdamStep(&m.w1, g.w1, &adam.m.w1, &adam.v.w1, o.learning_rate, o.beta1,
               o.beta2, o.adam_epsilon, adam.t);
      AdamStep(&m.b1, g.b1, &adam.m.b1, &adam.v.b1, o.learning_rate, o.beta1,
               o.beta2, o.adam_epsilon, adam.t);
      AdamStep(&m.w2, g.w2, &adam.m.w2, &adam.v.w2, o.learning_rate, o.beta1,
               o.beta2, o.adam_epsilon, adam.t);
      AdamStep(&m.b2, g.b2, &adam.m.b2, &adam.v.b2, o.learning_rate, o.beta1,
               o.beta2, o.adam_epsilon, adam.t);
    }
  }
  return m;
}

Eigen::MatrixXd MinDiffPredict(const MinDiffModel& model,
                               const Eigen::MatrixXd& x) {
  if (x.cols() != model.input_dim())
    throw DataError("mindiff: input dimension " + std::to_string(x.cols()) +
                    " does not match model dimension " +
                    std::to_string(model.input_dim()));
  Eigen::MatrixXd pre, hidden, prob;
  Forward(model, x, &pre, &hidden, &prob);
  return prob;
}

}  // namespace fairpost::fairalg
