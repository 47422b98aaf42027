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
#include <random>

#include "fairpost/fairalg.h"
#include "fairpost/lp.h"

namespace fairpost::fairalg {
namespace {

// A family compares the rate of class `measured` across group events,
// restricted to the cells with y == condition (condition < 0: all cells).
struct Family {
  int condition;
  int measured;
};

struct Constraint {
  int family;
  int e1, e2;  // indices into the family's event list
  double sign;
};

// Constraint structure of one criterion on a joint layout.
struct ConstraintSet {
  int num_classes = 0;
  std::vector<Family> families;
  // events[f][e]: weight vector over the joint cells.
  std::vector<std::vector<Eigen::VectorXd>> events;
  std::vector<std::vector<double>> masses;
  std::vector<Constraint> rows;

  // Coefficient of point p on row r when assigned the row's class.
  double Coef(const Constraint& r, const Eigen::VectorXd& p) const {
    const auto& ev = events[r.family];
    const auto& m = masses[r.family];
    return r.sign * (ev[r.e1].dot(p) / m[r.e1] - ev[r.e2].dot(p) / m[r.e2]);
  }
  int Measured(const Constraint& r) const { return families[r.family].measured; }
};

std::vector<Family> Families(const FairnessSpec& spec, int k) {
  std::vector<Family> f;
  switch (spec.criterion) {
    case Criterion::kSP:
      for (int c = 0; c < k; ++c) f.push_back({-1, c});
      break;
    case Criterion::kTPR:
      f.push_back({spec.positive_class, spec.positive_class});
      break;
    case Criterion::kFPR:
    case Criterion::kWFPR:
      f.push_back({spec.negative_class, spec.positive_class});
      break;
    case Criterion::kEO:
      for (int j = 0; j < k; ++j)
        for (int c = 0; c < k; ++c) f.push_back({j, c});
      break;
    case Criterion::kTPRMulticlass:
      for (int c = 0; c < k; ++c) f.push_back({c, c});
      break;
  }
  return f;
}

// Group events: one per disjoint group, or one per nonempty subset with
// superset membership.
std::vector<std::vector<int>> EventCells(const FeatureLayout& layout) {
  std::vector<std::vector<int>> out;
  if (!layout.overlapping) {
    for (int g = 0; g < layout.num_groups; ++g) out.push_back({g});
    return out;
  }
  const uint32_t cells = 1u << layout.num_groups;
  for (uint32_t s = 1; s < cells; ++s) {
    std::vector<int> members;
    for (uint32_t c = 0; c < cells; ++c)
      if ((c & s) == s) members.push_back(static_cast<int>(c));
    out.push_back(std::move(members));
  }
  return out;
}

ConstraintSet BuildConstraints(const Eigen::MatrixXd& p,
                               const FeatureLayout& layout,
                               const FairnessSpec& spec, double min_mass,
                               Diagnostics* diag) {
  ConstraintSet cs;
  const int k = layout.num_classes;
  cs.num_classes = k;
  cs.families = Families(spec, k);
  const Eigen::VectorXd total = p.colwise().sum().transpose();
  const std::vector<std::vector<int>> cells = EventCells(layout);
  int dropped = 0;
  for (size_t f = 0; f < cs.families.size(); ++f) {
    const Family& fam = cs.families[f];
    std::vector<Eigen::VectorXd> ev;
    std::vector<double> mass;
    for (const auto& members : cells) {
      Eigen::VectorXd w = Eigen::VectorXd::Zero(layout.size());
      for (int cell : members)
        for (int y = 0; y < k; ++y)
          if (fam.condition < 0 || y == fam.condition)
            w[layout.Flat(cell, y)] = 1.0;
      const double m = w.dot(total);
      if (m < min_mass) {
        ++dropped;
        continue;
      }
      ev.push_back(std::move(w));
      mass.push_back(m);
    }
    for (size_t e1 = 0; e1 < ev.size(); ++e1)
      for (size_t e2 = e1 + 1; e2 < ev.size(); ++e2)
        for (double sign : {1.0, -1.0})
          cs.rows.push_back({static_cast<int>(f), static_cast<int>(e1),
                             static_cast<int>(e2), sign});
    cs.events.push_back(std::move(ev));
    cs.masses.push_back(std::move(mass));
  }
  if (dropped > 0)
    Warn(diag, "linearpost: left out " + std::to_string(dropped) +
                   " event(s) with training mass below " +
                   FormatDouble(min_mass));
  return cs;
}

void CheckJoint(const Eigen::MatrixXd& p, const FeatureLayout& layout,
                const FairnessSpec& spec) {
  if (layout.kind != featurizer::FeatureKind::kJoint)
    throw ConfigError("linearpost needs calibrated joint distributions");
  if (p.cols() != layout.size())
    throw DataError("linearpost: input dimension does not match layout");
  if (p.rows() == 0) throw DataError("linearpost: no training rows");
  metrics::CheckCompatible(spec, layout.num_classes, layout.overlapping);
}

Eigen::MatrixXd MarginalYRows(const Eigen::MatrixXd& p,
                              const FeatureLayout& layout) {
  const int k = layout.num_classes;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(p.rows(), k);
  for (int cell = 0; cell < layout.num_group_cells(); ++cell)
    out += p.middleCols(cell * k, k);
  return out;
}

// Coefficients of every row for every point, n x rows.
Eigen::MatrixXd CoefMatrix(const ConstraintSet& cs, const Eigen::MatrixXd& p) {
  Eigen::MatrixXd c(p.rows(), cs.rows.size());
  for (size_t r = 0; r < cs.rows.size(); ++r) {
    const Constraint& row = cs.rows[r];
    const auto& ev = cs.events[row.family];
    const auto& m = cs.masses[row.family];
    const Eigen::VectorXd w = row.sign * (ev[row.e1] / m[row.e1] - ev[row.e2] / m[row.e2]);
    c.col(r) = p * w;
  }
  return c;
}

Eigen::MatrixXd ClassRowSelector(const ConstraintSet& cs) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(cs.rows.size(), cs.num_classes);
  for (size_t r = 0; r < cs.rows.size(); ++r) s(r, cs.Measured(cs.rows[r])) = 1.0;
  return s;
}

int ArgmaxRow(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  int best = 0;
  for (int k = 1; k < row.size(); ++k)
    if (row[k] > row[best]) best = k;
  return best;
}

}  // namespace

std::vector<int> ArgmaxRows(const Eigen::MatrixXd& m) {
  std::vector<int> out(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) out[i] = ArgmaxRow(m.row(i));
  return out;
}

double LpViolation(const Eigen::MatrixXd& p, const FeatureLayout& layout,
                   const FairnessSpec& spec, const Eigen::MatrixXd& z,
                   double min_event_mass) {
  CheckJoint(p, layout, spec);
  ConstraintSet cs = BuildConstraints(p, layout, spec, min_event_mass, nullptr);
  double v = 0.0;
  for (size_t f = 0; f < cs.families.size(); ++f) {
    const int k = cs.families[f].measured;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (size_t e = 0; e < cs.events[f].size(); ++e) {
      const double rate = z.col(k).dot(p * cs.events[f][e]) / cs.masses[f][e];
      lo = std::min(lo, rate);
      hi = std::max(hi, rate);
    }
    if (cs.events[f].size() >= 2) v = std::max(v, hi - lo);
  }
  return v;
}

LinearPostResult LinearPostFit(const Eigen::MatrixXd& p_in,
                               const FeatureLayout& layout,
                               const FairnessSpec& spec, double alpha,
                               const LinearPostOptions& options,
                               Diagnostics* diag) {
  CheckJoint(p_in, layout, spec);
  if (!(alpha >= 0.0)) throw ConfigError("linearpost: alpha must be >= 0");
  const int n = static_cast<int>(p_in.rows());
  const int k = layout.num_classes;

  Eigen::MatrixXd p = p_in;
  if (options.epsilon > 0.0) {
    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> u(0.0, options.epsilon);
    for (int i = 0; i < n; ++i) {
      for (Eigen::Index c = 0; c < p.cols(); ++c) p(i, c) += u(rng);
      p.row(i) /= p.row(i).sum();
    }
  }

  LinearPostResult res;
  LinearRule& rule = res.rule;
  rule.layout = layout;
  rule.spec = spec;
  rule.alpha = alpha;
  rule.epsilon = options.epsilon;
  Eigen::MatrixXd sel = Eigen::MatrixXd::Zero(k, layout.size());
  for (int cell = 0; cell < layout.num_group_cells(); ++cell)
    for (int y = 0; y < k; ++y) sel(y, layout.Flat(cell, y)) = 1.0;

  res.inputs = p;
  const Eigen::MatrixXd gain = MarginalYRows(p, layout) / n;  // c_ik
  if (std::isinf(alpha)) {
    rule.weights = sel;
    std::vector<int> h = ArgmaxRows(gain);
    res.assignment = metrics::OneHot(h, k);
    for (int i = 0; i < n; ++i) rule.lp_objective += gain(i, h[i]);
    return res;
  }

  ConstraintSet cs = BuildConstraints(p, layout, spec, options.min_event_mass, diag);
  for (const auto& m : cs.masses) rule.event_masses.insert(rule.event_masses.end(), m.begin(), m.end());
  const int rows = static_cast<int>(cs.rows.size());
  rule.num_constraints = rows;
  const Eigen::MatrixXd coef = CoefMatrix(cs, p);
  const Eigen::MatrixXd rsel = ClassRowSelector(cs);

  std::vector<std::vector<int>> columns;
  auto column_data = [&](const std::vector<int>& h, double* value) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(rows);
    double f = 0.0;
    for (int i = 0; i < n; ++i) {
      f += gain(i, h[i]);
      for (int r = 0; r < rows; ++r)
        if (cs.Measured(cs.rows[r]) == h[i]) g[r] += coef(i, r);
    }
    *value = f;
    return g;
  };

  // Column 0 is the best constant classifier, whose rates agree across
  // every event, so the master starts feasible.
  const Eigen::VectorXd class_gain = gain.colwise().sum().transpose();
  Eigen::Index k0;
  class_gain.maxCoeff(&k0);
  lp::MasterSimplex master(Eigen::VectorXd::Constant(rows, alpha), class_gain[k0]);
  columns.push_back(std::vector<int>(n, static_cast<int>(k0)));
  for (int c = 0; c < k; ++c) {
    if (c == k0) continue;
    std::vector<int> h(n, c);
    double f;
    Eigen::VectorXd g = column_data(h, &f);
    master.AddColumn(f, g);
    columns.push_back(std::move(h));
  }

  Eigen::VectorXd y;
  int round = 0;
  for (;; ++round) {
    if (round >= options.max_rounds)
      throw Error(ErrorKind::kSolver, "linearpost: column generation did not converge");
    master.Solve();
    y = master.duals();
    const Eigen::MatrixXd score = gain - coef * (rsel.array().colwise() * y.head(rows).array()).matrix();
    std::vector<int> h = ArgmaxRows(score);
    double best = 0.0;
    for (int i = 0; i < n; ++i) best += score(i, h[i]);
    if (best - y[rows] <= 1e-12) break;
    if (std::find(columns.begin(), columns.end(), h) != columns.end()) {
      Warn(diag, "linearpost: pricing repeated a column; stopping at tolerance");
      break;
    }
    double f;
    Eigen::VectorXd g = column_data(h, &f);
    master.AddColumn(f, g);
    columns.push_back(std::move(h));
  }
  rule.rounds = round;

  const std::vector<double> mu = master.primal();
  res.assignment = Eigen::MatrixXd::Zero(n, k);
  for (size_t j = 0; j < columns.size(); ++j) {
    if (mu[j] <= 0.0) continue;
    for (int i = 0; i < n; ++i) res.assignment(i, columns[j][i]) += mu[j];
  }
  rule.lp_objective = master.objective();
  const Eigen::VectorXd act = master.activities();
  rule.lp_violation = rows > 0 ? std::max(0.0, act.maxCoeff()) : 0.0;

  // Linear rule from the duals: score_k(p) = p(Y=k) - n sum_r y_r coef_r(p)
  // over the rows measuring class k.
  rule.weights = sel;
  for (int r = 0; r < rows; ++r) {
    if (y[r] == 0.0) continue;
    const Constraint& row = cs.rows[r];
    const auto& ev = cs.events[row.family];
    const auto& m = cs.masses[row.family];
    rule.weights.row(cs.Measured(row)) -=
        n * y[r] * row.sign * (ev[row.e1] / m[row.e1] - ev[row.e2] / m[row.e2]).transpose();
  }
  const Eigen::MatrixXd scores = p * rule.weights.transpose();
  for (int i = 0; i < n; ++i) {
    Eigen::RowVectorXd s = scores.row(i);
    const int top = ArgmaxRow(s);
    const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
    s[top] = -std::numeric_limits<double>::infinity();
    if (k > 1 && scores(i, top) - s.maxCoeff() <= 1e-9 * scale) ++rule.degenerate_points;
  }
  if (rule.degenerate_points > 0)
    Warn(diag, "linearpost: " + std::to_string(rule.degenerate_points) +
                   " training point(s) near a score tie");
  return res;
}

int LinearPostPredict(const LinearRule& rule, std::span<const double> p) {
  if (static_cast<Eigen::Index>(p.size()) != rule.weights.cols())
    throw DataError("linearpost: input dimension " + std::to_string(p.size()) +
                    " does not match rule dimension " +
                    std::to_string(rule.weights.cols()));
  Eigen::Map<const Eigen::VectorXd> v(p.data(), p.size());
  const Eigen::RowVectorXd s = (rule.weights * v).transpose();
  return ArgmaxRow(s);
}

std::vector<int> LinearPostPredictAll(const LinearRule& rule,
                                      const Eigen::MatrixXd& p) {
  if (p.cols() != rule.weights.cols())
    throw DataError("linearpost: input dimension does not match rule");
  return ArgmaxRows(p * rule.weights.transpose());
}

}  // namespace fairpost::fairalg
