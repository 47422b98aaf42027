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

#include "fairpost/lp.h"

#include <cmath>
#include <limits>

#include "fairpost/common.h"

namespace fairpost::lp {

MasterSimplex::MasterSimplex(Eigen::VectorXd b, double c0,
                             SimplexOptions options)
    : b_(std::move(b)), options_(options) {
  const int m = num_rows();
  for (int r = 0; r < m; ++r)
    if (!(b_[r] >= 0.0)) throw Error(ErrorKind::kSolver, "lp: negative bound");
  c_.push_back(c0);
  Eigen::VectorXd a0 = Eigen::VectorXd::Zero(m + 1);
  a0[m] = 1.0;
  a_.push_back(a0);
  basis_.resize(m + 1);
  slack_position_.resize(m);
  for (int r = 0; r < m; ++r) {
    basis_[r] = -r - 1;
    slack_position_[r] = r;
  }
  basis_[m] = 0;
  position_.push_back(m);
  binv_ = Eigen::MatrixXd::Identity(m + 1, m + 1);
  xb_.resize(m + 1);
  xb_.head(m) = b_;
  xb_[m] = 1.0;
}

int MasterSimplex::AddColumn(double c, const Eigen::VectorXd& a) {
  const int m = num_rows();
  if (a.size() != m) throw Error(ErrorKind::kSolver, "lp: column length");
  Eigen::VectorXd col(m + 1);
  col.head(m) = a;
  col[m] = 1.0;
  c_.push_back(c);
  a_.push_back(std::move(col));
  position_.push_back(-1);
  return num_columns() - 1;
}

Eigen::VectorXd MasterSimplex::Column(int j) const {
  if (j >= 0) return a_[j];
  Eigen::VectorXd e = Eigen::VectorXd::Zero(num_rows() + 1);
  e[-j - 1] = 1.0;
  return e;
}

void MasterSimplex::Refactor() {
  const int m1 = num_rows() + 1;
  Eigen::MatrixXd basis(m1, m1);
  for (int r = 0; r < m1; ++r) basis.col(r) = Column(basis_[r]);
  binv_ = basis.partialPivLu().inverse();
  Eigen::VectorXd rhs(m1);
  rhs.head(num_rows()) = b_;
  rhs[num_rows()] = 1.0;
  xb_ = binv_ * rhs;
  for (int r = 0; r < m1; ++r)
    if (xb_[r] < 0.0 && xb_[r] > -1e-12) xb_[r] = 0.0;
  since_refactor_ = 0;
}

Eigen::VectorXd MasterSimplex::duals() const {
  const int m1 = num_rows() + 1;
  Eigen::VectorXd cb(m1);
  for (int r = 0; r < m1; ++r) cb[r] = Cost(basis_[r]);
  return binv_.transpose() * cb;
}

void MasterSimplex::Solve() {
  const int m = num_rows();
  const double tol = options_.optimality_tolerance;
  int degenerate_streak = 0;
  for (;;) {
    const Eigen::VectorXd y = duals();
    // Dantzig pricing, switching to Bland's rule (first improving index)
    // after a run of degenerate pivots.
    const bool bland = degenerate_streak > 50;
    constexpr int kNone = std::numeric_limits<int>::min();
    int entering = kNone;
    double best = tol;
    for (int r = 0; r < m; ++r) {
      if (slack_position_[r] >= 0) continue;
      if (-y[r] > best) {
        best = -y[r];
        entering = -r - 1;
        if (bland) break;
      }
    }
    for (int j = 0; j < num_columns() && !(bland && entering != kNone); ++j) {
      if (position_[j] >= 0) continue;
      const double d = c_[j] - y.dot(a_[j]);
      if (d > best) {
        best = d;
        entering = j;
        if (bland) break;
      }
    }
    if (entering == kNone) return;

    const Eigen::VectorXd dir = binv_ * Column(entering);
    int leave = -1;
    double ratio = std::numeric_limits<double>::infinity();
    for (int r = 0; r <= m; ++r) {
      if (dir[r] <= options_.pivot_tolerance) continue;
      const double t = std::max(xb_[r], 0.0) / dir[r];
      // Ties go to the lowest basic index (Bland).
      if (t < ratio - 1e-15 ||
          (t <= ratio + 1e-15 && leave >= 0 && basis_[r] < basis_[leave])) {
        ratio = t;
        leave = r;
      }
    }
    // The convexity row bounds every column, so the master is never
    // unbounded; a missing pivot row is a numerical failure.
    if (leave < 0) throw Error(ErrorKind::kSolver, "lp: no pivot row");
    degenerate_streak = ratio <= 1e-15 ? degenerate_streak + 1 : 0;

    const double piv = dir[leave];
    xb_ -= ratio * dir;
    xb_[leave] = ratio;
    const Eigen::RowVectorXd prow = binv_.row(leave) / piv;
    for (int r = 0; r <= m; ++r) {
      if (r == leave) continue;
      if (dir[r] != 0.0) binv_.row(r) -= dir[r] * prow;
    }
    binv_.row(leave) = prow;

    const int out = basis_[leave];
    if (out >= 0) position_[out] = -1; else slack_position_[-out - 1] = -1;
    basis_[leave] = entering;
    if (entering >= 0) position_[entering] = leave;
    else slack_position_[-entering - 1] = leave;

    if (++pivots_ > options_.max_pivots)
      throw Error(ErrorKind::kSolver, "lp: pivot budget exhausted");
    if (++since_refactor_ >= options_.refactor_interval) Refactor();
  }
}

double MasterSimplex::objective() const {
  double v = 0.0;
  for (int r = 0; r <= num_rows(); ++r) v += Cost(basis_[r]) * xb_[r];
  return v;
}

std::vector<double> MasterSimplex::primal() const {
  std::vector<double> x(num_columns(), 0.0);
  for (int r = 0; r <= num_rows(); ++r)
    if (basis_[r] >= 0) x[basis_[r]] = std::max(xb_[r], 0.0);
  return x;
}

Eigen::VectorXd MasterSimplex::activities() const {
  Eigen::VectorXd act = Eigen::VectorXd::Zero(num_rows());
  const std::vector<double> x = primal();
  for (int j = 0; j < num_columns(); ++j)
    if (x[j] > 0.0) act += x[j] * a_[j].head(num_rows());
  return act;
}

}  // namespace fairpost::lp
