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

// Dense revised simplex for column-generation master problems of the form
//
//   maximize    sum_j c_j x_j
//   subject to  sum_j A_j x_j <= b,   sum_j x_j = 1,   x >= 0
//
// with b >= 0. Column 0 has A_0 = 0, so the slacks plus column 0 form a
// feasible identity basis and no phase one is needed.

#ifndef FAIRPOST_LP_H_
#define FAIRPOST_LP_H_

#include <vector>

#include <Eigen/Dense>

namespace fairpost::lp {

struct SimplexOptions {
  double optimality_tolerance = 1e-12;
  double pivot_tolerance = 1e-11;
  int max_pivots = 200000;
  int refactor_interval = 64;
};

class MasterSimplex {
 public:
  MasterSimplex(Eigen::VectorXd b, double c0, SimplexOptions options = {});

  // Appends a structural column and returns its index.
  int AddColumn(double c, const Eigen::VectorXd& a);

  // Runs primal simplex from the current basis. Throws a solver error when
  // the pivot budget is exhausted.
  void Solve();

  int num_rows() const { return static_cast<int>(b_.size()); }
  int num_columns() const { return static_cast<int>(c_.size()); }
  double objective() const;
  // Primal values of the structural columns.
  std::vector<double> primal() const;
  // Duals of the inequality rows (>= 0) followed by the convexity row.
  Eigen::VectorXd duals() const;
  // Row activities sum_j A_j x_j.
  Eigen::VectorXd activities() const;
  int pivots() const { return pivots_; }

 private:
  // Basis entries: j >= 0 is structural column j, j < 0 is slack -j - 1.
  Eigen::VectorXd Column(int j) const;
  double Cost(int j) const { return j >= 0 ? c_[j] : 0.0; }
  void Refactor();

  Eigen::VectorXd b_;
  std::vector<double> c_;
  std::vector<Eigen::VectorXd> a_;  // structural columns, length m + 1
  std::vector<int> basis_;          // size m + 1
  std::vector<int> position_;       // structural column -> basis row or -1
  std::vector<int> slack_position_;
  Eigen::MatrixXd binv_;
  Eigen::VectorXd xb_;
  SimplexOptions options_;
  int pivots_ = 0;
  int since_refactor_ = 0;
};

}  // namespace fairpost::lp

#endif  // FAIRPOST_LP_H_
