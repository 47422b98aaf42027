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
#include <functional>
#include <random>

#include "fairpost/fairalg.h"
#include "fairpost/lp.h"
#include "fixtures.h"
#include "gtest/gtest.h"

namespace fairpost::fairalg {
namespace {

using testing::BiasedSpec;
using testing::ExactSet;
using testing::JointLayout;
using testing::Predictions;

TEST(MasterSimplexTest, HandExample) {
  // max x1 + 2 x2 s.t. x1 + 3 x2 <= 0.5 over the simplex {x0, x1, x2}.
  lp::MasterSimplex s(Eigen::VectorXd::Constant(1, 0.5), 0.0);
  s.AddColumn(1.0, Eigen::VectorXd::Constant(1, 1.0));
  s.AddColumn(2.0, Eigen::VectorXd::Constant(1, 3.0));
  s.Solve();
  EXPECT_NEAR(s.objective(), 0.5, 1e-12);
  const std::vector<double> x = s.primal();
  EXPECT_NEAR(x[0], 0.5, 1e-12);
  EXPECT_NEAR(x[1], 0.5, 1e-12);
  EXPECT_NEAR(s.duals()[0], 1.0, 1e-12);
}

// Brute-force oracle: every choice of m + 1 basic columns among the
// structurals and slacks, keeping the best feasible basic solution.
double BruteForce(const Eigen::MatrixXd& a, const Eigen::VectorXd& c,
                  const Eigen::VectorXd& b) {
  const int m = static_cast<int>(b.size()), cols = static_cast<int>(c.size());
  const int total = cols + m;
  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(m + 1, total);
  full.topLeftCorner(m, cols) = a;
  full.row(m).head(cols).setOnes();
  full.block(0, cols, m, m).setIdentity();
  Eigen::VectorXd cost = Eigen::VectorXd::Zero(total);
  cost.head(cols) = c;
  Eigen::VectorXd rhs(m + 1);
  rhs << b, 1.0;
  double best = -1e300;
  std::vector<int> pick(m + 1);
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == m + 1) {
      Eigen::MatrixXd basis(m + 1, m + 1);
      for (int r = 0; r <= m; ++r) basis.col(r) = full.col(pick[r]);
      Eigen::FullPivLU<Eigen::MatrixXd> lu(basis);
      if (!lu.isInvertible()) return;
      const Eigen::VectorXd x = lu.solve(rhs);
      if (x.minCoeff() < -1e-10) return;
      double v = 0.0;
      for (int r = 0; r <= m; ++r) v += cost[pick[r]] * x[r];
      best = std::max(best, v);
      return;
    }
    for (int j = start; j < total; ++j) {
      pick[depth] = j;
      rec(j + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

TEST(MasterSimplexTest, MatchesVertexEnumeration) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int m = 1 + trial % 3, cols = 6;
    Eigen::MatrixXd a(m, cols);
    Eigen::VectorXd c(cols), b(m);
    for (int j = 0; j < cols; ++j) {
      c[j] = u(rng);
      for (int r = 0; r < m; ++r) a(r, j) = j == 0 ? 0.0 : u(rng);
    }
    for (int r = 0; r < m; ++r) b[r] = trial % 5 == 0 ? 0.0 : std::abs(u(rng)) * 0.3;
    lp::MasterSimplex s(b, c[0]);
    for (int j = 1; j < cols; ++j) s.AddColumn(c[j], a.col(j));
    s.Solve();
    EXPECT_NEAR(s.objective(), BruteForce(a, c, b), 1e-9) << trial;
    EXPECT_LE((s.activities() - b).maxCoeff(), 1e-12);
    // Dual feasibility at the optimum.
    const Eigen::VectorXd y = s.duals();
    for (int r = 0; r < m; ++r) EXPECT_GE(y[r], -1e-12);
    for (int j = 0; j < cols; ++j) {
      Eigen::VectorXd col(m + 1);
      col << a.col(j), 1.0;
      EXPECT_LE(c[j] - y.dot(col), 1e-9);
    }
  }
}

class LinearPostTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    train_ = new TrainingSet(ExactSet(BiasedSpec(11), 2000, "tr"));
    test_ = new TrainingSet(ExactSet(BiasedSpec(12), 5000, "te"));
  }
  static void TearDownTestSuite() {
    delete train_;
    delete test_;
  }
  static TrainingSet* train_;
  static TrainingSet* test_;
};

TrainingSet* LinearPostTest::train_ = nullptr;
TrainingSet* LinearPostTest::test_ = nullptr;

Eigen::MatrixXd MarginalY(const Eigen::MatrixXd& p) {
  Eigen::MatrixXd out(p.rows(), 2);
  out.col(0) = p.col(0) + p.col(2);
  out.col(1) = p.col(1) + p.col(3);
  return out;
}

TEST_F(LinearPostTest, UnconstrainedIsPlugIn) {
  LinearPostResult r = LinearPostFit(train_->x, JointLayout(*train_), {}, kUnconstrained);
  const std::vector<int> plug = ArgmaxRows(MarginalY(train_->x));
  EXPECT_EQ(LinearPostPredictAll(r.rule, train_->x), plug);
  const double acc = metrics::Accuracy(Predictions(*train_, metrics::OneHot(plug, 2)));
  const double rule_acc = metrics::Accuracy(
      Predictions(*train_, PredictDistribution(r.rule, train_->x)));
  EXPECT_EQ(acc, rule_acc);
}

TEST_F(LinearPostTest, ContractHoldsForEachCriterion) {
  const FeatureLayout layout = JointLayout(*train_);
  for (Criterion c : {Criterion::kSP, Criterion::kTPR, Criterion::kEO,
                      Criterion::kFPR, Criterion::kTPRMulticlass}) {
    FairnessSpec spec;
    spec.criterion = c;
    double prev = std::numeric_limits<double>::infinity();
    for (double alpha : {0.2, 0.1, 0.05, 0.01}) {
      LinearPostResult r = LinearPostFit(train_->x, layout, spec, alpha);
      EXPECT_LE(r.rule.lp_violation, alpha + 1e-6);
      EXPECT_LE(LpViolation(r.inputs, layout, spec, r.assignment), alpha + 1e-6);
      EXPECT_LE(r.rule.lp_objective, prev + 1e-12);
      prev = r.rule.lp_objective;
      // Assignment rows lie in the simplex.
      for (int i = 0; i < train_->size(); ++i)
        EXPECT_NEAR(r.assignment.row(i).sum(), 1.0, 1e-9);
      const Eigen::MatrixXd test_pred = PredictDistribution(r.rule, test_->x);
      metrics::FairnessSpec ms = spec;
      EXPECT_LE(metrics::Violation(ms, Predictions(*test_, test_pred)), alpha + 0.04)
          << metrics::CriterionName(c) << " alpha " << alpha;
    }
  }
}

TEST_F(LinearPostTest, RuleReproducesTheLpVertex) {
  FairnessSpec spec;
  LinearPostResult r = LinearPostFit(train_->x, JointLayout(*train_), spec, 0.01);
  const std::vector<int> rule = LinearPostPredictAll(r.rule, r.inputs);
  int fractional = 0, disagree = 0;
  for (int i = 0; i < train_->size(); ++i) {
    Eigen::Index arg;
    const double top = r.assignment.row(i).maxCoeff(&arg);
    if (top < 1.0 - 1e-9) {
      ++fractional;
      continue;
    }
    disagree += rule[i] != arg;
  }
  EXPECT_LE(fractional, r.rule.num_constraints + 1);
  EXPECT_LE(disagree, r.rule.degenerate_points);
  EXPECT_LE(metrics::VSp(Predictions(*test_, PredictDistribution(r.rule, test_->x))),
            0.05);
}

TEST_F(LinearPostTest, AlphaZeroIsFeasibleAndDeterministic) {
  FairnessSpec spec;
  LinearPostResult a = LinearPostFit(train_->x, JointLayout(*train_), spec, 0.0);
  EXPECT_LE(a.rule.lp_violation, 1e-6);
  LinearPostResult b = LinearPostFit(train_->x, JointLayout(*train_), spec, 0.0);
  EXPECT_EQ(a.rule.weights, b.rule.weights);
}

TEST_F(LinearPostTest, ScalingScoresKeepsPredictions) {
  FairnessSpec spec;
  LinearPostResult r = LinearPostFit(train_->x, JointLayout(*train_), spec, 0.05);
  LinearRule scaled = r.rule;
  scaled.weights *= 7.25;
  EXPECT_EQ(LinearPostPredictAll(scaled, test_->x),
            LinearPostPredictAll(r.rule, test_->x));
}

TEST(LinearPostPredictTest, Examples) {
  LinearRule r;
  r.layout = {2, 2, false, featurizer::FeatureKind::kJoint};
  r.weights = Eigen::MatrixXd::Zero(2, 4);
  r.weights(0, 0) = r.weights(0, 2) = r.weights(1, 1) = r.weights(1, 3) = 1.0;
  EXPECT_EQ(LinearPostPredict(r, std::vector<double>(4, 0.25)), 0);
  // Marginal over Y is [0.2, 0.8].
  EXPECT_EQ(LinearPostPredict(r, std::vector<double>{0.1, 0.3, 0.1, 0.5}), 1);
  EXPECT_THROW(LinearPostPredict(r, std::vector<double>{0.5, 0.5}), Error);
}

TEST(LinearPostErrorsTest, ShapeChecks) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Constant(3, 4, 0.25);
  FeatureLayout joint{2, 2, false, featurizer::FeatureKind::kJoint};
  FairnessSpec wfpr;
  wfpr.criterion = Criterion::kWFPR;
  EXPECT_THROW(LinearPostFit(p, joint, wfpr, 0.1), Error);
  FeatureLayout yonly{2, 2, false, featurizer::FeatureKind::kYOnly};
  EXPECT_THROW(LinearPostFit(p.leftCols(2), yonly, {}, 0.1), Error);
  EXPECT_THROW(LinearPostFit(p, joint, {}, -1.0), Error);
}

TEST(LinearPostOverlappingTest, WeightedFprContract) {
  datahub::SyntheticSpec spec;
  spec.num_groups = 2;
  spec.overlapping = true;
  spec.dim = 2;
  // Cells: mask 0..3 times class 0..1.
  spec.weights = {0.1, 0.05, 0.15, 0.1, 0.1, 0.15, 0.15, 0.2};
  for (int c = 0; c < 8; ++c)
    spec.means.push_back({(c % 2) * 1.5, (c / 2) * 0.5});
  spec.seed = 21;
  TrainingSet t = ExactSet(spec, 1500, "ov");
  FairnessSpec fs;
  fs.criterion = Criterion::kWFPR;
  const FeatureLayout layout = JointLayout(t);
  for (double alpha : {0.1, 0.02}) {
    LinearPostResult r = LinearPostFit(t.x, layout, fs, alpha);
    EXPECT_LE(r.rule.lp_violation, alpha + 1e-6);
    // Three subsets, three pairs, two signs.
    EXPECT_EQ(r.rule.num_constraints, 6);
  }
}

}  // namespace
}  // namespace fairpost::fairalg
