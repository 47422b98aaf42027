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

// Fair classifiers trained on calibrated features: a linear-program
// post-processor, an MMD-regularized network, exponentiated-gradient
// reductions, and an unmitigated logistic baseline.

#ifndef FAIRPOST_FAIRALG_H_
#define FAIRPOST_FAIRALG_H_

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "fairpost/common.h"
#include "fairpost/featurizer.h"
#include "fairpost/logistic.h"
#include "fairpost/metrics.h"
#include "json.hpp"

namespace fairpost::fairalg {

using featurizer::FeatureLayout;
using metrics::Criterion;
using metrics::FairnessSpec;

// Labelled training rows. `x` holds one feature vector per row; `a` holds
// ground-truth groups, used only by the in-processing methods.
struct TrainingSet {
  Eigen::MatrixXd x;
  std::vector<int> y;
  std::vector<GroupLabel> a;
  int num_classes = 2;
  int num_groups = 2;
  bool overlapping = false;

  int size() const { return static_cast<int>(x.rows()); }
};

// ---------------------------------------------------------------------------
// LinearPost

inline constexpr double kUnconstrained = std::numeric_limits<double>::infinity();

struct LinearPostOptions {
  double epsilon = 1e-4;  // uniform perturbation added to training inputs
  uint64_t seed = 0;
  int max_rounds = 20000;  // column-generation rounds
  // Events whose training mass is below this many effective examples are
  // left out of the constraints.
  double min_event_mass = 1.0;
};

struct LinearRule {
  FeatureLayout layout;  // joint layout of the inputs
  FairnessSpec spec;
  double alpha = kUnconstrained;
  double epsilon = 0.0;
  Eigen::MatrixXd weights;           // K x layout.size()
  std::vector<double> event_masses;  // frozen training denominators

  // Training diagnostics.
  double lp_objective = 0.0;  // expected accuracy under the LP solution
  double lp_violation = 0.0;  // largest constraint activity
  int num_constraints = 0;
  int rounds = 0;
  int degenerate_points = 0;
};

struct LinearPostResult {
  LinearRule rule;
  Eigen::MatrixXd assignment;  // n x K LP solution on the training inputs
  Eigen::MatrixXd inputs;      // the perturbed training inputs
};

// `p` rows are calibrated joint distributions laid out by `layout`.
LinearPostResult LinearPostFit(const Eigen::MatrixXd& p,
                               const FeatureLayout& layout,
                               const FairnessSpec& spec, double alpha,
                               const LinearPostOptions& options = {},
                               Diagnostics* diag = nullptr);

// argmax_k (W p)_k with ties to the lowest k.
int LinearPostPredict(const LinearRule& rule, std::span<const double> p);
std::vector<int> LinearPostPredictAll(const LinearRule& rule,
                                      const Eigen::MatrixXd& p);

// Largest pairwise gap of the soft rates that the LP constrains, for the
// assignment `z` (n x K) on inputs `p`.
double LpViolation(const Eigen::MatrixXd& p, const FeatureLayout& layout,
                   const FairnessSpec& spec, const Eigen::MatrixXd& z,
                   double min_event_mass = 1.0);

// ---------------------------------------------------------------------------
// MinDiff

struct MinDiffOptions {
  double lambda = 0.0;
  int hidden = 512;
  int epochs = 5;
  int batch_size = 512;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double sigma = 0.1;  // kernel bandwidth
  uint64_t seed = 0;
};

struct MinDiffModel {
  FairnessSpec spec;
  double lambda = 0.0;
  double sigma = 0.1;
  Eigen::MatrixXd w1;  // hidden x D
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // K x hidden
  Eigen::VectorXd b2;
  std::vector<double> step_losses;  // not serialized

  int input_dim() const { return static_cast<int>(w1.cols()); }
  int num_classes() const { return static_cast<int>(w2.rows()); }
};

struct MinDiffGradient {
  Eigen::MatrixXd w1, w2;
  Eigen::VectorXd b1, b2;
};

// Biased V-statistic estimate of the squared MMD between two samples
// (rows) under exp(-||x - x'||^2 / sigma^2).
double MmdSq(const Eigen::MatrixXd& s1, const Eigen::MatrixXd& s2,
             double sigma);

// One regularizer term weight * (u - v)^T K (u - v), where u and v are
// probability weights over the batch rows.
struct MmdTerm {
  Eigen::VectorXd c;  // u - v
  double weight = 1.0;
};

// Regularizer terms of a batch for the criterion. Conditional subsets with
// fewer than two members are skipped.
std::vector<MmdTerm> RegularizerTerms(const FairnessSpec& spec,
                                      std::span<const int> y,
                                      std::span<const GroupLabel> a,
                                      int num_groups, bool overlapping,
                                      int num_classes);

// Mean cross entropy plus lambda times the regularizer on one batch.
double MinDiffObjective(const MinDiffModel& model, const Eigen::MatrixXd& x,
                        std::span<const int> y, std::span<const GroupLabel> a,
                        int num_groups, bool overlapping,
                        MinDiffGradient* gradient = nullptr);

MinDiffModel MinDiffInit(int input_dim, int num_classes, int hidden,
                         uint64_t seed);
MinDiffModel MinDiffFit(const TrainingSet& data, const FairnessSpec& spec,
                        const MinDiffOptions& options,
                        Diagnostics* diag = nullptr);
Eigen::MatrixXd MinDiffPredict(const MinDiffModel& model,
                               const Eigen::MatrixXd& x);

// ---------------------------------------------------------------------------
// Reductions

struct ReductionsOptions {
  double eps = 0.01;
  double bound = 100.0;
  int iterations = 50;
  double eta = 0.0;  // <= 0 selects 2 / bound
  LogisticOptions logistic{1e-4, 500, 1e-5};
  uint64_t seed = 0;
};

struct ReductionsEnsemble {
  FairnessSpec spec;
  double eps = 0.0;
  std::vector<Eigen::MatrixXd> members;  // logistic weights per iterate
  std::vector<double> mixture;           // sums to 1
  double gap = 0.0;                      // final Lagrangian gap
  double moment_violation = 0.0;         // max signed moment of the mixture
};

ReductionsEnsemble ReductionsFit(const TrainingSet& data,
                                 const FairnessSpec& spec,
                                 const ReductionsOptions& options,
                                 Diagnostics* diag = nullptr);
// n x 2 mixture distribution.
Eigen::MatrixXd ReductionsPredict(const ReductionsEnsemble& model,
                                  const Eigen::MatrixXd& x);

// ---------------------------------------------------------------------------
// No mitigation

struct PlugInModel {
  Eigen::MatrixXd weights;  // K x (D + 1)
};

PlugInModel NoMitigationFit(const TrainingSet& data,
                            const LogisticOptions& options = {},
                            Diagnostics* diag = nullptr);
std::vector<int> NoMitigationPredict(const PlugInModel& model,
                                     const Eigen::MatrixXd& x);

// ---------------------------------------------------------------------------
// Type-tagged models.

using FairModel =
    std::variant<LinearRule, MinDiffModel, ReductionsEnsemble, PlugInModel>;

const char* ModelType(const FairModel& model);

// Output distributions used for evaluation: one-hot for the deterministic
// classifiers and the mixture for reductions.
Eigen::MatrixXd PredictDistribution(const FairModel& model,
                                    const Eigen::MatrixXd& x);

nlohmann::json ModelToJson(const FairModel& model);
FairModel ModelFromJson(const nlohmann::json& j);

// Row-wise argmax, ties to the lowest index.
std::vector<int> ArgmaxRows(const Eigen::MatrixXd& m);

}  // namespace fairpost::fairalg

#endif  // FAIRPOST_FAIRALG_H_
