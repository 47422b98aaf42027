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

// Evaluation protocol: Pareto filtering, tradeoff curves, area under the
// tradeoff curve, cross-seed reports and hyperparameter sweeps.

#ifndef FAIRPOST_EVALSUITE_H_
#define FAIRPOST_EVALSUITE_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fairpost/common.h"
#include "fairpost/fairalg.h"
#include "fairpost/metrics.h"
#include "json.hpp"

namespace fairpost::evalsuite {

struct TradeoffPoint {
  double accuracy = 0.0;
  double violation = 0.0;
  double grid_value = 0.0;
  uint64_t seed = 0;
  std::string algorithm;
  std::string split;
};

// Keeps p unless some q has accuracy >= and violation <= with one strict.
// Input order is preserved.
std::vector<TradeoffPoint> ParetoFilter(const std::vector<TradeoffPoint>& points);

// Piecewise-linear nondecreasing curve through sorted knots, constant
// beyond the last knot.
class TradeoffCurve {
 public:
  TradeoffCurve(std::vector<double> u, std::vector<double> t);
  double operator()(double u) const;
  const std::vector<double>& knots_u() const { return u_; }
  const std::vector<double>& knots_t() const { return t_; }

 private:
  std::vector<double> u_, t_;
};

// Augments with (b, 0) and the (max accuracy, infinity) extension, filters
// to the Pareto set and interpolates. `max_accuracy` defaults to the best
// accuracy among the points.
TradeoffCurve BuildCurve(const std::vector<TradeoffPoint>& points,
                         double base_rate,
                         std::optional<double> max_accuracy = std::nullopt);

struct AutcConfig {
  double gamma = 1.0;
  double cutoff = 0.1;
  double base_rate = 0.5;
  void Validate() const;
};

// Exact piecewise integration of the weighted area above the base rate,
// normalized by the area of the active region.
double Autc(const TradeoffCurve& curve, const AutcConfig& config);

// Cutoff for a benchmark dataset and criterion, if tabulated.
std::optional<double> TabulatedCutoff(const std::string& dataset,
                                      metrics::Criterion criterion);
// Tabulated value, else the violation of the highest-accuracy point.
double DefaultCutoff(const std::string& dataset, metrics::Criterion criterion,
                     const std::vector<TradeoffPoint>& candidates);

// Per-seed curve sampled at equally spaced validation-violation levels.
struct SeedCurve {
  uint64_t seed = 0;
  std::vector<double> levels;
  std::vector<double> test_accuracy;
  std::vector<double> test_violation;
  double autc = 0.0;
  bool flat = false;  // all Pareto points share one validation violation
};

struct CurveReport {
  std::string algorithm;
  std::vector<SeedCurve> seeds;
  std::vector<double> mean_accuracy, std_accuracy;
  std::vector<double> mean_violation, std_violation;
  double autc_mean = 0.0;
  double autc_std = 0.0;

  nlohmann::json ToJson() const;
};

// Points of one algorithm: validation and test entries for each
// (seed, grid value). AUTC is computed per seed on the test points of the
// validation-Pareto models, using that seed's base rate.
CurveReport BuildReport(const std::string& algorithm,
                        const std::vector<TradeoffPoint>& points,
                        const std::map<uint64_t, double>& base_rates,
                        double gamma, double cutoff, int levels = 5,
                        Diagnostics* diag = nullptr);

void WritePointsCsv(const std::string& path,
                    const std::vector<TradeoffPoint>& points);
std::vector<TradeoffPoint> ReadPointsCsv(const std::string& path);

// ---------------------------------------------------------------------------
// Sweeps

enum class Algorithm { kLinearPost, kMinDiff, kReductions, kNoMitigation };
const char* AlgorithmName(Algorithm a);
Algorithm AlgorithmFromString(const std::string& s);

// Default grids: 15 LinearPost tolerances from 0.001 to alpha_max, the
// 17-value MinDiff strength list, the 16-value Reductions tolerance list
// and a single no-mitigation point.
std::vector<double> LinearPostGrid(double alpha_max, int count = 15);
std::vector<double> MinDiffGrid();
std::vector<double> ReductionsGrid();

struct EvalSplit {
  std::string name;
  Eigen::MatrixXd x;
  std::vector<int> y;
  std::vector<GroupLabel> a;
};

struct SweepSpec {
  Algorithm algorithm = Algorithm::kLinearPost;
  metrics::FairnessSpec fairness;
  std::optional<std::vector<double>> grid;  // unset: default grid
  fairalg::LinearPostOptions linearpost;
  fairalg::MinDiffOptions mindiff;
  fairalg::ReductionsOptions reductions;
  int jobs = 1;
};

struct SweepResult {
  std::vector<TradeoffPoint> points;
  std::vector<fairalg::FairModel> models;  // one per successful grid value
  std::vector<double> grid;
  std::vector<std::string> failures;
};

// Trains one model per grid value on `train` (features must be calibrated
// joint distributions with `layout`) and evaluates every split.
SweepResult RunSweep(const SweepSpec& spec, uint64_t seed,
                     const fairalg::TrainingSet& train,
                     const featurizer::FeatureLayout& layout,
                     const std::vector<EvalSplit>& splits,
                     Diagnostics* diag = nullptr);

}  // namespace fairpost::evalsuite

#endif  // FAIRPOST_EVALSUITE_H_
