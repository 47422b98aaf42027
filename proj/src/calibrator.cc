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

#include "fairpost/calibrator.h"

namespace fairpost::calibrator {
namespace {

using nlohmann::json;

const char* TargetName(FeatureKind k) {
  return k == FeatureKind::kJoint ? "joint" : "label";
}

}  // namespace

int JointLabel(int y, const GroupLabel& a, int num_classes) {
  return a.index() * num_classes + y;
}

CalibratorModel Fit(const featurizer::FeatureSet& features,
                    std::span<const int> y, std::span<const GroupLabel> a,
                    const CalibratorOptions& options, Diagnostics* diag) {
  const int n = features.size();
  if (n == 0) throw DataError("calibrator: no training features");
  if (static_cast<int>(y.size()) != n || static_cast<int>(a.size()) != n)
    throw DataError("calibrator: label count does not match feature rows");
  const FeatureLayout& in = features.layout;
  const int k = in.num_classes;
  const bool overlapping =
      in.kind == FeatureKind::kJoint ? in.overlapping : a[0].overlapping;
  FeatureLayout out{k, in.num_groups, overlapping,
                    options.target == Target::kJoint ? FeatureKind::kJoint
                                                     : FeatureKind::kYOnly};
  if (out.kind == FeatureKind::kJoint && out.num_groups < 1)
    throw ConfigError("calibrator: joint target needs the group count");

  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) {
    if (y[i] < 0 || y[i] >= k) throw DataError("calibrator: label out of range");
    if (a[i].overlapping != overlapping)
      throw DataError("calibrator: mixed group label kinds");
    if (out.kind == FeatureKind::kJoint) {
      if (a[i].index() >= out.num_group_cells())
        throw DataError("calibrator: group label out of range");
      labels[i] = JointLabel(y[i], a[i], k);
    } else {
      labels[i] = y[i];
    }
  }
  const int classes = out.size();
  LogisticModel lm = FitLogistic(features.rows, labels, classes, {},
                                 options.logistic, diag);
  CalibratorModel m;
  m.input_layout = in;
  m.output_layout = out;
  m.weights = std::move(lm.weights);
  m.iterations = lm.iterations;
  m.final_loss = lm.final_loss;
  m.converged = lm.converged;
  m.seed = options.seed;
  if (!m.converged)
    Warn(diag, "calibrator: stopped at the iteration cap (" +
                   std::to_string(m.iterations) + ") before convergence");
  return m;
}

Eigen::MatrixXd PredictAll(const CalibratorModel& model,
                           const Eigen::MatrixXd& features) {
  return PredictProba(model.weights, features);
}

std::vector<double> Predict(const CalibratorModel& model,
                            std::span<const double> feature) {
  Eigen::MatrixXd x(1, feature.size());
  for (size_t c = 0; c < feature.size(); ++c) x(0, c) = feature[c];
  Eigen::MatrixXd p = PredictAll(model, x);
  return std::vector<double>(p.data(), p.data() + p.size());
}

std::vector<double> MarginalY(std::span<const double> p,
                              const FeatureLayout& layout) {
  if (static_cast<int>(p.size()) != layout.size())
    throw DataError("marginal: vector length does not match layout");
  if (layout.kind == FeatureKind::kYOnly) return {p.begin(), p.end()};
  const int k = layout.num_classes;
  std::vector<double> out(k, 0.0);
  for (int cell = 0; cell < layout.num_group_cells(); ++cell)
    for (int c = 0; c < k; ++c) out[c] += p[cell * k + c];
  return out;
}

std::vector<double> MarginalGroup(std::span<const double> p,
                                  const FeatureLayout& layout,
                                  std::optional<int> condition,
                                  Diagnostics* diag) {
  if (layout.kind != FeatureKind::kJoint)
    throw ConfigError("marginal_group needs a joint distribution");
  if (static_cast<int>(p.size()) != layout.size())
    throw DataError("marginal: vector length does not match layout");
  const int k = layout.num_classes, cells = layout.num_group_cells();
  if (condition && (*condition < 0 || *condition >= k))
    throw DataError("marginal: condition class out of range");
  std::vector<double> out(cells, 0.0);
  double total = 0.0;
  for (int cell = 0; cell < cells; ++cell) {
    if (condition) {
      out[cell] = p[cell * k + *condition];
    } else {
      for (int c = 0; c < k; ++c) out[cell] += p[cell * k + c];
    }
    total += out[cell];
  }
  if (!(total > 0.0)) {
    Warn(diag, "marginal_group: zero conditioning mass; returning uniform");
    return std::vector<double>(cells, 1.0 / cells);
  }
  if (condition)
    for (double& v : out) v /= total;
  return out;
}

json CalibratorModel::ToJson() const {
  json w = json::array();
  for (Eigen::Index r = 0; r < weights.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < weights.cols(); ++c) row.push_back(weights(r, c));
    w.push_back(row);
  }
  return {{"input_layout", input_layout.ToJson()},
          {"output_layout", output_layout.ToJson()},
          {"target", TargetName(output_layout.kind)},
          {"weights", w},
          {"metadata",
           {{"iterations", iterations},
            {"final_loss", final_loss},
            {"converged", converged},
            {"seed", seed}}}};
}

CalibratorModel CalibratorModel::FromJson(const json& j) {
  CalibratorModel m;
  try {
    m.input_layout = FeatureLayout::FromJson(j.at("input_layout"));
    m.output_layout = FeatureLayout::FromJson(j.at("output_layout"));
    const json& w = j.at("weights");
    const size_t rows = w.size(), cols = rows ? w[0].size() : 0;
    m.weights.resize(rows, cols);
    for (size_t r = 0; r < rows; ++r) {
      if (w[r].size() != cols) throw DataError("calibrator: ragged weights");
      for (size_t c = 0; c < cols; ++c) m.weights(r, c) = w[r][c].get<double>();
    }
    const json& meta = j.at("metadata");
    m.iterations = meta.value("iterations", 0);
    m.final_loss = meta.value("final_loss", 0.0);
    m.converged = meta.value("converged", false);
    m.seed = meta.value("seed", uint64_t{0});
  } catch (const json::exception& e) {
    throw DataError(std::string("calibrator model: ") + e.what());
  }
  if (m.weights.rows() != m.output_layout.size() ||
      m.weights.cols() != m.input_layout.size() + 1)
    throw DataError("calibrator model: weight shape does not match layouts");
  return m;
}

void SaveModel(const std::string& path, const CalibratorModel& model) {
  WriteFile(path, model.ToJson().dump(1) + "\n");
}

CalibratorModel LoadModel(const std::string& path) {
  try {
    return CalibratorModel::FromJson(json::parse(ReadFile(path)));
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

}  // namespace fairpost::calibrator
