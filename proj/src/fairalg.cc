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

#include "fairpost/fairalg.h"

#include <cmath>

namespace fairpost::fairalg {
namespace {

using nlohmann::json;

json MatrixToJson(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd MatrixFromJson(const json& j) {
  const size_t rows = j.size(), cols = rows ? j[0].size() : 0;
  Eigen::MatrixXd m(rows, cols);
  for (size_t r = 0; r < rows; ++r) {
    if (j[r].size() != cols) throw DataError("model: ragged matrix");
    for (size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

json VectorToJson(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd VectorFromJson(const json& j) {
  const std::vector<double> v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
}

// JSON has no infinity; an absent alpha means unconstrained.
json AlphaToJson(double alpha) {
  return std::isinf(alpha) ? json(nullptr) : json(alpha);
}

}  // namespace

PlugInModel NoMitigationFit(const TrainingSet& d, const LogisticOptions& options,
                            Diagnostics* diag) {
  PlugInModel m;
  m.weights = FitLogistic(d.x, d.y, d.num_classes, {}, options, diag).weights;
  return m;
}

std::vector<int> NoMitigationPredict(const PlugInModel& model,
                                     const Eigen::MatrixXd& x) {
  return ArgmaxRows(PredictProba(model.weights, x));
}

const char* ModelType(const FairModel& model) {
  switch (model.index()) {
    case 0: return "linearpost";
    case 1: return "mindiff";
    case 2: return "reductions";
    default: return "no_mitigation";
  }
}

Eigen::MatrixXd PredictDistribution(const FairModel& model,
                                    const Eigen::MatrixXd& x) {
  if (const auto* r = std::get_if<LinearRule>(&model))
    return metrics::OneHot(LinearPostPredictAll(*r, x), r->layout.num_classes);
  if (const auto* m = std::get_if<MinDiffModel>(&model))
    return metrics::OneHot(ArgmaxRows(MinDiffPredict(*m, x)), m->num_classes());
  if (const auto* e = std::get_if<ReductionsEnsemble>(&model))
    return ReductionsPredict(*e, x);
  const auto& p = std::get<PlugInModel>(model);
  return metrics::OneHot(NoMitigationPredict(p, x), p.weights.rows());
}

json ModelToJson(const FairModel& model) {
  json j = {{"type", ModelType(model)}};
  if (const auto* r = std::get_if<LinearRule>(&model)) {
    j["layout"] = r->layout.ToJson();
    j["spec"] = r->spec.ToJson();
    j["alpha"] = AlphaToJson(r->alpha);
    j["epsilon"] = r->epsilon;
    j["weights"] = MatrixToJson(r->weights);
    j["event_masses"] = r->event_masses;
    j["training"] = {{"lp_objective", r->lp_objective},
                     {"lp_violation", r->lp_violation},
                     {"num_constraints", r->num_constraints},
                     {"rounds", r->rounds},
                     {"degenerate_points", r->degenerate_points}};
  } else if (const auto* m = std::get_if<MinDiffModel>(&model)) {
    j["spec"] = m->spec.ToJson();
    j["lambda"] = m->lambda;
    j["sigma"] = m->sigma;
    j["w1"] = MatrixToJson(m->w1);
    j["b1"] = VectorToJson(m->b1);
    j["w2"] = MatrixToJson(m->w2);
    j["b2"] = VectorToJson(m->b2);
  } else if (const auto* e = std::get_if<ReductionsEnsemble>(&model)) {
    j["spec"] = e->spec.ToJson();
    j["eps"] = e->eps;
    j["mixture"] = e->mixture;
    j["gap"] = e->gap;
    j["moment_violation"] = e->moment_violation;
    json members = json::array();
    for (const auto& w : e->members) members.push_back(MatrixToJson(w));
    j["members"] = std::move(members);
  } else {
    j["weights"] = MatrixToJson(std::get<PlugInModel>(model).weights);
  }
  return j;
}

FairModel ModelFromJson(const json& j) {
  try {
    const std::string type = j.at("type").get<std::string>();
    if (type == "linearpost") {
      LinearRule r;
      r.layout = FeatureLayout::FromJson(j.at("layout"));
      r.spec = FairnessSpec::FromJson(j.at("spec"));
      r.alpha = j.at("alpha").is_null() ? kUnconstrained : j.at("alpha").get<double>();
      r.epsilon = j.at("epsilon").get<double>();
      r.weights = MatrixFromJson(j.at("weights"));
      r.event_masses = j.at("event_masses").get<std::vector<double>>();
      const json& t = j.at("training");
      r.lp_objective = t.at("lp_objective").get<double>();
      r.lp_violation = t.at("lp_violation").get<double>();
      r.num_constraints = t.at("num_constraints").get<int>();
      r.rounds = t.at("rounds").get<int>();
      r.degenerate_points = t.at("degenerate_points").get<int>();
      if (r.weights.rows() != r.layout.num_classes || r.weights.cols() != r.layout.size())
        throw DataError("linearpost model: weight shape does not match layout");
      return r;
    }
    if (type == "mindiff") {
      MinDiffModel m;
      m.spec = FairnessSpec::FromJson(j.at("spec"));
      m.lambda = j.at("lambda").get<double>();
      m.sigma = j.at("sigma").get<double>();
      m.w1 = MatrixFromJson(j.at("w1"));
      m.b1 = VectorFromJson(j.at("b1"));
      m.w2 = MatrixFromJson(j.at("w2"));
      m.b2 = VectorFromJson(j.at("b2"));
      if (m.b1.size() != m.w1.rows() || m.w2.cols() != m.w1.rows() ||
          m.b2.size() != m.w2.rows())
        throw DataError("mindiff model: inconsistent layer shapes");
      return m;
    }
    if (type == "reductions") {
      ReductionsEnsemble e;
      e.spec = FairnessSpec::FromJson(j.at("spec"));
      e.eps = j.at("eps").get<double>();
      e.mixture = j.at("mixture").get<std::vector<double>>();
      e.gap = j.at("gap").get<double>();
      e.moment_violation = j.at("moment_violation").get<double>();
      for (const json& w : j.at("members")) e.members.push_back(MatrixFromJson(w));
      if (e.members.size() != e.mixture.size())
        throw DataError("reductions model: member and mixture counts differ");
      return e;
    }
    if (type == "no_mitigation") return PlugInModel{MatrixFromJson(j.at("weights"))};
    throw DataError("unknown model type '" + type + "'");
  } catch (const json::exception& e) {
    throw DataError(std::string("model: ") + e.what());
  }
}

}  // namespace fairpost::fairalg
