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

#include "fairpost/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fairpost::metrics {
namespace {

using nlohmann::json;

// Per-event sums of output distributions over the members of each group
// event, restricted to examples with y == condition when condition >= 0.
// Disjoint labels have one event per group. Overlapping labels have one
// event per nonempty subset I, with superset membership.
struct EventRates {
  int num_events = 0;
  int num_classes = 0;
  std::vector<double> sums;    // event * K + k
  std::vector<double> counts;  // per event

  double Rate(int e, int k) const { return sums[e * num_classes + k] / counts[e]; }
};

int NumEvents(const PredictionSet& p) {
  return p.overlapping ? (1 << p.num_groups) : p.num_groups;
}

EventRates Accumulate(const PredictionSet& p, int condition) {
  EventRates r;
  r.num_events = NumEvents(p);
  r.num_classes = p.num_classes();
  r.sums.assign(static_cast<size_t>(r.num_events) * r.num_classes, 0.0);
  r.counts.assign(r.num_events, 0.0);
  const int k = r.num_classes;
  auto add = [&](int e, int i) {
    r.counts[e] += 1.0;
    for (int c = 0; c < k; ++c) r.sums[e * k + c] += p.dist(i, c);
  };
  for (int i = 0; i < p.size(); ++i) {
    if (condition >= 0 && p.y[i] != condition) continue;
    if (!p.overlapping) {
      add(p.a[i].index(), i);
      continue;
    }
    // Nonempty submasks of the example's membership mask.
    const uint32_t mask = p.a[i].value;
    for (uint32_t s = mask; s != 0; s = (s - 1) & mask) add(s, i);
  }
  return r;
}

// max - min of Rate(e, k) over events with positive count. Event 0 of an
// overlapping label set is the empty subset and never participates.
double Spread(const EventRates& r, int k, bool overlapping, int* nonempty) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  int used = 0;
  for (int e = overlapping ? 1 : 0; e < r.num_events; ++e) {
    if (r.counts[e] <= 0.0) continue;
    const double v = r.Rate(e, k);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    ++used;
  }
  if (nonempty != nullptr) *nonempty = used;
  return used >= 2 ? hi - lo : 0.0;
}

void ReportExclusions(const EventRates& r, bool overlapping,
                      const std::string& what, Diagnostics* diag) {
  if (diag == nullptr) return;
  int empty = 0;
  for (int e = overlapping ? 1 : 0; e < r.num_events; ++e)
    if (r.counts[e] <= 0.0) ++empty;
  if (empty > 0)
    diag->Warn(what + ": excluded " + std::to_string(empty) +
               (overlapping ? " empty subgroup event(s)" : " empty group cell(s)"));
}

// Largest spread of the measured class among examples of class `condition`.
double ConditionalSpread(const PredictionSet& p, int condition, int measured,
                         const std::string& what, Diagnostics* diag) {
  EventRates r = Accumulate(p, condition);
  ReportExclusions(r, p.overlapping, what, diag);
  int used = 0;
  const double v = Spread(r, measured, p.overlapping, &used);
  if (used < 2)
    Warn(diag, what + ": fewer than 2 nonempty groups; violation is 0");
  return v;
}

void CheckBinary(const PredictionSet& p, const char* what) {
  if (p.num_classes() != 2)
    throw ConfigError(std::string(what) + " is defined for binary labels only");
}

void CheckClass(const PredictionSet& p, int c) {
  if (c < 0 || c >= p.num_classes())
    throw ConfigError("class index " + std::to_string(c) + " out of range");
}

}  // namespace

const char* CriterionName(Criterion c) {
  switch (c) {
    case Criterion::kSP: return "SP";
    case Criterion::kTPR: return "TPR";
    case Criterion::kFPR: return "FPR";
    case Criterion::kEO: return "EO";
    case Criterion::kTPRMulticlass: return "TPR_MULTICLASS";
    case Criterion::kWFPR: return "WFPR";
  }
  return "?";
}

Criterion CriterionFromString(const std::string& s) {
  for (Criterion c : {Criterion::kSP, Criterion::kTPR, Criterion::kFPR,
                      Criterion::kEO, Criterion::kTPRMulticlass,
                      Criterion::kWFPR})
    if (s == CriterionName(c)) return c;
  throw ConfigError("unknown fairness criterion '" + s + "'");
}

json FairnessSpec::ToJson() const {
  return {{"criterion", CriterionName(criterion)},
          {"positive_class", positive_class},
          {"negative_class", negative_class},
          {"tolerance", tolerance}};
}

FairnessSpec FairnessSpec::FromJson(const json& j) {
  FairnessSpec s;
  try {
    s.criterion = CriterionFromString(j.at("criterion").get<std::string>());
    s.positive_class = j.value("positive_class", 1);
    s.negative_class = j.value("negative_class", 0);
    s.tolerance = j.value("tolerance", 0.0);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("fairness spec: ") + e.what());
  }
  if (s.tolerance < 0) throw ConfigError("fairness tolerance must be >= 0");
  return s;
}

void PredictionSet::Validate() const {
  const int n = size();
  if (dist.rows() != n || static_cast<int>(a.size()) != n)
    throw DataError("prediction set: row counts differ");
  if (n == 0) throw DataError("prediction set is empty");
  const int k = num_classes();
  const int cells = overlapping ? (1 << num_groups) : num_groups;
  for (int i = 0; i < n; ++i) {
    if (y[i] < 0 || y[i] >= k) throw DataError("prediction set: label out of range");
    if (a[i].overlapping != overlapping || a[i].index() >= cells)
      throw DataError("prediction set: group label out of range");
  }
}

Eigen::MatrixXd OneHot(const std::vector<int>& predictions, int num_classes) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(predictions.size(), num_classes);
  for (size_t i = 0; i < predictions.size(); ++i) m(i, predictions[i]) = 1.0;
  return m;
}

double Accuracy(const PredictionSet& p) {
  p.Validate();
  double s = 0.0;
  for (int i = 0; i < p.size(); ++i) s += p.dist(i, p.y[i]);
  return s / p.size();
}

double VSp(const PredictionSet& p, Diagnostics* diag) {
  p.Validate();
  EventRates r = Accumulate(p, -1);
  ReportExclusions(r, p.overlapping, "SP", diag);
  double v = 0.0;
  int used = 0;
  for (int k = 0; k < p.num_classes(); ++k)
    v = std::max(v, Spread(r, k, p.overlapping, &used));
  if (used < 2) Warn(diag, "SP: fewer than 2 nonempty groups; violation is 0");
  return v;
}

double VTpr(const PredictionSet& p, int positive_class, Diagnostics* diag) {
  p.Validate();
  CheckBinary(p, "TPR");
  CheckClass(p, positive_class);
  return ConditionalSpread(p, positive_class, positive_class, "TPR", diag);
}

double VFpr(const PredictionSet& p, int positive_class, int negative_class,
            Diagnostics* diag) {
  p.Validate();
  CheckBinary(p, "FPR");
  CheckClass(p, positive_class);
  CheckClass(p, negative_class);
  return ConditionalSpread(p, negative_class, positive_class, "FPR", diag);
}

double VEo(const PredictionSet& p, Diagnostics* diag) {
  p.Validate();
  double v = 0.0;
  for (int j = 0; j < p.num_classes(); ++j) {
    EventRates r = Accumulate(p, j);
    ReportExclusions(r, p.overlapping, "EO (Y=" + std::to_string(j) + ")", diag);
    for (int k = 0; k < p.num_classes(); ++k)
      v = std::max(v, Spread(r, k, p.overlapping, nullptr));
  }
  return v;
}

double VTprMulticlass(const PredictionSet& p, Diagnostics* diag) {
  p.Validate();
  double v = 0.0;
  for (int k = 0; k < p.num_classes(); ++k) {
    EventRates r = Accumulate(p, k);
    ReportExclusions(r, p.overlapping, "TPR_MULTICLASS (Y=" + std::to_string(k) + ")",
                     diag);
    v = std::max(v, Spread(r, k, p.overlapping, nullptr));
  }
  return v;
}

double VFprOverlapping(const PredictionSet& p, int positive_class,
                       int negative_class, Diagnostics* diag) {
  if (!p.overlapping)
    throw ConfigError("overlapping-group FPR needs overlapping group labels");
  return VFpr(p, positive_class, negative_class, diag);
}

double VFprWeighted(const PredictionSet& p, int positive_class,
                    int negative_class, Diagnostics* diag) {
  p.Validate();
  if (!p.overlapping)
    throw ConfigError("weighted FPR needs overlapping group labels");
  CheckBinary(p, "WFPR");
  CheckClass(p, positive_class);
  CheckClass(p, negative_class);
  EventRates r = Accumulate(p, negative_class);
  const double n = p.size();
  double mass = 0.0, bar = 0.0;
  for (int e = 1; e < r.num_events; ++e) {
    if (r.counts[e] <= 0.0) continue;
    const double w = r.counts[e] / n;
    mass += w;
    bar += w * r.Rate(e, positive_class);
  }
  if (!(mass > 0.0)) {
    Warn(diag, "WFPR: no negative examples in any subgroup; violation is 0");
    return 0.0;
  }
  bar /= mass;
  double v = 0.0;
  for (int e = 1; e < r.num_events; ++e) {
    if (r.counts[e] <= 0.0) continue;
    v += (r.counts[e] / n) * std::abs(r.Rate(e, positive_class) - bar);
  }
  return v;
}

void CheckCompatible(const FairnessSpec& spec, int num_classes,
                     bool overlapping) {
  const char* name = CriterionName(spec.criterion);
  switch (spec.criterion) {
    case Criterion::kTPR:
    case Criterion::kFPR:
    case Criterion::kWFPR:
      if (num_classes != 2)
        throw ConfigError(std::string(name) + " needs binary labels (K = 2), got K = " +
                          std::to_string(num_classes));
      if (spec.positive_class < 0 || spec.positive_class >= 2 ||
          spec.negative_class < 0 || spec.negative_class >= 2 ||
          spec.positive_class == spec.negative_class)
        throw ConfigError(std::string(name) + ": invalid positive/negative class");
      break;
    default:
      break;
  }
  if (spec.criterion == Criterion::kWFPR && !overlapping)
    throw ConfigError("WFPR needs overlapping group labels");
}

double Violation(const FairnessSpec& spec, const PredictionSet& p,
                 Diagnostics* diag) {
  CheckCompatible(spec, p.num_classes(), p.overlapping);
  switch (spec.criterion) {
    case Criterion::kSP:
      return VSp(p, diag);
    case Criterion::kTPR:
      return VTpr(p, spec.positive_class, diag);
    case Criterion::kFPR:
      return p.overlapping
                 ? VFprOverlapping(p, spec.positive_class, spec.negative_class, diag)
                 : VFpr(p, spec.positive_class, spec.negative_class, diag);
    case Criterion::kEO:
      return VEo(p, diag);
    case Criterion::kTPRMulticlass:
      return VTprMulticlass(p, diag);
    case Criterion::kWFPR:
      return VFprWeighted(p, spec.positive_class, spec.negative_class, diag);
  }
  return 0.0;
}

}  // namespace fairpost::metrics
