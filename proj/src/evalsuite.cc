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

#include "fairpost/evalsuite.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

namespace fairpost::evalsuite {
namespace {

using nlohmann::json;

bool Dominates(const TradeoffPoint& q, const TradeoffPoint& p) {
  return q.accuracy >= p.accuracy && q.violation <= p.violation &&
         (q.accuracy > p.accuracy || q.violation < p.violation);
}

// Integral over s in [lo, hi] of s^gamma (A + B s).
double Moment(double a, double b, double gamma, double lo, double hi) {
  auto f = [&](double s) {
    return a * std::pow(s, gamma + 1) / (gamma + 1) +
           b * std::pow(s, gamma + 2) / (gamma + 2);
  };
  return f(hi) - f(lo);
}

void MeanStd(const std::vector<double>& v, double* mean, double* sd) {
  *mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double ss = 0.0;
  for (double x : v) ss += (x - *mean) * (x - *mean);
  *sd = v.size() > 1 ? std::sqrt(ss / (v.size() - 1)) : 0.0;
}

std::string ToLower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

std::vector<TradeoffPoint> ParetoFilter(const std::vector<TradeoffPoint>& points) {
  std::vector<TradeoffPoint> out;
  for (const TradeoffPoint& p : points) {
    bool dominated = false;
    for (const TradeoffPoint& q : points)
      if (Dominates(q, p)) {
        dominated = true;
        break;
      }
    if (!dominated) out.push_back(p);
  }
  return out;
}

TradeoffCurve::TradeoffCurve(std::vector<double> u, std::vector<double> t)
    : u_(std::move(u)), t_(std::move(t)) {
  if (u_.empty() || u_.size() != t_.size())
    throw DataError("tradeoff curve needs matching, nonempty knots");
  for (size_t i = 1; i < u_.size(); ++i)
    if (u_[i] < u_[i - 1]) throw DataError("tradeoff curve knots must be sorted");
}

double TradeoffCurve::operator()(double u) const {
  if (u <= u_.front()) return t_.front();
  if (u >= u_.back()) return t_.back();
  const size_t j = std::upper_bound(u_.begin(), u_.end(), u) - u_.begin();
  const double w = (u - u_[j - 1]) / (u_[j] - u_[j - 1]);
  return t_[j - 1] + w * (t_[j] - t_[j - 1]);
}

TradeoffCurve BuildCurve(const std::vector<TradeoffPoint>& points,
                         double base_rate, std::optional<double> max_accuracy) {
  std::vector<TradeoffPoint> all = points;
  TradeoffPoint constant;
  constant.accuracy = base_rate;
  constant.violation = 0.0;
  all.push_back(constant);
  double best = base_rate;
  for (const auto& p : points) best = std::max(best, p.accuracy);
  if (max_accuracy) best = std::max(best, *max_accuracy);
  std::vector<TradeoffPoint> front = ParetoFilter(all);
  std::sort(front.begin(), front.end(), [](const auto& a, const auto& b) {
    return a.violation < b.violation ||
           (a.violation == b.violation && a.accuracy < b.accuracy);
  });
  std::vector<double> u, t;
  for (const auto& p : front) {
    u.push_back(p.violation);
    t.push_back(p.accuracy);
  }
  // The point at infinite violation: constant from the last finite knot.
  if (best > t.back()) {
    u.push_back(u.back());
    t.push_back(best);
  }
  return TradeoffCurve(std::move(u), std::move(t));
}

void AutcConfig::Validate() const {
  if (!(cutoff > 0.0) || !std::isfinite(cutoff))
    throw ConfigError("AUTC cutoff must be positive and finite");
  if (!(gamma >= 0.0) || !std::isfinite(gamma))
    throw ConfigError("AUTC penalty must be finite and >= 0");
  if (!(base_rate >= 0.0 && base_rate < 1.0))
    throw ConfigError("AUTC base rate must lie in [0, 1)");
}

double Autc(const TradeoffCurve& curve, const AutcConfig& cfg) {
  cfg.Validate();
  const double v = cfg.cutoff, g = cfg.gamma, b = cfg.base_rate;
  std::vector<double> cuts = {0.0, v};
  for (double u : curve.knots_u())
    if (u > 0.0 && u < v) cuts.push_back(u);
  std::sort(cuts.begin(), cuts.end());
  double num = 0.0;
  for (size_t i = 0; i + 1 < cuts.size(); ++i) {
    double p = cuts[i], q = cuts[i + 1];
    if (!(q > p)) continue;
    // Evaluate just inside the interval so jump knots take the value of
    // the side being integrated.
    const double span = q - p;
    const double gp = curve(p + 1e-12 * span) - b, gq = curve(q - 1e-12 * span) - b;
    const double m = (gq - gp) / span;
    const double g0 = gp - m * 1e-12 * span;
    auto integrate = [&](double lo_u, double hi_u) {
      // g(u) = g0 + m (u - p) = A + B s with s = v - u.
      const double a = g0 + m * (v - p), bb = -m;
      return Moment(a, bb, g, v - hi_u, v - lo_u);
    };
    const double g1 = g0 + m * span;
    if (g0 >= 0.0 && g1 >= 0.0) {
      num += integrate(p, q);
    } else if (g0 > 0.0 || g1 > 0.0) {
      const double root = p - g0 / m;
      num += g0 > 0.0 ? integrate(p, root) : integrate(root, q);
    }
  }
  const double den = (1.0 - b) * std::pow(v, g + 1) / (g + 1);
  return num / den;
}

std::optional<double> TabulatedCutoff(const std::string& dataset,
                                      metrics::Criterion c) {
  using metrics::Criterion;
  const std::string d = ToLower(dataset);
  const bool tpr_fpr = c == Criterion::kTPR || c == Criterion::kFPR;
  if (d == "adult") {
    if (c == Criterion::kSP) return 0.177;
    if (tpr_fpr) return 0.053;
    if (c == Criterion::kEO) return 0.083;
  } else if (d == "acsincome") {
    if (c == Criterion::kSP) return 0.305;
    if (tpr_fpr) return 0.374;
    if (c == Criterion::kEO) return 0.315;
  } else if (d == "compas") {
    if (c == Criterion::kSP) return 0.220;
    if (tpr_fpr) return 0.138;
    if (c == Criterion::kEO) return 0.218;
  } else if (d == "biasbios") {
    if (c == Criterion::kSP) return 0.090;
    if (c == Criterion::kEO) return 0.490;
  } else if (d == "civilcomments") {
    if (tpr_fpr || c == Criterion::kWFPR) return 0.007;
  }
  return std::nullopt;
}

double DefaultCutoff(const std::string& dataset, metrics::Criterion criterion,
                     const std::vector<TradeoffPoint>& candidates) {
  if (auto v = TabulatedCutoff(dataset, criterion)) return *v;
  if (candidates.empty())
    throw ConfigError("no tabulated cutoff for '" + dataset + "' / " +
                      metrics::CriterionName(criterion) +
                      " and no candidate points to derive one");
  const auto best = std::max_element(
      candidates.begin(), candidates.end(),
      [](const auto& a, const auto& b) { return a.accuracy < b.accuracy; });
  return best->violation;
}

CurveReport BuildReport(const std::string& algorithm,
                        const std::vector<TradeoffPoint>& points,
                        const std::map<uint64_t, double>& base_rates,
                        double gamma, double cutoff, int levels,
                        Diagnostics* diag) {
  if (levels < 1) throw ConfigError("report needs at least one level");
  CurveReport rep;
  rep.algorithm = algorithm;
  std::map<uint64_t, std::vector<TradeoffPoint>> val, test;
  for (const auto& p : points) {
    if (p.algorithm != algorithm) continue;
    if (p.split == "val") val[p.seed].push_back(p);
    if (p.split == "test") test[p.seed].push_back(p);
  }
  if (val.empty()) throw DataError("report: no validation points for " + algorithm);
  for (auto& [seed, vp] : val) {
    // Pair each validation point with the test point of the same model.
    std::vector<TradeoffPoint>& tp = test[seed];
    std::vector<bool> used(tp.size(), false);
    std::vector<std::pair<TradeoffPoint, TradeoffPoint>> pairs;
    for (const auto& p : ParetoFilter(vp)) {
      for (size_t j = 0; j < tp.size(); ++j) {
        if (used[j] || tp[j].grid_value != p.grid_value) continue;
        used[j] = true;
        pairs.emplace_back(p, tp[j]);
        break;
      }
    }
    if (pairs.empty())
      throw DataError("report: seed " + std::to_string(seed) + " has no test points");
    std::stable_sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
      return a.first.violation < b.first.violation;
    });
    SeedCurve sc;
    sc.seed = seed;
    const double vmin = pairs.front().first.violation;
    const double vmax = pairs.back().first.violation;
    sc.flat = !(vmax > vmin);
    if (sc.flat)
      Warn(diag, "report: " + algorithm + " seed " + std::to_string(seed) +
                     (pairs.size() == 1 ? " has a single Pareto point"
                                        : " has one validation violation level") +
                     "; all levels use it");
    for (int l = 0; l < levels; ++l) {
      const double t = levels == 1 ? vmin : vmin + (vmax - vmin) * l / (levels - 1);
      sc.levels.push_back(t);
      if (sc.flat) {
        sc.test_accuracy.push_back(pairs.front().second.accuracy);
        sc.test_violation.push_back(pairs.front().second.violation);
        continue;
      }
      size_t j = 0;
      while (j + 2 < pairs.size() && pairs[j + 1].first.violation < t) ++j;
      const double v0 = pairs[j].first.violation, v1 = pairs[j + 1].first.violation;
      const double w = v1 > v0 ? std::clamp((t - v0) / (v1 - v0), 0.0, 1.0) : 0.0;
      const auto& a = pairs[j].second;
      const auto& b = pairs[j + 1].second;
      sc.test_accuracy.push_back(a.accuracy + w * (b.accuracy - a.accuracy));
      sc.test_violation.push_back(a.violation + w * (b.violation - a.violation));
    }
    const auto br = base_rates.find(seed);
    if (br == base_rates.end())
      throw DataError("report: no base rate for seed " + std::to_string(seed));
    std::vector<TradeoffPoint> tpts;
    for (const auto& pr : pairs) tpts.push_back(pr.second);
    sc.autc = Autc(BuildCurve(tpts, br->second), {gamma, cutoff, br->second});
    rep.seeds.push_back(std::move(sc));
  }
  for (int l = 0; l < levels; ++l) {
    std::vector<double> acc, vio;
    for (const auto& s : rep.seeds) {
      acc.push_back(s.test_accuracy[l]);
      vio.push_back(s.test_violation[l]);
    }
    double m, sd;
    MeanStd(acc, &m, &sd);
    rep.mean_accuracy.push_back(m);
    rep.std_accuracy.push_back(sd);
    MeanStd(vio, &m, &sd);
    rep.mean_violation.push_back(m);
    rep.std_violation.push_back(sd);
  }
  std::vector<double> autcs;
  for (const auto& s : rep.seeds) autcs.push_back(s.autc);
  MeanStd(autcs, &rep.autc_mean, &rep.autc_std);
  return rep;
}

json CurveReport::ToJson() const {
  json per = json::array();
  for (const auto& s : seeds)
    per.push_back({{"seed", s.seed},
                   {"levels", s.levels},
                   {"test_accuracy", s.test_accuracy},
                   {"test_violation", s.test_violation},
                   {"autc", s.autc},
                   {"flat", s.flat}});
  return {{"algorithm", algorithm},
          {"seeds", per},
          {"mean_accuracy", mean_accuracy},
          {"std_accuracy", std_accuracy},
          {"mean_violation", mean_violation},
          {"std_violation", std_violation},
          {"autc_mean", autc_mean},
          {"autc_std", autc_std}};
}

void WritePointsCsv(const std::string& path,
                    const std::vector<TradeoffPoint>& points) {
  std::string out = "seed,algorithm,grid_value,split,accuracy,violation\n";
  for (const auto& p : points)
    out += std::to_string(p.seed) + "," + p.algorithm + "," +
           FormatDouble(p.grid_value) + "," + p.split + "," +
           FormatDouble(p.accuracy) + "," + FormatDouble(p.violation) + "\n";
  WriteFile(path, out);
}

std::vector<TradeoffPoint> ReadPointsCsv(const std::string& path) {
  std::istringstream in(ReadFile(path));
  std::string line;
  std::getline(in, line);
  if (line != "seed,algorithm,grid_value,split,accuracy,violation")
    throw DataError(path + ": unexpected points header");
  std::vector<TradeoffPoint> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 6)
      throw DataError(path + ":" + std::to_string(lineno) + ": expected 6 fields");
    TradeoffPoint p;
    try {
      p.seed = std::stoull(f[0]);
    } catch (const std::exception&) {
      throw DataError(path + ":" + std::to_string(lineno) + ": bad seed");
    }
    p.algorithm = f[1];
    p.grid_value = ParseDouble(f[2]);
    p.split = f[3];
    p.accuracy = ParseDouble(f[4]);
    p.violation = ParseDouble(f[5]);
    out.push_back(std::move(p));
  }
  return out;
}

const char* AlgorithmName(Algorithm a) {
  switch (a) {
    case Algorithm::kLinearPost: return "linearpost";
    case Algorithm::kMinDiff: return "mindiff";
    case Algorithm::kReductions: return "reductions";
    case Algorithm::kNoMitigation: return "no_mitigation";
  }
  return "?";
}

Algorithm AlgorithmFromString(const std::string& s) {
  for (Algorithm a : {Algorithm::kLinearPost, Algorithm::kMinDiff,
                      Algorithm::kReductions, Algorithm::kNoMitigation})
    if (s == AlgorithmName(a)) return a;
  throw ConfigError("unknown algorithm '" + s + "'");
}

std::vector<double> LinearPostGrid(double alpha_max, int count) {
  const double lo = 0.001, hi = std::max(alpha_max, lo);
  std::vector<double> g;
  for (int i = 0; i < count; ++i)
    g.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
  return g;
}

std::vector<double> MinDiffGrid() {
  return {10, 8, 6, 4, 3.5, 3, 2.5, 2, 1.5, 1, 0.7, 0.5, 0.3, 0.1, 0.05, 0.01, 0.0};
}

std::vector<double> ReductionsGrid() {
  return {100, 50, 20, 10, 5, 2, 1, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001};
}

SweepResult RunSweep(const SweepSpec& spec, uint64_t seed,
                     const fairalg::TrainingSet& train,
                     const featurizer::FeatureLayout& layout,
                     const std::vector<EvalSplit>& splits, Diagnostics* diag) {
  using namespace fairalg;
  metrics::CheckCompatible(spec.fairness, layout.num_classes, layout.overlapping);
  SweepResult res;
  const char* name = AlgorithmName(spec.algorithm);
  if (spec.grid) {
    if (spec.grid->empty()) throw ConfigError("sweep grid is empty");
    res.grid = *spec.grid;
  } else {
    switch (spec.algorithm) {
      case Algorithm::kLinearPost: {
        const LinearPostResult plug =
            LinearPostFit(train.x, layout, spec.fairness, kUnconstrained);
        res.grid = LinearPostGrid(
            LpViolation(train.x, layout, spec.fairness, plug.assignment,
                        spec.linearpost.min_event_mass));
        break;
      }
      case Algorithm::kMinDiff: res.grid = MinDiffGrid(); break;
      case Algorithm::kReductions: res.grid = ReductionsGrid(); break;
      case Algorithm::kNoMitigation: res.grid = {0.0}; break;
    }
  }

  const int n = static_cast<int>(res.grid.size());
  struct Job {
    std::optional<FairModel> model;
    std::string failure;
    Diagnostics diag;
  };
  std::vector<Job> jobs(n);
  auto run = [&](int idx) {
    Job& job = jobs[idx];
    const double value = res.grid[idx];
    const uint64_t s = DeriveSeed(seed, std::string(name) + "/" + std::to_string(idx));
    try {
      switch (spec.algorithm) {
        case Algorithm::kLinearPost: {
          LinearPostOptions o = spec.linearpost;
          o.seed = s;
          job.model = LinearPostFit(train.x, layout, spec.fairness, value, o, &job.diag).rule;
          break;
        }
        case Algorithm::kMinDiff: {
          MinDiffOptions o = spec.mindiff;
          o.lambda = value;
          o.seed = s;
          job.model = MinDiffFit(train, spec.fairness, o, &job.diag);
          break;
        }
        case Algorithm::kReductions: {
          ReductionsOptions o = spec.reductions;
          o.eps = value;
          o.seed = s;
          job.model = ReductionsFit(train, spec.fairness, o, &job.diag);
          break;
        }
        case Algorithm::kNoMitigation:
          job.model = NoMitigationFit(train, {}, &job.diag);
          break;
      }
    } catch (const Error& e) {
      job.failure = std::string(name) + " grid value " + FormatDouble(value) + ": " + e.what();
    }
  };
  const int workers = std::clamp(spec.jobs, 1, std::max(n, 1));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) run(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int i = next++; i < n; i = next++) run(i);
      });
    for (auto& t : pool) t.join();
  }

  for (int i = 0; i < n; ++i) {
    Job& job = jobs[i];
    if (diag != nullptr)
      for (auto& w : job.diag.warnings) diag->Warn(std::move(w));
    if (!job.model) {
      res.failures.push_back(job.failure);
      Warn(diag, job.failure);
      continue;
    }
    for (const EvalSplit& split : splits) {
      metrics::PredictionSet ps;
      ps.dist = PredictDistribution(*job.model, split.x);
      ps.y = split.y;
      ps.a = split.a;
      ps.num_groups = layout.num_groups;
      ps.overlapping = layout.overlapping;
      ps.split = split.name;
      TradeoffPoint p;
      p.seed = seed;
      p.algorithm = name;
      p.grid_value = res.grid[i];
      p.split = split.name;
      p.accuracy = metrics::Accuracy(ps);
      p.violation = metrics::Violation(spec.fairness, ps);
      res.points.push_back(std::move(p));
    }
    res.models.push_back(std::move(*job.model));
  }
  return res;
}

}  // namespace fairpost::evalsuite
