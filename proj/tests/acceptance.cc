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


// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 when
// any criterion fails. The oracles here are written independently of the
// library code they check.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include "fairpost/evalsuite.h"
#include "fairpost/fairalg.h"
#include "fairpost/featurizer.h"
#include "fairpost/gateway.h"
#include "fairpost/metrics.h"
#include "fairpost/pipeline.h"
#include "httplib.h"
#include "json.hpp"

namespace {

using namespace fairpost;
using nlohmann::json;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = true;
  std::string detail;

  void Require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail = what;
      pass = false;
    }
  }
};

std::string Fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ----------------------------------------------------------------- oracles

std::vector<double> Probs(const std::vector<double>& z) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : z) m = std::max(m, x);
  std::vector<double> p(z.size());
  double s = 0.0;
  for (size_t i = 0; i < z.size(); ++i) s += (p[i] = std::exp(z[i] - m));
  for (double& x : p) x /= s;
  return p;
}

std::vector<double> Randn(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> d(0.0, 3.0);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

double MaxDiff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Cell enumeration over explicit event membership.
struct MetricsOracle {
  const metrics::PredictionSet& p;

  std::vector<uint32_t> Events() const {
    std::vector<uint32_t> e;
    if (p.overlapping) {
      for (uint32_t m = 1; m < (1u << p.num_groups); ++m) e.push_back(m);
    } else {
      for (int g = 0; g < p.num_groups; ++g) e.push_back(g);
    }
    return e;
  }
  bool Member(int i, uint32_t e) const {
    return p.overlapping ? (p.a[i].value & e) == e : p.a[i].index() == static_cast<int>(e);
  }
  // (count, rate of class k) per event among examples with y == cond.
  std::vector<std::pair<int, double>> Cells(int cond, int k) const {
    std::vector<std::pair<int, double>> out;
    for (uint32_t e : Events()) {
      int c = 0;
      double s = 0.0;
      for (int i = 0; i < p.size(); ++i)
        if (Member(i, e) && (cond < 0 || p.y[i] == cond)) {
          ++c;
          s += p.dist(i, k);
        }
      if (c > 0) out.push_back({c, s / c});
    }
    return out;
  }
  double Gap(int cond, int k) const {
    double v = 0.0;
    for (auto [ca, ra] : Cells(cond, k))
      for (auto [cb, rb] : Cells(cond, k)) v = std::max(v, ra - rb);
    return v;
  }
  double Sp() const {
    double v = 0.0;
    for (int k = 0; k < p.num_classes(); ++k) v = std::max(v, Gap(-1, k));
    return v;
  }
  double Eo() const {
    double v = 0.0;
    for (int j = 0; j < p.num_classes(); ++j)
      for (int k = 0; k < p.num_classes(); ++k) v = std::max(v, Gap(j, k));
    return v;
  }
  double TprMc() const {
    double v = 0.0;
    for (int k = 0; k < p.num_classes(); ++k) v = std::max(v, Gap(k, k));
    return v;
  }
  double Wfpr() const {
    const auto cells = Cells(0, 1);
    double mass = 0.0, bar = 0.0;
    for (auto [c, r] : cells) mass += static_cast<double>(c) / p.size();
    if (mass == 0.0) return 0.0;
    for (auto [c, r] : cells) bar += (static_cast<double>(c) / p.size()) * r;
    bar /= mass;
    double v = 0.0;
    for (auto [c, r] : cells) v += (static_cast<double>(c) / p.size()) * std::abs(r - bar);
    return v;
  }
};

metrics::PredictionSet RandomFixture(std::mt19937_64& rng, int k, int groups,
                                     bool overlapping, bool hard) {
  const int n = 2 + rng() % 49;
  metrics::PredictionSet p;
  p.dist.resize(n, k);
  p.num_groups = groups;
  p.overlapping = overlapping;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int c = 0; c < k; ++c) s += (p.dist(i, c) = u(rng) + 1e-3);
    p.dist.row(i) /= s;
    if (hard) {
      Eigen::Index arg;
      p.dist.row(i).maxCoeff(&arg);
      p.dist.row(i).setZero();
      p.dist(i, arg) = 1.0;
    }
    p.y.push_back(rng() % k);
    p.a.push_back(overlapping ? GroupLabel::Mask(rng() % (1u << groups))
                              : GroupLabel::Disjoint(rng() % groups));
  }
  return p;
}

double Quadrature(const evalsuite::TradeoffCurve& t, const evalsuite::AutcConfig& c) {
  const double h = 1e-6;
  const long steps = static_cast<long>(std::ceil(c.cutoff / h));
  const double dx = c.cutoff / steps;
  double num = 0.0, den = 0.0;
  for (long i = 0; i < steps; ++i) {
    const double u = (i + 0.5) * dx;
    const double w = std::pow(c.cutoff - u, c.gamma);
    num += w * std::max(0.0, t(u) - c.base_rate);
    den += w * (1.0 - c.base_rate);
  }
  return num / den;
}

evalsuite::TradeoffPoint Pt(double acc, double vio, double grid = 0.0, uint64_t seed = 0,
                            const std::string& split = "val") {
  evalsuite::TradeoffPoint p;
  p.accuracy = acc;
  p.violation = vio;
  p.grid_value = grid;
  p.seed = seed;
  p.split = split;
  p.algorithm = "alg";
  return p;
}

std::vector<evalsuite::TradeoffPoint> BruteForcePareto(
    const std::vector<evalsuite::TradeoffPoint>& pts) {
  std::vector<evalsuite::TradeoffPoint> out;
  for (size_t i = 0; i < pts.size(); ++i) {
    bool dominated = false;
    for (size_t j = 0; j < pts.size() && !dominated; ++j)
      dominated = pts[j].accuracy >= pts[i].accuracy && pts[j].violation <= pts[i].violation &&
                  (pts[j].accuracy > pts[i].accuracy || pts[j].violation < pts[i].violation);
    if (!dominated) out.push_back(pts[i]);
  }
  return out;
}

std::set<std::pair<double, double>> Coordinates(const std::vector<evalsuite::TradeoffPoint>& p) {
  std::set<std::pair<double, double>> s;
  for (const auto& x : p) s.insert({x.accuracy, x.violation});
  return s;
}

// Exact-posterior training set for a synthetic spec.
fairalg::TrainingSet ExactSet(const datahub::SyntheticSpec& spec, int n,
                              const std::string& prefix) {
  const datahub::SyntheticData d = datahub::SynthGenerate(spec, n, prefix);
  fairalg::TrainingSet t;
  t.num_classes = spec.num_classes;
  t.num_groups = spec.num_groups;
  t.overlapping = spec.overlapping;
  t.x.resize(n, spec.num_cells());
  for (int i = 0; i < n; ++i) {
    const datahub::Example& e = d.examples[i];
    const std::vector<double> lj = d.posterior.LogJoint(datahub::FeatureVector(e, spec.dim));
    for (int c = 0; c < spec.num_cells(); ++c) t.x(i, c) = std::exp(lj[c]);
    t.y.push_back(e.y);
    t.a.push_back(e.a);
  }
  return t;
}

metrics::PredictionSet Predictions(const fairalg::TrainingSet& t, Eigen::MatrixXd dist) {
  metrics::PredictionSet p;
  p.dist = std::move(dist);
  p.y = t.y;
  p.a = t.a;
  p.num_groups = t.num_groups;
  p.overlapping = t.overlapping;
  return p;
}

datahub::SyntheticSpec BiasedSpec(uint64_t seed) {
  datahub::SyntheticSpec s;
  s.dim = 2;
  s.weights = {0.325, 0.175, 0.175, 0.325};
  s.means = {{0.0, 0.0}, {1.5, 0.0}, {0.0, 1.5}, {1.5, 1.5}};
  s.seed = seed;
  return s;
}

json PipelineConfig(const std::string& out, const std::string& strategy,
                    const std::vector<std::string>& algorithms,
                    const std::vector<uint64_t>& seeds) {
  return {{"out_dir", out},
          {"seeds", seeds},
          {"dataset",
           {{"name", "synthetic"},
            {"synthetic", BiasedSpec(7).ToJson()},
            {"sizes", {{"train", 2000}, {"val", 2000}, {"test", 5000}}}}},
          {"elicitation", {{"strategy", strategy}}},
          {"gateway", {{"backend", "oracle"}, {"noise_scale", 0.5}, {"oracle_seed", 11}}},
          {"calibration", {{"target", "joint"}}},
          {"fairness", {{"criterion", "SP"}}},
          {"algorithms", algorithms},
          {"mindiff", {{"epochs", 100}}},
          {"autc", {{"gamma", 1.0}, {"cutoff", 0.3}}}};
}

std::string TempDir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() /
                     ("fairpost_acceptance_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

// ---------------------------------------------------------------- criteria

Outcome Featurization() {
  Outcome o;
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const int g = 1 + rng() % 5, k = 1 + rng() % 5;
    const std::vector<double> q_a = Randn(rng, g), q_y = Randn(rng, k);
    const std::vector<double> pa = Probs(q_a), py = Probs(q_y);
    std::vector<double> want(g * k);
    for (int a = 0; a < g; ++a)
      for (int c = 0; c < k; ++c) want[a * k + c] = pa[a] * py[c];
    worst = std::max(worst, MaxDiff(Probs(featurizer::ComposeCondIndep(q_a, q_y).q), want));
  }
  for (int t = 0; t < 1000; ++t) {
    const int g = 1 + rng() % 5, k = 1 + rng() % 5;
    const std::vector<double> q_y = Randn(rng, k), py = Probs(q_y);
    std::vector<std::vector<double>> cond;
    std::vector<double> want(g * k);
    for (int c = 0; c < k; ++c) {
      cond.push_back(Randn(rng, g));
      const std::vector<double> pa = Probs(cond.back());
      for (int a = 0; a < g; ++a) want[a * k + c] = py[c] * pa[a];
    }
    worst = std::max(worst, MaxDiff(Probs(featurizer::ComposeDecomposed(q_y, cond).q), want));
  }
  for (int t = 0; t < 1000; ++t) {
    const int g = 1 + rng() % 5, k = 1 + rng() % 5;
    const std::vector<double> q_a = Randn(rng, g), pa = Probs(q_a);
    std::vector<std::vector<double>> cond;
    std::vector<double> want(g * k);
    for (int a = 0; a < g; ++a) {
      cond.push_back(Randn(rng, k));
      const std::vector<double> py = Probs(cond.back());
      for (int c = 0; c < k; ++c) want[a * k + c] = pa[a] * py[c];
    }
    worst = std::max(worst,
                     MaxDiff(Probs(featurizer::ComposeDecomposedSwapped(q_a, cond).q), want));
  }
  // Overlapping groups: product over indicators for every membership
  // subset, enumerated explicitly.
  for (int t = 0; t < 1000; ++t) {
    const int g = 1 + rng() % 5, k = 1 + rng() % 5;
    const std::vector<double> q_y = Randn(rng, k), py = Probs(q_y);
    std::vector<std::array<double, 2>> ind(g);
    for (auto& pr : ind) {
      const std::vector<double> v = Randn(rng, 2);
      pr = {v[0], v[1]};
    }
    std::vector<double> want;
    for (int mask = 0; mask < (1 << g); ++mask) {
      double pm = 1.0;
      for (int i = 0; i < g; ++i) pm *= Probs({ind[i][0], ind[i][1]})[(mask >> i) & 1];
      for (int c = 0; c < k; ++c) want.push_back(pm * py[c]);
    }
    const std::vector<double> got = Probs(featurizer::ComposeOverlapping(q_y, ind).q);
    worst = std::max(worst, MaxDiff(got, want));
    if (g <= 3) {
      // Subset events: Pr(all of I) equals the sum over supersets.
      for (int sub = 1; sub < (1 << g); ++sub) {
        double lib = 0.0, direct = 1.0;
        for (int mask = 0; mask < (1 << g); ++mask)
          if ((mask & sub) == sub)
            for (int c = 0; c < k; ++c) lib += got[mask * k + c];
        for (int i = 0; i < g; ++i)
          if ((sub >> i) & 1) direct *= Probs({ind[i][0], ind[i][1]})[1];
        worst = std::max(worst, std::abs(lib - direct));
      }
    }
  }
  o.Require(worst <= 1e-12, "identity error " + Fmt("%.3g", worst));
  o.detail = o.pass ? "max error " + Fmt("%.2g", worst) : o.detail;
  return o;
}

Outcome MetricsEquivalence() {
  Outcome o;
  std::mt19937_64 rng(202);
  double worst = 0.0;
  auto check = [&](double lib, double oracle, const char* name) {
    const double d = std::abs(lib - oracle);
    worst = std::max(worst, d);
    if (d != 0.0) o.Require(false, std::string(name) + " differs by " + Fmt("%.3g", d));
  };
  for (int trial = 0; trial < 200; ++trial) {
    const bool overlapping = trial % 4 == 3;
    const int k = overlapping || trial % 2 == 0 ? 2 : 3 + trial % 3;
    const int groups = overlapping ? 1 + trial % 3 : 2 + trial % 4;
    const metrics::PredictionSet p = RandomFixture(rng, k, groups, overlapping, trial % 3 == 0);
    const MetricsOracle m{p};
    check(metrics::VSp(p), m.Sp(), "v_sp");
    check(metrics::VEo(p), m.Eo(), "v_eo");
    check(metrics::VTprMulticlass(p), m.TprMc(), "v_tpr_multiclass");
    if (k == 2) {
      check(metrics::VTpr(p), m.Gap(1, 1), "v_tpr");
      check(metrics::VFpr(p), m.Gap(0, 1), "v_fpr");
    }
    if (overlapping) {
      check(metrics::VFprOverlapping(p), m.Gap(0, 1), "v_fpr_overlapping");
      check(metrics::VFprWeighted(p), m.Wfpr(), "v_fpr_weighted");
    }
    // Constant classifiers.
    for (int c = 0; c < k; ++c) {
      metrics::PredictionSet q = p;
      q.dist.setZero();
      q.dist.col(c).setOnes();
      double v = metrics::VSp(q) + metrics::VEo(q) + metrics::VTprMulticlass(q);
      if (k == 2) v += metrics::VTpr(q) + metrics::VFpr(q);
      if (overlapping) v += metrics::VFprOverlapping(q) + metrics::VFprWeighted(q);
      o.Require(v == 0.0, "constant classifier has nonzero violation");
    }
  }
  if (o.pass) o.detail = "200 fixtures, max |lib - oracle| " + Fmt("%.2g", worst);
  return o;
}

Outcome AutcCorrectness() {
  using evalsuite::AutcConfig;
  using evalsuite::TradeoffCurve;
  Outcome o;
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<evalsuite::TradeoffPoint> pts;
    for (int i = 0; i < 1 + trial % 8; ++i) pts.push_back(Pt(0.4 + 0.6 * u(rng), 0.25 * u(rng)));
    const AutcConfig c{std::round(u(rng) * 3), 0.02 + 0.2 * u(rng), 0.35 + 0.3 * u(rng)};
    const TradeoffCurve t = evalsuite::BuildCurve(pts, c.base_rate);
    worst = std::max(worst, std::abs(evalsuite::Autc(t, c) - Quadrature(t, c)));
  }
  o.Require(worst <= 1e-4, "quadrature gap " + Fmt("%.3g", worst));
  for (double b : {0.3, 0.5, 0.7}) {
    const AutcConfig c{1.0, 0.1, b};
    o.Require(std::abs(evalsuite::Autc(evalsuite::BuildCurve({Pt(1.0, 0.0)}, b), c) - 1.0) < 1e-12,
              "T = 1 does not give 1");
    o.Require(evalsuite::Autc(evalsuite::BuildCurve({}, b), c) == 0.0, "T = b does not give 0");
  }
  const double hand =
      evalsuite::Autc(evalsuite::BuildCurve({Pt(0.9, 0.0), Pt(1.0, 0.05)}, 0.5), {1.0, 0.1, 0.5});
  o.Require(std::abs(hand - 0.9167) <= 1e-4, "hand fixture gives " + Fmt("%.6f", hand));
  if (o.pass)
    o.detail = "hand fixture " + Fmt("%.5f", hand) + ", max quadrature gap " + Fmt("%.2g", worst);
  return o;
}

fairalg::MinDiffGradient FiniteDifferences(fairalg::MinDiffModel m, const Eigen::MatrixXd& x,
                                           const std::vector<int>& y,
                                           const std::vector<GroupLabel>& a, int groups,
                                           bool overlapping) {
  fairalg::MinDiffGradient g{m.w1, m.w2, m.b1, m.b2};
  const double h = 1e-6;
  auto diff = [&](double* param, double* out) {
    const double keep = *param;
    *param = keep + h;
    const double fp = fairalg::MinDiffObjective(m, x, y, a, groups, overlapping);
    *param = keep - h;
    const double fm = fairalg::MinDiffObjective(m, x, y, a, groups, overlapping);
    *param = keep;
    *out = (fp - fm) / (2 * h);
  };
  for (Eigen::Index i = 0; i < m.w1.size(); ++i) diff(m.w1.data() + i, g.w1.data() + i);
  for (Eigen::Index i = 0; i < m.w2.size(); ++i) diff(m.w2.data() + i, g.w2.data() + i);
  for (Eigen::Index i = 0; i < m.b1.size(); ++i) diff(m.b1.data() + i, g.b1.data() + i);
  for (Eigen::Index i = 0; i < m.b2.size(); ++i) diff(m.b2.data() + i, g.b2.data() + i);
  return g;
}

Outcome MinDiffGradient() {
  using metrics::Criterion;
  Outcome o;
  std::mt19937_64 rng(404);
  std::normal_distribution<double> d(0.0, 1.0);
  struct Case {
    Criterion c;
    int k, groups;
    bool overlapping;
  };
  const std::vector<Case> cases = {
      {Criterion::kSP, 2, 2, false},  {Criterion::kSP, 3, 4, false},
      {Criterion::kTPR, 2, 2, false}, {Criterion::kFPR, 2, 3, false},
      {Criterion::kEO, 2, 2, false},  {Criterion::kEO, 3, 3, false},
      {Criterion::kTPRMulticlass, 3, 2, false},
      {Criterion::kWFPR, 2, 2, true}, {Criterion::kFPR, 2, 2, true},
      {Criterion::kSP, 2, 3, true},   {Criterion::kEO, 2, 2, true},
  };
  double worst = 0.0;
  for (const Case& cs : cases) {
    for (int trial = 0; trial < 5; ++trial) {
      fairalg::MinDiffModel m = fairalg::MinDiffInit(6, cs.k, 4, 500 + trial);
      m.w1 *= 3.0;
      m.w2 *= 3.0;
      m.spec.criterion = cs.c;
      m.lambda = 0.5 + trial;
      m.sigma = trial % 2 == 0 ? 0.1 : 0.7;
      Eigen::MatrixXd x(8, 6);
      for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = d(rng);
      std::vector<int> y(8);
      std::vector<GroupLabel> a(8);
      for (int i = 0; i < 8; ++i) {
        y[i] = i < 4 ? 0 : (cs.k == 2 || i < 6 ? 1 : 2);
        a[i] = cs.overlapping ? GroupLabel::Mask(1 + i % ((1 << cs.groups) - 1))
                              : GroupLabel::Disjoint(i % 2);
      }
      if (fairalg::RegularizerTerms(m.spec, y, a, cs.groups, cs.overlapping, cs.k).empty()) {
        o.Require(false, std::string("no regularizer terms for ") +
                             metrics::CriterionName(cs.c));
        continue;
      }
      fairalg::MinDiffGradient g;
      fairalg::MinDiffObjective(m, x, y, a, cs.groups, cs.overlapping, &g);
      const fairalg::MinDiffGradient fd = FiniteDifferences(m, x, y, a, cs.groups, cs.overlapping);
      const double num = (fd.w1 - g.w1).squaredNorm() + (fd.w2 - g.w2).squaredNorm() +
                         (fd.b1 - g.b1).squaredNorm() + (fd.b2 - g.b2).squaredNorm();
      const double den = fd.w1.squaredNorm() + fd.w2.squaredNorm() + fd.b1.squaredNorm() +
                         fd.b2.squaredNorm();
      const double rel = std::sqrt(num / std::max(den, 1e-30));
      worst = std::max(worst, rel);
      o.Require(rel <= 1e-4, std::string(metrics::CriterionName(cs.c)) + " relative error " +
                                 Fmt("%.3g", rel));
    }
  }
  if (o.pass) o.detail = "55 checks, max relative error " + Fmt("%.2g", worst);
  return o;
}

Outcome LinearPostContract() {
  using metrics::Criterion;
  Outcome o;
  const fairalg::TrainingSet train = ExactSet(BiasedSpec(505), 2000, "tr");
  const fairalg::TrainingSet test = ExactSet(BiasedSpec(506), 5000, "te");
  const featurizer::FeatureLayout layout{2, 2, false, featurizer::FeatureKind::kJoint};
  double slack = -1.0;
  for (Criterion c : {Criterion::kSP, Criterion::kTPR, Criterion::kEO}) {
    metrics::FairnessSpec spec;
    spec.criterion = c;
    double prev = std::numeric_limits<double>::infinity();
    for (double alpha : {0.2, 0.1, 0.05, 0.01}) {
      const fairalg::LinearPostResult r =
          fairalg::LinearPostFit(train.x, layout, spec, alpha);
      const std::string tag = std::string(metrics::CriterionName(c)) + " alpha " +
                              Fmt("%.2f", alpha);
      const double tv = fairalg::LpViolation(r.inputs, layout, spec, r.assignment);
      o.Require(tv <= alpha + 1e-6, tag + ": training violation " + Fmt("%.4g", tv));
      // Expected training accuracy of the LP assignment.
      const double acc = r.rule.lp_objective;
      o.Require(acc <= prev + 1e-12, tag + ": training accuracy increased");
      prev = acc;
      const double hv =
          metrics::Violation(spec, Predictions(test, fairalg::PredictDistribution(r.rule, test.x)));
      o.Require(hv <= alpha + 0.04, tag + ": held-out violation " + Fmt("%.4g", hv));
      slack = std::max(slack, hv - alpha);
    }
  }
  if (o.pass) o.detail = "largest held-out excess over alpha " + Fmt("%.4f", slack);
  return o;
}

struct CurveStats {
  double autc = 0.0;
  double tight_accuracy = 0.0;
  double tight_violation = 0.0;
};

Outcome EndToEnd() {
  Outcome o;
  const std::string dir = TempDir("e2e");
  pipeline::Pipeline p(pipeline::RunConfig::FromJson(
      PipelineConfig(dir, "decomposed", {"linearpost", "mindiff", "reductions", "no_mitigation"},
                     {0}),
      ""));
  p.RunAll();
  const json report = json::parse(ReadFile(p.Path("report.json")));
  const double b = report["base_rates"]["0"].get<double>();
  std::map<std::string, double> autc;
  for (const json& a : report["algorithms"]) autc[a["algorithm"]] = a["autc_mean"];
  const auto points = evalsuite::ReadPointsCsv(p.Path("points.csv"));
  auto test_point = [&](const std::string& alg, bool largest) {
    const evalsuite::TradeoffPoint* best = nullptr;
    for (const auto& t : points) {
      if (t.algorithm != alg || t.split != "test") continue;
      if (best == nullptr || (largest ? t.grid_value > best->grid_value
                                      : t.grid_value < best->grid_value))
        best = &t;
    }
    return best;
  };
  const auto* plug = test_point("no_mitigation", true);
  o.Require(plug != nullptr && plug->violation >= 0.15,
            "plug-in disparity below 0.15");
  std::string detail = "b " + Fmt("%.3f", b) + ", plug-in v " +
                       Fmt("%.3f", plug ? plug->violation : -1.0) + ", AUTC no_mitigation " +
                       Fmt("%.3f", autc["no_mitigation"]);
  // Tightest setting: smallest tolerance, or the strongest MinDiff penalty.
  for (const auto& [alg, largest] :
       std::vector<std::pair<std::string, bool>>{{"linearpost", false},
                                                 {"mindiff", true},
                                                 {"reductions", false}}) {
    const auto* t = test_point(alg, largest);
    if (t == nullptr) {
      o.Require(false, alg + ": no test points");
      continue;
    }
    o.Require(t->violation < 0.05, alg + ": test v_sp " + Fmt("%.4f", t->violation));
    o.Require(t->accuracy > b + 0.05, alg + ": test accuracy " + Fmt("%.4f", t->accuracy));
    o.Require(autc[alg] > autc["no_mitigation"], alg + ": AUTC not above no_mitigation");
    detail += "; " + alg + " (acc " + Fmt("%.3f", t->accuracy) + ", v " +
              Fmt("%.3f", t->violation) + ", AUTC " + Fmt("%.3f", autc[alg]) + ")";
  }
  if (o.pass) o.detail = detail;
  fs::remove_all(dir);
  return o;
}

Outcome YOnlyAblation() {
  Outcome o;
  std::map<std::string, double> autc;
  for (const char* strategy : {"decomposed", "y_only"}) {
    const std::string dir = TempDir(strategy);
    pipeline::Pipeline p(pipeline::RunConfig::FromJson(
        PipelineConfig(dir, strategy, {"linearpost"}, {0, 1, 2, 3, 4}), ""));
    p.RunAll();
    const json report = json::parse(ReadFile(p.Path("report.json")));
    autc[strategy] = report["algorithms"][0]["autc_mean"].get<double>();
    fs::remove_all(dir);
  }
  o.Require(autc["decomposed"] > autc["y_only"], "joint AUTC not above y_only");
  o.detail = "mean AUTC joint " + Fmt("%.4f", autc["decomposed"]) + " vs y_only " +
             Fmt("%.4f", autc["y_only"]);
  return o;
}

Outcome SweepBookkeeping() {
  Outcome o;
  const fairalg::TrainingSet train = ExactSet(BiasedSpec(808), 300, "sw");
  const featurizer::FeatureLayout layout{2, 2, false, featurizer::FeatureKind::kJoint};
  const std::vector<evalsuite::EvalSplit> splits = {{"val", train.x, train.y, train.a},
                                                    {"test", train.x, train.y, train.a}};
  evalsuite::SweepSpec spec;
  for (uint64_t seed : {0, 1}) {
    spec.algorithm = evalsuite::Algorithm::kLinearPost;
    const auto lp = evalsuite::RunSweep(spec, seed, train, layout, splits);
    spec.algorithm = evalsuite::Algorithm::kMinDiff;
    spec.mindiff.hidden = 8;
    spec.mindiff.epochs = 1;
    spec.mindiff.batch_size = 64;
    const auto md = evalsuite::RunSweep(spec, seed, train, layout, splits);
    for (const char* split : {"val", "test"}) {
      auto count = [&](const evalsuite::SweepResult& r) {
        return std::count_if(r.points.begin(), r.points.end(), [&](const auto& t) {
          return t.seed == seed && t.split == split;
        });
      };
      o.Require(count(lp) == 15, "LinearPost emitted " + std::to_string(count(lp)) + " points");
      o.Require(count(md) == 17, "MinDiff emitted " + std::to_string(count(md)) + " points");
    }
  }
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<evalsuite::TradeoffPoint> pts;
    for (int i = 0; i < 1 + trial % 60; ++i)
      pts.push_back(Pt(std::round(u(rng) * 20) / 20, std::round(u(rng) * 20) / 20));
    o.Require(Coordinates(evalsuite::ParetoFilter(pts)) == Coordinates(BruteForcePareto(pts)),
              "Pareto filter disagrees with the quadratic oracle");
  }
  // Validation (0.8, 0.0), (0.9, 0.2) and a dominated point; levels 0..0.2.
  const std::vector<evalsuite::TradeoffPoint> two = {
      Pt(0.8, 0.0, 1, 7, "val"),  Pt(0.78, 0.01, 1, 7, "test"),
      Pt(0.9, 0.2, 2, 7, "val"),  Pt(0.86, 0.18, 2, 7, "test"),
      Pt(0.7, 0.3, 3, 7, "val"),  Pt(0.95, 0.3, 3, 7, "test")};
  const evalsuite::CurveReport r = evalsuite::BuildReport("alg", two, {{7, 0.6}}, 1.0, 0.1);
  const double acc[] = {0.78, 0.80, 0.82, 0.84, 0.86};
  const double vio[] = {0.01, 0.0525, 0.095, 0.1375, 0.18};
  o.Require(r.seeds.size() == 1 && r.seeds[0].levels.size() == 5, "report shape");
  if (o.pass)
    for (int l = 0; l < 5; ++l) {
      o.Require(std::abs(r.seeds[0].levels[l] - 0.05 * l) < 1e-12, "level grid");
      o.Require(std::abs(r.seeds[0].test_accuracy[l] - acc[l]) < 1e-12, "interpolated accuracy");
      o.Require(std::abs(r.seeds[0].test_violation[l] - vio[l]) < 1e-12,
                "interpolated violation");
    }
  if (o.pass) o.detail = "15 and 17 points per seed; Pareto and five-level curve match";
  return o;
}

// Scripted chat-completions endpoint.
class FakeEndpoint {
 public:
  struct Reply {
    int status;
    std::string body;
  };
  explicit FakeEndpoint(std::vector<std::pair<std::string, double>> tokens)
      : tokens_(std::move(tokens)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                httplib::Response& res) {
      std::lock_guard<std::mutex> lock(mu_);
      prompts_.push_back(json::parse(req.body)["messages"][0]["content"]);
      const Reply r = calls_ < script_.size() ? script_[calls_] : Reply{200, Body()};
      ++calls_;
      res.status = r.status;
      res.set_content(r.body, "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeEndpoint() {
    server_.stop();
    thread_.join();
  }
  std::string url() const {
    return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
  }
  void Script(std::vector<Reply> s) { script_ = std::move(s); }
  std::vector<std::string> prompts() const {
    std::lock_guard<std::mutex> lock(mu_);
    return prompts_;
  }

 private:
  std::string Body() const {
    json alts = json::array();
    for (const auto& [t, v] : tokens_) alts.push_back({{"token", t}, {"logprob", v}});
    json content = {{"token", tokens_[0].first}, {"logprob", tokens_[0].second},
                    {"top_logprobs", alts}};
    return json{{"choices", {{{"index", 0},
                              {"message", {{"role", "assistant"}, {"content", "A"}}},
                              {"logprobs", {{"content", {content}}}}}}}}
        .dump();
  }

  std::vector<std::pair<std::string, double>> tokens_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  mutable std::mutex mu_;
  std::vector<Reply> script_;
  size_t calls_ = 0;
  std::vector<std::string> prompts_;
};

std::unique_ptr<gateway::Gateway> Connect(const FakeEndpoint& f, const std::string& cache,
                                          std::vector<double>* sleeps) {
  ::setenv("FAIRPOST_ACCEPTANCE_KEY", "sk-acceptance", 1);
  gateway::GatewayConfig c;
  c.endpoint = f.url();
  c.model = "scripted";
  c.max_in_flight = 2;
  c.retry_budget = 4;
  c.backoff_base_seconds = 0.25;
  c.backoff_factor = 2.0;
  c.timeout_seconds = 5.0;
  c.cache_path = cache;
  c.api_key_env = "FAIRPOST_ACCEPTANCE_KEY";
  auto g = std::make_unique<gateway::Gateway>(c, std::make_unique<gateway::OpenAIBackend>(c));
  g->set_sleeper([sleeps](double s) {
    if (sleeps != nullptr) sleeps->push_back(s);
  });
  return g;
}

Outcome GatewayBehavior() {
  Outcome o;
  const std::string dir = TempDir("gateway");
  std::vector<datahub::Example> rows;
  for (int i = 0; i < 10; ++i) {
    datahub::Example e;
    e.id = "row" + std::to_string(i);
    e.serialized = "Value: " + std::to_string(i);
    rows.push_back(e);
  }
  {
    // Top alternatives omit option C.
    FakeEndpoint f({{"A", -0.2}, {" B", -1.9}, {"D", -4.0}});
    const auto plan = promptkit::DefaultPlan(promptkit::Strategy::kYOnly, 3, 2);
    const auto r = Connect(f, "", nullptr)->Collect(plan, {rows[0]});
    o.Require(r.bundles.size() == 1 && (*r.bundles[0].q_y)[2] == -50.0 &&
                  (*r.bundles[0].q_y)[1] == -1.9,
              "missing option not filled with -50");
  }
  {
    FakeEndpoint f({{"A", -0.1}, {"B", -2.5}});
    const auto plan = promptkit::DefaultPlan(promptkit::Strategy::kCondIndep, 2, 2);
    const std::string cache = dir + "/cache.jsonl";
    Connect(f, cache, nullptr)->Collect(plan, {rows.begin(), rows.begin() + 4});
    auto gw = Connect(f, cache, nullptr);
    const auto r = gw->Collect(plan, rows);
    Connect(f, cache, nullptr)->Collect(plan, rows);
    const std::vector<std::string> prompts = f.prompts();
    const std::set<std::string> unique(prompts.begin(), prompts.end());
    o.Require(prompts.size() == 20 && unique.size() == 20,
              "resume issued " + std::to_string(prompts.size() - unique.size()) +
                  " duplicate request(s)");
    o.Require(r.bundles.size() == 10 && gw->stats().cache_hits.load() == 8,
              "resume did not use the cache");
  }
  {
    FakeEndpoint f({{"A", -0.1}, {"B", -2.5}});
    f.Script({{429, "{}"}, {429, "{}"}, {429, "{}"}});
    std::vector<double> sleeps;
    auto gw = Connect(f, "", &sleeps);
    const auto r = gw->Collect(promptkit::DefaultPlan(promptkit::Strategy::kYOnly, 2, 2),
                               {rows[0]});
    o.Require(r.report.ok() && gw->stats().retries.load() == 3 && f.prompts().size() == 4,
              "429s were not retried");
    o.Require(sleeps == std::vector<double>({0.25, 0.5, 1.0}), "backoff not exponential");
  }
  fs::remove_all(dir);
  if (o.pass) o.detail = "fill -50, zero duplicate requests, 3 retries with 0.25/0.5/1 s backoff";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_seconds;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "featurization identities", 5, Featurization},
      {2, "metrics oracle equivalence", 10, MetricsEquivalence},
      {3, "AUTC correctness", 30, AutcCorrectness},
      {4, "MinDiff gradient check", 60, MinDiffGradient},
      {5, "LinearPost fairness contract", 300, LinearPostContract},
      {6, "end-to-end mitigation", 900, EndToEnd},
      {7, "Y-only ablation direction", 900, YOnlyAblation},
      {8, "sweep bookkeeping", 60, SweepBookkeeping},
      {9, "gateway behavior", 30, GatewayBehavior},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > c.limit_seconds) {
      o.pass = false;
      o.detail += " (over the time limit)";
    }
    failed += !o.pass;
    std::printf("%s criterion %d: %s [%.1f s / %.0f s] %s\n", o.pass ? "PASS" : "FAIL", c.id,
                c.name, secs, c.limit_seconds, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
