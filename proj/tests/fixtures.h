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

// Shared synthetic fixtures for the algorithm tests.

#ifndef FAIRPOST_TESTS_FIXTURES_H_
#define FAIRPOST_TESTS_FIXTURES_H_

#include <cmath>
#include <string>

#include "fairpost/datahub.h"
#include "fairpost/fairalg.h"

namespace fairpost::testing {

// Two groups whose label priors differ (0.35 vs 0.65). x0 carries the
// label and x1 carries the group.
inline datahub::SyntheticSpec BiasedSpec(uint64_t seed, double sep = 1.5) {
  datahub::SyntheticSpec s;
  s.dim = 2;
  s.weights = {0.325, 0.175, 0.175, 0.325};
  s.means = {{0.0, 0.0}, {sep, 0.0}, {0.0, sep}, {sep, sep}};
  s.seed = seed;
  return s;
}

// Training rows whose features are the exact joint posterior.
inline fairalg::TrainingSet ExactSet(const datahub::SyntheticSpec& spec, int n,
                                     const std::string& prefix) {
  datahub::SyntheticData d = datahub::SynthGenerate(spec, n, prefix);
  fairalg::TrainingSet t;
  t.num_classes = spec.num_classes;
  t.num_groups = spec.num_groups;
  t.overlapping = spec.overlapping;
  t.x.resize(n, spec.num_cells());
  for (int i = 0; i < n; ++i) {
    const auto& e = d.examples[i];
    std::vector<double> lj = d.posterior.LogJoint(datahub::FeatureVector(e, spec.dim));
    for (int c = 0; c < spec.num_cells(); ++c) t.x(i, c) = std::exp(lj[c]);
    t.y.push_back(e.y);
    t.a.push_back(e.a);
  }
  return t;
}

inline featurizer::FeatureLayout JointLayout(const fairalg::TrainingSet& t) {
  return {t.num_classes, t.num_groups, t.overlapping,
          featurizer::FeatureKind::kJoint};
}

inline metrics::PredictionSet Predictions(const fairalg::TrainingSet& t,
                                          const Eigen::MatrixXd& dist) {
  metrics::PredictionSet p;
  p.dist = dist;
  p.y = t.y;
  p.a = t.a;
  p.num_groups = t.num_groups;
  p.overlapping = t.overlapping;
  return p;
}

}  // namespace fairpost::testing

#endif  // FAIRPOST_TESTS_FIXTURES_H_
