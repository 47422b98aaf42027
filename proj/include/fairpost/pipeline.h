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


// Stage orchestration behind the command-line tool. Every stage reads and
// writes files under the output directory and records a content hash of
// its inputs, so an unchanged rerun is a no-op.

#ifndef FAIRPOST_PIPELINE_H_
#define FAIRPOST_PIPELINE_H_

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fairpost/calibrator.h"
#include "fairpost/common.h"
#include "fairpost/datahub.h"
#include "fairpost/evalsuite.h"
#include "fairpost/gateway.h"
#include "fairpost/metrics.h"
#include "json.hpp"

namespace fairpost::pipeline {

struct DatasetConfig {
  std::string name = "synthetic";  // used for the tabulated cutoff lookup
  // Exactly one of the synthetic spec or a CSV source is set.
  std::optional<datahub::SyntheticSpec> synthetic;
  std::string csv_path;
  std::string schema_path;
  std::string mapping_path;
  datahub::DatasetSchema schema;  // loaded from schema_path
  // Zero sizes mean 60/20/20 of the loaded rows.
  datahub::SplitSizes sizes;
};

struct AlgorithmConfig {
  evalsuite::Algorithm algorithm = evalsuite::Algorithm::kLinearPost;
  std::optional<std::vector<double>> grid;
};

struct RunConfig {
  std::string base_dir;  // relative paths resolve here
  std::string out_dir = "out";
  std::vector<uint64_t> seeds = {0};
  DatasetConfig dataset;
  nlohmann::json elicitation = nlohmann::json::object();
  std::string backend = "oracle";  // "oracle" or "openai"
  // Oracle noise; unset falls back to the synthetic spec's noise scale.
  std::optional<double> oracle_noise;
  uint64_t oracle_seed = 0;
  gateway::GatewayConfig gateway;
  calibrator::Target calibration_target = calibrator::Target::kJoint;
  LogisticOptions calibration;
  metrics::FairnessSpec fairness;
  std::vector<AlgorithmConfig> algorithms;
  fairalg::LinearPostOptions linearpost;
  fairalg::MinDiffOptions mindiff;
  fairalg::ReductionsOptions reductions;
  int jobs = 1;
  double gamma = 1.0;
  std::optional<double> cutoff;  // unset: tabulated or data-driven
  int levels = 5;
  nlohmann::json raw;  // the parsed file, echoed into the report

  int num_classes() const;
  int num_groups() const;
  bool overlapping() const;
  // Checks files exist and that the strategy fits the fairness spec.
  void Validate() const;
  static RunConfig FromJson(const nlohmann::json& j,
                            const std::string& base_dir);
};

RunConfig LoadConfig(const std::string& path);

// Test hook; replaces the backend the elicit stage would construct.
using BackendFactory =
    std::function<std::unique_ptr<gateway::Backend>(const RunConfig&)>;

struct StageOutcome {
  std::string stage;
  bool skipped = false;  // inputs unchanged since the last run
  nlohmann::json summary = nlohmann::json::object();
};

class Pipeline {
 public:
  explicit Pipeline(RunConfig config, Diagnostics* diag = nullptr);

  StageOutcome Prepare();
  StageOutcome Elicit();
  StageOutcome Featurize();
  StageOutcome Calibrate();
  StageOutcome Sweep();
  StageOutcome Report();
  std::vector<StageOutcome> RunAll();

  void set_backend_factory(BackendFactory f) { backend_factory_ = std::move(f); }
  // Reruns stages even when their stamps match.
  void set_force(bool force) { force_ = force; }

  const RunConfig& config() const { return config_; }
  std::string Path(const std::string& relative) const;
  std::string SeedPath(uint64_t seed, const std::string& file) const;

 private:
  // Hash of the stage name, a config fragment and the listed input files.
  std::string StageHash(const std::string& stage, const nlohmann::json& params,
                        const std::vector<std::string>& inputs) const;
  bool UpToDate(const std::string& stage, const std::string& hash,
                const std::vector<std::string>& outputs) const;
  void Stamp(const std::string& stage, const std::string& hash) const;
  std::unique_ptr<gateway::Backend> MakeBackend() const;

  RunConfig config_;
  Diagnostics* diag_;
  BackendFactory backend_factory_;
  bool force_ = false;
};

}  // namespace fairpost::pipeline

#endif  // FAIRPOST_PIPELINE_H_
