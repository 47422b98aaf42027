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


// fairpost: prepare, elicit, featurize, calibrate, sweep and report stages
// driven by a JSON run configuration.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "fairpost/common.h"
#include "fairpost/pipeline.h"
#include "json.hpp"

namespace {

namespace fs = std::filesystem;
using fairpost::pipeline::Pipeline;
using fairpost::pipeline::StageOutcome;
using nlohmann::json;

void Print(const StageOutcome& s) {
  json line = {{"stage", s.stage}, {"skipped", s.skipped}, {"summary", s.summary}};
  std::cout << line.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fair classification from elicited language-model logits."};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  std::string config_path;
  std::optional<uint64_t> seed;
  std::string out_dir;
  bool force = false;
  app.add_option("--config", config_path, "Run configuration (JSON)")->required();
  app.add_option("--seed", seed, "Run with this single seed");
  app.add_option("--out", out_dir, "Output directory");
  app.add_flag("--force", force, "Rerun stages whose inputs are unchanged");

  const char* kStages[] = {"prepare", "elicit", "featurize", "calibrate",
                           "sweep", "report", "run"};
  for (const char* name : kStages) app.add_subcommand(name);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : fairpost::ExitCodeFor(fairpost::ErrorKind::kConfig);
  }
  const std::string stage = app.get_subcommands().front()->get_name();

  fairpost::Diagnostics diag;
  int rc = 0;
  try {
    if (!fs::is_regular_file(config_path))
      throw fairpost::ConfigError("config not found: " + config_path);
    json raw;
    try {
      raw = json::parse(fairpost::ReadFile(config_path));
    } catch (const json::exception& e) {
      throw fairpost::ConfigError(config_path + ": " + e.what());
    }
    if (!out_dir.empty()) raw["out_dir"] = fs::absolute(out_dir).string();
    if (seed) {
      raw.erase("seeds");
      raw["seed"] = *seed;
    }
    Pipeline p(fairpost::pipeline::RunConfig::FromJson(
                   raw, fs::path(config_path).parent_path().string()),
               &diag);
    p.set_force(force);
    if (stage == "prepare") Print(p.Prepare());
    if (stage == "elicit") Print(p.Elicit());
    if (stage == "featurize") Print(p.Featurize());
    if (stage == "calibrate") Print(p.Calibrate());
    if (stage == "sweep") Print(p.Sweep());
    if (stage == "report") Print(p.Report());
    if (stage == "run")
      for (const StageOutcome& s : p.RunAll()) Print(s);
  } catch (const fairpost::Error& e) {
    std::cerr << "fairpost: " << fairpost::ErrorKindName(e.kind())
              << " error: " << e.what() << "\n";
    rc = fairpost::ExitCodeFor(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "fairpost: " << e.what() << "\n";
    rc = 1;
  }
  for (const std::string& w : diag.warnings) std::cerr << "warning: " << w << "\n";
  return rc;
}
