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


#include "fairpost/pipeline.h"

#include <filesystem>
#include <map>

#include "fairpost/bundle.h"
#include "fairpost/featurizer.h"
#include "fairpost/promptkit.h"

namespace fairpost::pipeline {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const char* const kSplits[] = {"train", "val", "test"};

std::string Resolve(const std::string& base, const std::string& p) {
  if (p.empty()) return p;
  fs::path path(p);
  if (path.is_relative() && !base.empty()) path = fs::path(base) / path;
  return path.string();
}

void RequireFile(const std::string& path, const std::string& what) {
  if (!fs::is_regular_file(path))
    throw ConfigError(what + " not found: " + path);
}

template <typename T>
void Read(const json& j, const char* key, T* out) {
  if (j.contains(key)) *out = j.at(key).get<T>();
}

evalsuite::Algorithm ParseAlgorithm(const json& j, AlgorithmConfig* a) {
  if (j.is_string()) return evalsuite::AlgorithmFromString(j.get<std::string>());
  a->algorithm = evalsuite::AlgorithmFromString(j.at("name").get<std::string>());
  if (j.contains("grid")) a->grid = j.at("grid").get<std::vector<double>>();
  return a->algorithm;
}

// Paths of template bodies and metadata named by the elicitation section.
std::vector<std::string> TemplateFiles(const json& elicitation,
                                       const std::string& base) {
  std::vector<std::string> out;
  if (!elicitation.contains("templates")) return out;
  for (const auto& [key, v] : elicitation.at("templates").items()) {
    if (!v.is_string()) continue;
    const std::string body = Resolve(base, v.get<std::string>());
    out.push_back(body);
    const std::string meta = fs::path(body).replace_extension(".json").string();
    if (fs::exists(meta)) out.push_back(meta);
  }
  return out;
}

struct LabeledSplit {
  std::vector<std::string> ids;
  std::vector<int> y;
  std::vector<GroupLabel> a;
};

LabeledSplit Labels(const std::string& path) {
  LabeledSplit s;
  for (const datahub::Example& e : datahub::ReadExamplesJsonl(path)) {
    s.ids.push_back(e.id);
    s.y.push_back(e.y);
    s.a.push_back(e.a);
  }
  return s;
}

// Rows of `features` in the order of `ids`; ids without a feature row are
// dropped from `labels` as well.
featurizer::FeatureSet Select(const featurizer::FeatureSet& features,
                              LabeledSplit* labels, const std::string& split,
                              Diagnostics* diag) {
  std::map<std::string, int> index;
  for (int i = 0; i < features.size(); ++i) index[features.ids[i]] = i;
  LabeledSplit kept;
  std::vector<int> rows;
  for (size_t i = 0; i < labels->ids.size(); ++i) {
    auto it = index.find(labels->ids[i]);
    if (it == index.end()) continue;
    rows.push_back(it->second);
    kept.ids.push_back(labels->ids[i]);
    kept.y.push_back(labels->y[i]);
    kept.a.push_back(labels->a[i]);
  }
  const size_t dropped = labels->ids.size() - kept.ids.size();
  if (dropped > 0)
    Warn(diag, split + ": " + std::to_string(dropped) +
                   " example(s) have no features and were left out");
  if (rows.empty()) throw DataError(split + ": no examples with features");
  featurizer::FeatureSet out;
  out.layout = features.layout;
  out.ids = kept.ids;
  out.rows.resize(rows.size(), features.rows.cols());
  for (size_t i = 0; i < rows.size(); ++i) out.rows.row(i) = features.rows.row(rows[i]);
  *labels = std::move(kept);
  return out;
}

}  // namespace

// ------------------------------------------------------------------ config

int RunConfig::num_classes() const {
  return dataset.synthetic ? dataset.synthetic->num_classes
                           : dataset.schema.num_classes();
}

int RunConfig::num_groups() const {
  return dataset.synthetic ? dataset.synthetic->num_groups
                           : dataset.schema.num_groups();
}

bool RunConfig::overlapping() const {
  return dataset.synthetic ? dataset.synthetic->overlapping
                           : dataset.schema.overlapping;
}

RunConfig RunConfig::FromJson(const json& j, const std::string& base_dir) {
  RunConfig c;
  c.base_dir = base_dir;
  c.raw = j;
  try {
    Read(j, "out_dir", &c.out_dir);
    c.out_dir = Resolve(base_dir, c.out_dir);
    if (j.contains("seeds")) {
      c.seeds = j.at("seeds").get<std::vector<uint64_t>>();
    } else if (j.contains("seed")) {
      c.seeds = {j.at("seed").get<uint64_t>()};
    }

    const json& d = j.at("dataset");
    Read(d, "name", &c.dataset.name);
    if (d.contains("synthetic")) {
      c.dataset.synthetic = datahub::SyntheticSpec::FromJson(d.at("synthetic"));
    } else {
      c.dataset.csv_path = Resolve(base_dir, d.at("csv").get<std::string>());
      c.dataset.schema_path = Resolve(base_dir, d.at("schema").get<std::string>());
      if (d.contains("mapping"))
        c.dataset.mapping_path = Resolve(base_dir, d.at("mapping").get<std::string>());
      RequireFile(c.dataset.schema_path, "schema");
      c.dataset.schema =
          datahub::DatasetSchema::FromJson(json::parse(ReadFile(c.dataset.schema_path)));
    }
    if (d.contains("sizes")) {
      const json& s = d.at("sizes");
      c.dataset.sizes = {s.at("train").get<size_t>(), s.at("val").get<size_t>(),
                         s.at("test").get<size_t>()};
    }

    if (j.contains("elicitation")) c.elicitation = j.at("elicitation");
    if (j.contains("gateway")) {
      const json& g = j.at("gateway");
      Read(g, "backend", &c.backend);
      if (g.contains("noise_scale")) c.oracle_noise = g.at("noise_scale").get<double>();
      Read(g, "oracle_seed", &c.oracle_seed);
      c.gateway = gateway::GatewayConfig::FromJson(g);
    }
    if (c.gateway.cache_path.empty()) {
      c.gateway.cache_path = (fs::path(c.out_dir) / "cache.jsonl").string();
    } else {
      c.gateway.cache_path = Resolve(base_dir, c.gateway.cache_path);
    }

    if (j.contains("calibration")) {
      const json& cal = j.at("calibration");
      const std::string target = cal.value("target", std::string("joint"));
      if (target == "joint") {
        c.calibration_target = calibrator::Target::kJoint;
      } else if (target == "label") {
        c.calibration_target = calibrator::Target::kLabel;
      } else {
        throw ConfigError("calibration.target must be joint or label, got '" +
                          target + "'");
      }
      Read(cal, "l2", &c.calibration.l2);
      Read(cal, "max_iterations", &c.calibration.max_iterations);
      Read(cal, "gradient_tolerance", &c.calibration.gradient_tolerance);
    }

    if (j.contains("fairness")) c.fairness = metrics::FairnessSpec::FromJson(j.at("fairness"));
    if (j.contains("algorithms")) {
      for (const json& a : j.at("algorithms")) {
        AlgorithmConfig ac;
        ac.algorithm = ParseAlgorithm(a, &ac);
        c.algorithms.push_back(std::move(ac));
      }
    } else {
      for (auto a : {evalsuite::Algorithm::kLinearPost, evalsuite::Algorithm::kNoMitigation})
        c.algorithms.push_back({a, std::nullopt});
    }
    if (j.contains("linearpost")) {
      const json& o = j.at("linearpost");
      Read(o, "epsilon", &c.linearpost.epsilon);
      Read(o, "max_rounds", &c.linearpost.max_rounds);
      Read(o, "min_event_mass", &c.linearpost.min_event_mass);
    }
    if (j.contains("mindiff")) {
      const json& o = j.at("mindiff");
      Read(o, "hidden", &c.mindiff.hidden);
      Read(o, "epochs", &c.mindiff.epochs);
      Read(o, "batch_size", &c.mindiff.batch_size);
      Read(o, "learning_rate", &c.mindiff.learning_rate);
      Read(o, "sigma", &c.mindiff.sigma);
    }
    if (j.contains("reductions")) {
      const json& o = j.at("reductions");
      Read(o, "bound", &c.reductions.bound);
      Read(o, "iterations", &c.reductions.iterations);
      Read(o, "eta", &c.reductions.eta);
    }
    Read(j, "jobs", &c.jobs);
    if (j.contains("autc")) {
      const json& a = j.at("autc");
      Read(a, "gamma", &c.gamma);
      Read(a, "levels", &c.levels);
      if (a.contains("cutoff") && !a.at("cutoff").is_null())
        c.cutoff = a.at("cutoff").get<double>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  c.Validate();
  return c;
}

void RunConfig::Validate() const {
  if (seeds.empty()) throw ConfigError("run config: no seeds");
  if (jobs < 1) throw ConfigError("run config: jobs must be >= 1");
  if (levels < 1) throw ConfigError("run config: autc.levels must be >= 1");
  if (!dataset.synthetic) {
    RequireFile(dataset.csv_path, "dataset csv");
    if (!dataset.mapping_path.empty()) RequireFile(dataset.mapping_path, "code mapping");
    dataset.schema.Validate();
  } else if (dataset.sizes.train + dataset.sizes.val + dataset.sizes.test == 0) {
    throw ConfigError("run config: a synthetic dataset needs dataset.sizes");
  }
  if (backend != "oracle" && backend != "openai")
    throw ConfigError("gateway.backend must be oracle or openai, got '" + backend + "'");
  if (backend == "oracle" && !dataset.synthetic)
    throw ConfigError("the oracle backend needs a synthetic dataset");
  if (algorithms.empty()) throw ConfigError("run config: no algorithms");

  const int k = num_classes(), g = num_groups();
  // Loads the templates, so missing files surface here.
  const promptkit::ElicitationPlan plan =
      promptkit::PlanFromJson(elicitation, base_dir, k, g);
  plan.Validate();
  using promptkit::Strategy;
  if (overlapping() && plan.strategy != Strategy::kPerGroupIndicator &&
      plan.strategy != Strategy::kYOnly)
    throw ConfigError(std::string("strategy ") + promptkit::StrategyName(plan.strategy) +
                      " cannot describe overlapping groups; use per_group_indicator");
  if (!overlapping() && plan.strategy == Strategy::kPerGroupIndicator)
    throw ConfigError("per_group_indicator needs overlapping group labels");
  metrics::CheckCompatible(fairness, k, overlapping());
  for (const AlgorithmConfig& a : algorithms)
    if (a.algorithm == evalsuite::Algorithm::kReductions && (k != 2 || overlapping()))
      throw ConfigError("reductions supports binary labels with disjoint groups only");
}

RunConfig LoadConfig(const std::string& path) {
  RequireFile(path, "config");
  json j;
  try {
    j = json::parse(ReadFile(path));
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return RunConfig::FromJson(j, fs::path(path).parent_path().string());
}

// ---------------------------------------------------------------- pipeline

Pipeline::Pipeline(RunConfig config, Diagnostics* diag)
    : config_(std::move(config)), diag_(diag) {}

std::string Pipeline::Path(const std::string& relative) const {
  return (fs::path(config_.out_dir) / relative).string();
}

std::string Pipeline::SeedPath(uint64_t seed, const std::string& file) const {
  return (fs::path(config_.out_dir) / ("seed_" + std::to_string(seed)) / file).string();
}

std::string Pipeline::StageHash(const std::string& stage, const json& params,
                                const std::vector<std::string>& inputs) const {
  std::string blob = stage + "\n" + params.dump() + "\n";
  for (const std::string& p : inputs) {
    if (!fs::is_regular_file(p))
      throw DataError(stage + ": missing input " + p + " (run the earlier stage first)");
    blob += p + " " + Sha256Hex(ReadFile(p)) + "\n";
  }
  return Sha256Hex(blob);
}

bool Pipeline::UpToDate(const std::string& stage, const std::string& hash,
                        const std::vector<std::string>& outputs) const {
  if (force_) return false;
  const std::string stamp = Path(".stamps/" + stage);
  if (!fs::exists(stamp) || ReadFile(stamp) != hash) return false;
  for (const std::string& o : outputs)
    if (!fs::exists(o)) return false;
  return true;
}

void Pipeline::Stamp(const std::string& stage, const std::string& hash) const {
  fs::create_directories(Path(".stamps"));
  WriteFile(Path(".stamps/" + stage), hash);
}

std::unique_ptr<gateway::Backend> Pipeline::MakeBackend() const {
  if (backend_factory_) return backend_factory_(config_);
  if (config_.backend == "openai")
    return std::make_unique<gateway::OpenAIBackend>(config_.gateway);
  const datahub::SyntheticSpec& spec = *config_.dataset.synthetic;
  return std::make_unique<gateway::OracleBackend>(
      datahub::SyntheticPosterior(spec), config_.oracle_noise.value_or(spec.noise_scale),
      config_.oracle_seed);
}

StageOutcome Pipeline::Prepare() {
  StageOutcome out{"prepare"};
  const json& d = config_.raw.at("dataset");
  std::vector<std::string> inputs;
  if (!config_.dataset.synthetic) {
    inputs = {config_.dataset.csv_path, config_.dataset.schema_path};
    if (!config_.dataset.mapping_path.empty()) inputs.push_back(config_.dataset.mapping_path);
  }
  std::vector<std::string> outputs = {Path("examples.jsonl")};
  for (uint64_t s : config_.seeds)
    for (const char* split : kSplits) outputs.push_back(SeedPath(s, std::string(split) + ".jsonl"));
  const std::string hash = StageHash(out.stage, {{"dataset", d}, {"seeds", config_.seeds}}, inputs);
  if (UpToDate(out.stage, hash, outputs)) {
    out.skipped = true;
    return out;
  }

  std::vector<datahub::Example> examples;
  datahub::SplitSizes sizes = config_.dataset.sizes;
  if (config_.dataset.synthetic) {
    const size_t n = sizes.train + sizes.val + sizes.test;
    examples = datahub::SynthGenerate(*config_.dataset.synthetic, static_cast<int>(n)).examples;
  } else {
    datahub::CodeMapping mapping;
    if (!config_.dataset.mapping_path.empty())
      mapping = datahub::LoadMapping(config_.dataset.mapping_path);
    examples = datahub::LoadCsv(config_.dataset.csv_path, config_.dataset.schema,
                                config_.dataset.mapping_path.empty() ? nullptr : &mapping);
    if (sizes.train + sizes.val + sizes.test == 0) {
      const size_t n = examples.size();
      sizes.val = n / 5;
      sizes.test = n / 5;
      sizes.train = n - sizes.val - sizes.test;
    }
  }
  const int g = config_.num_groups();
  fs::create_directories(config_.out_dir);
  datahub::WriteExamplesJsonl(Path("examples.jsonl"), examples, g);
  for (uint64_t s : config_.seeds) {
    const datahub::Splits splits = datahub::Split(examples, sizes, s);
    fs::create_directories(fs::path(SeedPath(s, "")));
    datahub::WriteExamplesJsonl(SeedPath(s, "train.jsonl"), splits.train, g);
    datahub::WriteExamplesJsonl(SeedPath(s, "val.jsonl"), splits.val, g);
    datahub::WriteExamplesJsonl(SeedPath(s, "test.jsonl"), splits.test, g);
  }
  out.summary = {{"examples", examples.size()},
                 {"train", sizes.train}, {"val", sizes.val}, {"test", sizes.test}};
  Stamp(out.stage, hash);
  return out;
}

StageOutcome Pipeline::Elicit() {
  StageOutcome out{"elicit"};
  std::vector<std::string> inputs = {Path("examples.jsonl")};
  for (const std::string& t : TemplateFiles(config_.elicitation, config_.base_dir))
    inputs.push_back(t);
  json params = {{"elicitation", config_.elicitation},
                 {"backend", config_.backend},
                 {"model", config_.gateway.model},
                 {"endpoint", config_.gateway.endpoint},
                 {"fill_value", config_.gateway.fill_value},
                 {"top_logprobs", config_.gateway.top_logprobs}};
  if (config_.backend == "oracle") {
    params["noise"] = config_.oracle_noise.value_or(config_.dataset.synthetic->noise_scale);
    params["oracle_seed"] = config_.oracle_seed;
    params["synthetic"] = config_.dataset.synthetic->ToJson();
  }
  const std::string hash = StageHash(out.stage, params, inputs);
  if (UpToDate(out.stage, hash, {Path("bundles.jsonl")})) {
    out.skipped = true;
    return out;
  }

  const promptkit::ElicitationPlan plan = promptkit::PlanFromJson(
      config_.elicitation, config_.base_dir, config_.num_classes(), config_.num_groups());
  // The backend is built before any example is read, so a missing key
  // fails without side effects.
  std::unique_ptr<gateway::Backend> backend = MakeBackend();
  const std::vector<datahub::Example> examples = datahub::ReadExamplesJsonl(Path("examples.jsonl"));
  fs::create_directories(fs::path(config_.gateway.cache_path).parent_path());
  gateway::Gateway gw(config_.gateway, std::move(backend));
  const gateway::CollectResult r = gw.Collect(plan, examples);
  WriteFile(Path("elicit_failures.json"), r.report.ToJson().dump(1) + "\n");
  if (!r.report.ok())
    Warn(diag_, "elicit: " + std::to_string(r.report.failures.size()) +
                    " failed query(ies); see elicit_failures.json");
  if (!r.report.unmatched.empty())
    Warn(diag_, "elicit: " + std::to_string(r.report.unmatched.size()) +
                    " response(s) matched no option letter");
  if (r.bundles.empty()) {
    const ErrorKind kind =
        r.report.failures.empty() ? ErrorKind::kData : r.report.failures.front().kind;
    throw Error(kind, "elicit: every example failed; first error: " +
                          (r.report.failures.empty() ? std::string("none")
                                                     : r.report.failures.front().message));
  }
  WriteBundlesJsonl(Path("bundles.jsonl"), r.bundles);
  out.summary = {{"bundles", r.bundles.size()},
                 {"failures", r.report.failures.size()},
                 {"network_calls", gw.stats().network_calls.load()},
                 {"cache_hits", gw.stats().cache_hits.load()},
                 {"retries", gw.stats().retries.load()},
                 {"cache_entries", gw.cache().size()}};
  // A partial elicitation stays unstamped so the next run retries it.
  if (r.report.ok()) Stamp(out.stage, hash);
  return out;
}

StageOutcome Pipeline::Featurize() {
  StageOutcome out{"featurize"};
  const std::string hash = StageHash(out.stage, json::object(), {Path("bundles.jsonl")});
  if (UpToDate(out.stage, hash, {Path("features.jsonl")})) {
    out.skipped = true;
    return out;
  }
  const featurizer::FeatureSet set = featurizer::FeaturizeAll(
      ReadBundlesJsonl(Path("bundles.jsonl")), config_.num_classes(), config_.num_groups());
  featurizer::WriteFeaturesJsonl(Path("features.jsonl"), set);
  out.summary = {{"rows", set.size()}, {"layout", set.layout.ToJson()}};
  Stamp(out.stage, hash);
  return out;
}

StageOutcome Pipeline::Calibrate() {
  StageOutcome out{"calibrate"};
  std::vector<std::string> inputs = {Path("features.jsonl")};
  std::vector<std::string> outputs;
  for (uint64_t s : config_.seeds) {
    outputs.push_back(SeedPath(s, "calibrator.json"));
    for (const char* split : kSplits) {
      inputs.push_back(SeedPath(s, std::string(split) + ".jsonl"));
      outputs.push_back(SeedPath(s, std::string("calibrated_") + split + ".jsonl"));
    }
  }
  const json params = {
      {"calibration", config_.raw.value("calibration", json::object())},
      {"l2", config_.calibration.l2},
      {"max_iterations", config_.calibration.max_iterations},
      {"gradient_tolerance", config_.calibration.gradient_tolerance}};
  const std::string hash = StageHash(out.stage, params, inputs);
  if (UpToDate(out.stage, hash, outputs)) {
    out.skipped = true;
    return out;
  }
  const featurizer::FeatureSet features = featurizer::ReadFeaturesJsonl(Path("features.jsonl"));
  out.summary = json::object();
  for (uint64_t s : config_.seeds) {
    LabeledSplit train = Labels(SeedPath(s, "train.jsonl"));
    const featurizer::FeatureSet xtrain = Select(features, &train, "train", diag_);
    calibrator::CalibratorOptions opts{config_.calibration_target, config_.calibration, s};
    const calibrator::CalibratorModel model =
        calibrator::Fit(xtrain, train.y, train.a, opts, diag_);
    calibrator::SaveModel(SeedPath(s, "calibrator.json"), model);
    for (const char* split : kSplits) {
      LabeledSplit labels = Labels(SeedPath(s, std::string(split) + ".jsonl"));
      featurizer::FeatureSet in = Select(features, &labels, split, nullptr);
      featurizer::FeatureSet cal;
      cal.layout = model.output_layout;
      cal.ids = in.ids;
      cal.rows = calibrator::PredictAll(model, in.rows);
      featurizer::WriteFeaturesJsonl(SeedPath(s, std::string("calibrated_") + split + ".jsonl"),
                                     cal);
    }
    out.summary[std::to_string(s)] = {{"iterations", model.iterations},
                                      {"final_loss", model.final_loss},
                                      {"converged", model.converged}};
  }
  Stamp(out.stage, hash);
  return out;
}

StageOutcome Pipeline::Sweep() {
  StageOutcome out{"sweep"};
  std::vector<std::string> inputs, outputs = {Path("points.csv")};
  for (uint64_t s : config_.seeds) {
    outputs.push_back(SeedPath(s, "points.csv"));
    outputs.push_back(SeedPath(s, "models.json"));
    for (const char* split : kSplits) {
      inputs.push_back(SeedPath(s, std::string(split) + ".jsonl"));
      inputs.push_back(SeedPath(s, std::string("calibrated_") + split + ".jsonl"));
    }
  }
  json params = {{"fairness", config_.fairness.ToJson()},
                 {"algorithms", config_.raw.value("algorithms", json())},
                 {"linearpost", config_.raw.value("linearpost", json())},
                 {"mindiff", config_.raw.value("mindiff", json())},
                 {"reductions", config_.raw.value("reductions", json())}};
  const std::string hash = StageHash(out.stage, params, inputs);
  if (UpToDate(out.stage, hash, outputs)) {
    out.skipped = true;
    return out;
  }

  std::vector<evalsuite::TradeoffPoint> all;
  json failures = json::array();
  for (uint64_t s : config_.seeds) {
    auto load = [&](const std::string& split, LabeledSplit* labels) {
      *labels = Labels(SeedPath(s, split + ".jsonl"));
      featurizer::FeatureSet cal =
          featurizer::ReadFeaturesJsonl(SeedPath(s, "calibrated_" + split + ".jsonl"));
      return Select(cal, labels, split, nullptr);
    };
    LabeledSplit ltrain;
    const featurizer::FeatureSet ctrain = load("train", &ltrain);
    const featurizer::FeatureLayout& layout = ctrain.layout;
    fairalg::TrainingSet train{ctrain.rows, ltrain.y, ltrain.a, config_.num_classes(),
                               config_.num_groups(), config_.overlapping()};
    std::vector<evalsuite::EvalSplit> evals;
    for (const char* split : {"val", "test"}) {
      LabeledSplit l;
      const featurizer::FeatureSet c = load(split, &l);
      evals.push_back({split, c.rows, l.y, l.a});
    }
    std::vector<evalsuite::TradeoffPoint> points;
    json models = json::object();
    for (const AlgorithmConfig& a : config_.algorithms) {
      evalsuite::SweepSpec spec;
      spec.algorithm = a.algorithm;
      spec.fairness = config_.fairness;
      spec.grid = a.grid;
      spec.linearpost = config_.linearpost;
      spec.mindiff = config_.mindiff;
      spec.reductions = config_.reductions;
      spec.jobs = config_.jobs;
      const evalsuite::SweepResult r = evalsuite::RunSweep(spec, s, train, layout, evals, diag_);
      for (const std::string& f : r.failures) {
        Warn(diag_, "sweep seed " + std::to_string(s) + ": " + f);
        failures.push_back({{"seed", s}, {"message", f}});
      }
      json arr = json::array();
      for (const fairalg::FairModel& m : r.models) arr.push_back(fairalg::ModelToJson(m));
      models[evalsuite::AlgorithmName(a.algorithm)] = {{"grid", r.grid}, {"models", arr}};
      points.insert(points.end(), r.points.begin(), r.points.end());
    }
    evalsuite::WritePointsCsv(SeedPath(s, "points.csv"), points);
    WriteFile(SeedPath(s, "models.json"), models.dump() + "\n");
    all.insert(all.end(), points.begin(), points.end());
  }
  evalsuite::WritePointsCsv(Path("points.csv"), all);
  WriteFile(Path("sweep_failures.json"), failures.dump(1) + "\n");
  out.summary = {{"points", all.size()}, {"failures", failures.size()}};
  Stamp(out.stage, hash);
  return out;
}

StageOutcome Pipeline::Report() {
  StageOutcome out{"report"};
  std::vector<std::string> inputs = {Path("points.csv")};
  for (uint64_t s : config_.seeds) inputs.push_back(SeedPath(s, "test.jsonl"));
  const json params = {{"config", config_.raw},
                       {"gamma", config_.gamma},
                       {"cutoff", config_.cutoff ? json(*config_.cutoff) : json()},
                       {"levels", config_.levels}};
  const std::string hash = StageHash(out.stage, params, inputs);
  if (UpToDate(out.stage, hash, {Path("report.json")})) {
    out.skipped = true;
    return out;
  }
  const std::vector<evalsuite::TradeoffPoint> points = evalsuite::ReadPointsCsv(Path("points.csv"));
  std::map<uint64_t, double> base_rates;
  json rates = json::object();
  for (uint64_t s : config_.seeds) {
    const LabeledSplit test = Labels(SeedPath(s, "test.jsonl"));
    base_rates[s] = datahub::BaseRate(test.y, config_.num_classes());
    rates[std::to_string(s)] = base_rates[s];
  }
  double cutoff = 0.0;
  std::string source = "config";
  if (config_.cutoff) {
    cutoff = *config_.cutoff;
  } else {
    std::vector<evalsuite::TradeoffPoint> val;
    for (const evalsuite::TradeoffPoint& p : points)
      if (p.split == "val") val.push_back(p);
    source = evalsuite::TabulatedCutoff(config_.dataset.name, config_.fairness.criterion)
                 ? "table"
                 : "highest_accuracy_point";
    cutoff = evalsuite::DefaultCutoff(config_.dataset.name, config_.fairness.criterion, val);
  }
  const evalsuite::AutcConfig autc{config_.gamma, cutoff, 0.5};
  autc.Validate();

  Diagnostics local;
  json algorithms = json::array();
  for (const AlgorithmConfig& a : config_.algorithms) {
    const std::string name = evalsuite::AlgorithmName(a.algorithm);
    std::vector<evalsuite::TradeoffPoint> mine;
    for (const evalsuite::TradeoffPoint& p : points)
      if (p.algorithm == name) mine.push_back(p);
    if (mine.empty()) {
      Warn(&local, "report: no points for " + name);
      continue;
    }
    algorithms.push_back(evalsuite::BuildReport(name, mine, base_rates, config_.gamma,
                                                cutoff, config_.levels, &local)
                             .ToJson());
  }
  if (diag_ != nullptr)
    for (const std::string& w : local.warnings) diag_->Warn(w);
  json report = {{"dataset", config_.dataset.name},
                 {"fairness", config_.fairness.ToJson()},
                 {"autc", {{"gamma", config_.gamma}, {"cutoff", cutoff}, {"cutoff_source", source}}},
                 {"base_rates", rates},
                 {"algorithms", algorithms},
                 {"warnings", local.warnings},
                 {"config", config_.raw}};
  WriteFile(Path("report.json"), report.dump(1) + "\n");
  out.summary = {{"algorithms", algorithms.size()}, {"cutoff", cutoff}};
  Stamp(out.stage, hash);
  return out;
}

std::vector<StageOutcome> Pipeline::RunAll() {
  return {Prepare(), Elicit(), Featurize(), Calibrate(), Sweep(), Report()};
}

}  // namespace fairpost::pipeline
