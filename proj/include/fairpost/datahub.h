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

// Dataset ingestion: schemas, CSV loading, list serialization, splits,
// tabular encoding, and a Gaussian generator with a closed-form posterior.

#ifndef FAIRPOST_DATAHUB_H_
#define FAIRPOST_DATAHUB_H_

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairpost/common.h"
#include "json.hpp"

namespace fairpost::datahub {

enum class ColumnKind { kCategorical, kNumeric, kText };

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::kText;
  // Natural-language column name used in serialization; empty means `name`.
  std::string display;

  const std::string& DisplayName() const {
    return display.empty() ? name : display;
  }
};

struct DatasetSchema {
  std::vector<Column> columns;
  std::string id_column;  // optional; row number is used when empty
  std::string label_column;
  std::vector<std::string> label_values;  // K ordered class names
  // One column holding the group name (disjoint groups), or G indicator
  // columns (overlapping groups).
  std::vector<std::string> group_columns;
  bool overlapping = false;
  std::vector<std::string> group_values;  // G ordered group names
  std::vector<std::string> drop_columns;
  std::vector<std::string> missing_tokens = {"", "?", "NA"};

  int num_classes() const { return static_cast<int>(label_values.size()); }
  int num_groups() const { return static_cast<int>(group_values.size()); }
  // Group cells in the joint feature: G, or 2^G for overlapping groups.
  int num_group_cells() const {
    return overlapping ? (1 << num_groups()) : num_groups();
  }
  // False for the label, group, id and dropped columns.
  bool IsSerialized(const std::string& column) const;
  bool IsMissing(const std::string& value) const;
  const Column* Find(const std::string& name) const;

  // Throws a config error when an invariant does not hold.
  void Validate() const;

  static DatasetSchema FromJson(const nlohmann::json& j);
  nlohmann::json ToJson() const;
};

struct Example {
  std::string id;
  // Non-missing values only; absent keys are missing.
  std::map<std::string, std::string> features;
  std::string serialized;
  int y = 0;
  GroupLabel a;
};

// {column: {code: description}}.
using CodeMapping = std::map<std::string, std::map<std::string, std::string>>;

CodeMapping LoadMapping(const std::string& path);
CodeMapping MappingFromJson(const nlohmann::json& j);

// RFC-4180 parsing: quoted fields, doubled quotes, embedded newlines.
std::vector<std::vector<std::string>> ParseCsv(std::string_view text);

// Loads every row into an Example and fills `serialized`. A row missing
// its label or group value, or carrying an unknown one, is rejected with a
// data error naming the row. `mapping` == nullptr means identity mapping.
std::vector<Example> LoadCsv(const std::string& path,
                             const DatasetSchema& schema,
                             const CodeMapping* mapping = nullptr);
std::vector<Example> ParseExamples(std::string_view csv_text,
                                   const DatasetSchema& schema,
                                   const CodeMapping* mapping = nullptr);

// "{column}: {value}" lines in schema order, skipping missing and
// non-serialized columns. With a mapping, every categorical code must be
// covered.
std::string SerializeList(const Example& example, const DatasetSchema& schema,
                          const CodeMapping* mapping = nullptr);

struct SplitSizes {
  size_t train = 0;
  size_t val = 0;
  size_t test = 0;
};

struct Splits {
  std::vector<Example> train;
  std::vector<Example> val;
  std::vector<Example> test;
};

Splits Split(const std::vector<Example>& examples, SplitSizes sizes,
             uint64_t seed);

// max_k of the empirical class frequency.
double BaseRate(std::span<const Example> examples, int num_classes);
double BaseRate(std::span<const int> labels, int num_classes);
// Lowest class index among the most frequent classes.
int MajorityClass(std::span<const int> labels, int num_classes);

// One-hot categorical columns and standardized numeric columns, with all
// statistics taken from the training rows passed to Fit.
class TabularEncoder {
 public:
  void Fit(std::span<const Example> train, const DatasetSchema& schema,
           Diagnostics* diag = nullptr);
  Eigen::MatrixXd Transform(std::span<const Example> examples) const;
  int dimension() const { return dimension_; }

 private:
  struct Block {
    std::string column;
    ColumnKind kind;
    std::vector<std::string> codes;  // categorical
    double mean = 0.0;               // numeric
    double stddev = 1.0;
    bool degenerate = false;
    int offset = 0;
  };
  std::vector<Block> blocks_;
  int dimension_ = 0;
};

// Canonical dataset file: one JSON object per line with fields
// id, features, serialized, y, a.
void WriteExamplesJsonl(const std::string& path,
                        std::span<const Example> examples, int num_groups);
std::vector<Example> ReadExamplesJsonl(const std::string& path);
nlohmann::json ExampleToJson(const Example& e, int num_groups);
Example ExampleFromJson(const nlohmann::json& j);

// Gaussian class-and-group conditional generator. Cells are flattened as
// cell * K + k where cell is the group index (disjoint) or the membership
// bitmask (overlapping).
struct SyntheticSpec {
  int num_classes = 2;
  int num_groups = 2;
  bool overlapping = false;
  int dim = 2;
  std::vector<double> weights;                 // mixture weight per cell
  std::vector<std::vector<double>> means;      // per cell, length dim
  std::vector<std::vector<double>> covariances;  // per cell, dim*dim
                                                 // row-major; empty = I
  double noise_scale = 0.0;  // std of additive noise on oracle logits
  uint64_t seed = 0;

  int num_group_cells() const {
    return overlapping ? (1 << num_groups) : num_groups;
  }
  int num_cells() const { return num_group_cells() * num_classes; }
  void Validate() const;

  static SyntheticSpec FromJson(const nlohmann::json& j);
  nlohmann::json ToJson() const;
};

class SyntheticPosterior {
 public:
  explicit SyntheticPosterior(const SyntheticSpec& spec);

  // Exact log Pr(cell, Y = k | X = x), normalized over all cells.
  std::vector<double> LogJoint(std::span<const double> x) const;
  const SyntheticSpec& spec() const { return spec_; }

 private:
  SyntheticSpec spec_;
  std::vector<Eigen::MatrixXd> chol_l_;  // lower Cholesky factors
  std::vector<double> log_norm_;         // log weight - 0.5 log det - const
};

struct SyntheticData {
  std::vector<Example> examples;
  SyntheticPosterior posterior;
};

// Draws n examples with ids "<prefix><i>", deterministic given spec.seed.
SyntheticData SynthGenerate(const SyntheticSpec& spec, int n,
                            const std::string& id_prefix = "s");
DatasetSchema SyntheticSchema(const SyntheticSpec& spec);
// Recovers x0..x{dim-1} from a synthetic example.
std::vector<double> FeatureVector(const Example& e, int dim);

}  // namespace fairpost::datahub

#endif  // FAIRPOST_DATAHUB_H_
