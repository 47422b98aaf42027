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

#include "fairpost/datahub.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <set>

namespace fairpost::datahub {
namespace {

using nlohmann::json;

std::string Trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

ColumnKind KindFromString(const std::string& s) {
  if (s == "categorical") return ColumnKind::kCategorical;
  if (s == "numeric") return ColumnKind::kNumeric;
  if (s == "text") return ColumnKind::kText;
  throw ConfigError("unknown column kind: " + s);
}

const char* KindToString(ColumnKind k) {
  switch (k) {
    case ColumnKind::kCategorical:
      return "categorical";
    case ColumnKind::kNumeric:
      return "numeric";
    case ColumnKind::kText:
      return "text";
  }
  return "text";
}

bool ParseIndicator(const std::string& v, bool* out) {
  std::string s = v;
  std::transform(s.begin(), s.end(), s.begin(), ::tolower);
  if (s == "true" || s == "yes") {
    *out = true;
    return true;
  }
  if (s == "false" || s == "no") {
    *out = false;
    return true;
  }
  try {
    *out = ParseDouble(s) > 0.0;
    return true;
  } catch (const Error&) {
    return false;
  }
}

}  // namespace

bool DatasetSchema::IsSerialized(const std::string& column) const {
  if (column == label_column || column == id_column) return false;
  if (std::find(group_columns.begin(), group_columns.end(), column) !=
      group_columns.end())
    return false;
  return std::find(drop_columns.begin(), drop_columns.end(), column) ==
         drop_columns.end();
}

bool DatasetSchema::IsMissing(const std::string& value) const {
  return std::find(missing_tokens.begin(), missing_tokens.end(), value) !=
         missing_tokens.end();
}

const Column* DatasetSchema::Find(const std::string& name) const {
  for (const Column& c : columns)
    if (c.name == name) return &c;
  return nullptr;
}

void DatasetSchema::Validate() const {
  std::set<std::string> names;
  for (const Column& c : columns) {
    if (!names.insert(c.name).second)
      throw ConfigError("schema: duplicate column '" + c.name + "'");
  }
  if (num_classes() < 2)
    throw ConfigError("schema: need at least 2 label values");
  if (std::set<std::string>(label_values.begin(), label_values.end()).size() !=
      label_values.size())
    throw ConfigError("schema: duplicate label values");
  if (Find(label_column) == nullptr)
    throw ConfigError("schema: label column '" + label_column +
                      "' is not a declared column");
  if (overlapping) {
    if (num_groups() < 1)
      throw ConfigError("schema: overlapping groups need G >= 1");
    if (num_groups() > 20)
      throw ConfigError("schema: overlapping groups are capped at G = 20");
    if (group_columns.size() != group_values.size())
      throw ConfigError(
          "schema: overlapping groups need one indicator column per group");
  } else {
    if (num_groups() < 2)
      throw ConfigError("schema: disjoint groups need G >= 2");
    if (group_columns.size() != 1)
      throw ConfigError("schema: disjoint groups use exactly one column");
  }
  for (const std::string& g : group_columns) {
    if (Find(g) == nullptr)
      throw ConfigError("schema: group column '" + g +
                        "' is not a declared column");
    if (g == label_column)
      throw ConfigError("schema: column '" + g + "' is both label and group");
  }
  for (const std::string& d : drop_columns) {
    if (Find(d) == nullptr)
      throw ConfigError("schema: dropped column '" + d +
                        "' is not a declared column");
  }
  if (!id_column.empty() && Find(id_column) == nullptr)
    throw ConfigError("schema: id column '" + id_column +
                      "' is not a declared column");
}

DatasetSchema DatasetSchema::FromJson(const json& j) {
  DatasetSchema s;
  try {
    for (const json& c : j.at("columns")) {
      Column col;
      col.name = c.at("name").get<std::string>();
      col.kind = KindFromString(c.value("kind", std::string("text")));
      col.display = c.value("display", std::string());
      s.columns.push_back(std::move(col));
    }
    s.id_column = j.value("id_column", std::string());
    s.label_column = j.at("label_column").get<std::string>();
    s.label_values = j.at("label_values").get<std::vector<std::string>>();
    s.overlapping = j.value("overlapping", false);
    if (j.contains("group_columns")) {
      s.group_columns = j.at("group_columns").get<std::vector<std::string>>();
    } else {
      s.group_columns = {j.at("group_column").get<std::string>()};
    }
    if (j.contains("group_values")) {
      s.group_values = j.at("group_values").get<std::vector<std::string>>();
    } else if (s.overlapping) {
      s.group_values = s.group_columns;
    }
    s.drop_columns =
        j.value("drop_columns", std::vector<std::string>());
    if (j.contains("missing_tokens"))
      s.missing_tokens = j.at("missing_tokens").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("schema: ") + e.what());
  }
  s.Validate();
  return s;
}

json DatasetSchema::ToJson() const {
  json cols = json::array();
  for (const Column& c : columns) {
    json jc = {{"name", c.name}, {"kind", KindToString(c.kind)}};
    if (!c.display.empty()) jc["display"] = c.display;
    cols.push_back(jc);
  }
  json j = {{"columns", cols},
            {"label_column", label_column},
            {"label_values", label_values},
            {"group_columns", group_columns},
            {"overlapping", overlapping},
            {"group_values", group_values},
            {"drop_columns", drop_columns},
            {"missing_tokens", missing_tokens}};
  if (!id_column.empty()) j["id_column"] = id_column;
  return j;
}

CodeMapping MappingFromJson(const json& j) {
  CodeMapping m;
  try {
    for (const auto& [column, table] : j.items()) {
      for (const auto& [code, description] : table.items())
        m[column][code] = description.get<std::string>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("mapping: ") + e.what());
  }
  return m;
}

CodeMapping LoadMapping(const std::string& path) {
  json j;
  try {
    j = json::parse(ReadFile(path));
  } catch (const json::exception& e) {
    throw ConfigError("mapping file " + path + ": " + e.what());
  }
  return MappingFromJson(j);
}

std::vector<std::vector<std::string>> ParseCsv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  for (size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        if (field_started || !field.empty() || !row.empty()) {
          row.push_back(std::move(field));
          rows.push_back(std::move(row));
        }
        field.clear();
        row.clear();
        field_started = false;
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) throw DataError("csv: unterminated quoted field");
  if (field_started || !field.empty() || !row.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<Example> ParseExamples(std::string_view csv_text,
                                   const DatasetSchema& schema,
                                   const CodeMapping* mapping) {
  schema.Validate();
  const auto rows = ParseCsv(csv_text);
  if (rows.empty()) throw DataError("csv: missing header row");
  const auto& header = rows.front();
  std::map<std::string, size_t> position;
  for (size_t c = 0; c < header.size(); ++c) {
    const std::string name = Trim(header[c]);
    if (schema.Find(name) == nullptr)
      throw DataError("csv: header column '" + name + "' is not in schema");
    position[name] = c;
  }
  for (const Column& col : schema.columns) {
    if (!position.contains(col.name))
      throw DataError("csv: schema column '" + col.name +
                      "' missing from header");
  }

  std::vector<Example> out;
  out.reserve(rows.size() - 1);
  for (size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string where = "row " + std::to_string(r);
    if (row.size() != header.size())
      throw DataError("csv: " + where + " has " + std::to_string(row.size()) +
                      " fields, expected " + std::to_string(header.size()));
    auto cell = [&](const std::string& name) {
      return Trim(row[position.at(name)]);
    };

    Example e;
    e.id = schema.id_column.empty() ? std::to_string(r - 1)
                                    : cell(schema.id_column);

    const std::string label = cell(schema.label_column);
    if (schema.IsMissing(label))
      throw DataError("csv: " + where + " is missing its label");
    auto it = std::find(schema.label_values.begin(), schema.label_values.end(),
                        label);
    if (it == schema.label_values.end())
      throw DataError("csv: " + where + " has unknown label value '" + label +
                      "' in column '" + schema.label_column + "'");
    e.y = static_cast<int>(it - schema.label_values.begin());

    if (schema.overlapping) {
      uint32_t mask = 0;
      for (int g = 0; g < schema.num_groups(); ++g) {
        const std::string v = cell(schema.group_columns[g]);
        bool on = false;
        if (schema.IsMissing(v) || !ParseIndicator(v, &on))
          throw DataError("csv: " + where + " has invalid group indicator '" +
                          v + "' in column '" + schema.group_columns[g] + "'");
        if (on) mask |= (1u << g);
      }
      e.a = GroupLabel::Mask(mask);
    } else {
      const std::string v = cell(schema.group_columns[0]);
      if (schema.IsMissing(v))
        throw DataError("csv: " + where + " is missing its group value");
      auto g = std::find(schema.group_values.begin(),
                         schema.group_values.end(), v);
      if (g == schema.group_values.end())
        throw DataError("csv: " + where + " has unknown group value '" + v +
                        "' in column '" + schema.group_columns[0] + "'");
      e.a = GroupLabel::Disjoint(
          static_cast<int>(g - schema.group_values.begin()));
    }

    for (const Column& col : schema.columns) {
      if (!schema.IsSerialized(col.name)) continue;
      const std::string v = cell(col.name);
      if (schema.IsMissing(v)) continue;
      if (col.kind == ColumnKind::kNumeric) {
        try {
          ParseDouble(v);
        } catch (const Error&) {
          throw DataError("csv: " + where + " has non-numeric value '" + v +
                          "' in column '" + col.name + "'");
        }
      }
      e.features[col.name] = v;
    }
    e.serialized = SerializeList(e, schema, mapping);
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<Example> LoadCsv(const std::string& path,
                             const DatasetSchema& schema,
                             const CodeMapping* mapping) {
  return ParseExamples(ReadFile(path), schema, mapping);
}

std::string SerializeList(const Example& example, const DatasetSchema& schema,
                          const CodeMapping* mapping) {
  std::string out;
  for (const Column& col : schema.columns) {
    if (!schema.IsSerialized(col.name)) continue;
    auto it = example.features.find(col.name);
    if (it == example.features.end()) continue;
    std::string value = it->second;
    if (mapping != nullptr && col.kind == ColumnKind::kCategorical) {
      auto table = mapping->find(col.name);
      if (table == mapping->end())
        throw DataError("mapping has no table for categorical column '" +
                        col.name + "'");
      auto d = table->second.find(value);
      if (d == table->second.end())
        throw DataError("mapping has no description for code '" + value +
                        "' in column '" + col.name + "'");
      value = d->second;
    }
    if (!out.empty()) out.push_back('\n');
    out += col.DisplayName();
    out += ": ";
    out += value;
  }
  return out;
}

Splits Split(const std::vector<Example>& examples, SplitSizes sizes,
             uint64_t seed) {
  const size_t total = sizes.train + sizes.val + sizes.test;
  if (total > examples.size())
    throw ConfigError("split sizes sum to " + std::to_string(total) +
                      " but the dataset has " +
                      std::to_string(examples.size()) + " examples");
  std::vector<size_t> order(examples.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  Splits s;
  size_t i = 0;
  for (; i < sizes.train; ++i) s.train.push_back(examples[order[i]]);
  for (; i < sizes.train + sizes.val; ++i) s.val.push_back(examples[order[i]]);
  for (; i < total; ++i) s.test.push_back(examples[order[i]]);
  return s;
}

double BaseRate(std::span<const int> labels, int num_classes) {
  if (labels.empty()) throw DataError("base rate of an empty dataset");
  std::vector<size_t> counts(num_classes, 0);
  for (int y : labels) counts.at(y)++;
  return static_cast<double>(*std::max_element(counts.begin(), counts.end())) /
         static_cast<double>(labels.size());
}

double BaseRate(std::span<const Example> examples, int num_classes) {
  std::vector<int> labels;
  labels.reserve(examples.size());
  for (const Example& e : examples) labels.push_back(e.y);
  return BaseRate(labels, num_classes);
}

int MajorityClass(std::span<const int> labels, int num_classes) {
  if (labels.empty()) throw DataError("majority class of an empty dataset");
  std::vector<size_t> counts(num_classes, 0);
  for (int y : labels) counts.at(y)++;
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) -
                          counts.begin());
}

void TabularEncoder::Fit(std::span<const Example> train,
                         const DatasetSchema& schema, Diagnostics* diag) {
  if (train.empty()) throw DataError("encoder: empty training split");
  blocks_.clear();
  dimension_ = 0;
  for (const Column& col : schema.columns) {
    if (!schema.IsSerialized(col.name) || col.kind == ColumnKind::kText)
      continue;
    Block b;
    b.column = col.name;
    b.kind = col.kind;
    b.offset = dimension_;
    if (col.kind == ColumnKind::kCategorical) {
      std::set<std::string> codes;
      for (const Example& e : train) {
        auto it = e.features.find(col.name);
        if (it != e.features.end()) codes.insert(it->second);
      }
      b.codes.assign(codes.begin(), codes.end());
      dimension_ += static_cast<int>(b.codes.size());
    } else {
      double sum = 0.0, sq = 0.0;
      size_t n = 0;
      for (const Example& e : train) {
        auto it = e.features.find(col.name);
        if (it == e.features.end()) continue;
        const double v = ParseDouble(it->second);
        sum += v;
        ++n;
      }
      b.mean = n > 0 ? sum / static_cast<double>(n) : 0.0;
      for (const Example& e : train) {
        auto it = e.features.find(col.name);
        if (it == e.features.end()) continue;
        const double d = ParseDouble(it->second) - b.mean;
        sq += d * d;
      }
      const double var = n > 0 ? sq / static_cast<double>(n) : 0.0;
      b.stddev = std::sqrt(var);
      if (!(b.stddev > 1e-12)) {
        b.degenerate = true;
        Warn(diag, "encoder: column '" + col.name +
                       "' has zero variance; encoded as 0");
      }
      dimension_ += 1;
    }
    blocks_.push_back(std::move(b));
  }
}

Eigen::MatrixXd TabularEncoder::Transform(
    std::span<const Example> examples) const {
  Eigen::MatrixXd out =
      Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(examples.size()),
                            dimension_);
  for (size_t r = 0; r < examples.size(); ++r) {
    const Example& e = examples[r];
    for (const Block& b : blocks_) {
      auto it = e.features.find(b.column);
      if (it == e.features.end()) continue;
      if (b.kind == ColumnKind::kCategorical) {
        auto c = std::lower_bound(b.codes.begin(), b.codes.end(), it->second);
        if (c != b.codes.end() && *c == it->second)
          out(r, b.offset + (c - b.codes.begin())) = 1.0;
      } else if (!b.degenerate) {
        out(r, b.offset) = (ParseDouble(it->second) - b.mean) / b.stddev;
      }
    }
  }
  return out;
}

json ExampleToJson(const Example& e, int num_groups) {
  json j = {{"id", e.id},
            {"features", e.features},
            {"serialized", e.serialized},
            {"y", e.y}};
  if (e.a.overlapping) {
    std::vector<int> bits(num_groups);
    for (int g = 0; g < num_groups; ++g) bits[g] = e.a.Has(g) ? 1 : 0;
    j["a"] = bits;
  } else {
    j["a"] = e.a.index();
  }
  return j;
}

Example ExampleFromJson(const json& j) {
  Example e;
  try {
    e.id = j.at("id").get<std::string>();
    e.features = j.at("features").get<std::map<std::string, std::string>>();
    e.serialized = j.at("serialized").get<std::string>();
    e.y = j.at("y").get<int>();
    const json& a = j.at("a");
    if (a.is_array()) {
      uint32_t mask = 0;
      for (size_t g = 0; g < a.size(); ++g)
        if (a[g].get<int>() != 0) mask |= (1u << g);
      e.a = GroupLabel::Mask(mask);
    } else {
      e.a = GroupLabel::Disjoint(a.get<int>());
    }
  } catch (const json::exception& ex) {
    throw DataError(std::string("example record: ") + ex.what());
  }
  return e;
}

void WriteExamplesJsonl(const std::string& path,
                        std::span<const Example> examples, int num_groups) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  for (const Example& e : examples) out << ExampleToJson(e, num_groups).dump() << '\n';
}

std::vector<Example> ReadExamplesJsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<Example> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (Trim(line).empty()) continue;
    try {
      out.push_back(ExampleFromJson(json::parse(line)));
    } catch (const json::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void SyntheticSpec::Validate() const {
  if (num_classes < 2) throw ConfigError("synthetic: K must be >= 2");
  if (overlapping) {
    if (num_groups < 1 || num_groups > 20)
      throw ConfigError("synthetic: overlapping G must be in [1, 20]");
  } else if (num_groups < 2) {
    throw ConfigError("synthetic: disjoint G must be >= 2");
  }
  if (dim < 1) throw ConfigError("synthetic: dim must be >= 1");
  const size_t cells = static_cast<size_t>(num_cells());
  if (weights.size() != cells)
    throw ConfigError("synthetic: expected " + std::to_string(cells) +
                      " mixture weights");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ConfigError("synthetic: negative mixture weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw ConfigError("synthetic: mixture weights must sum to 1");
  if (means.size() != cells)
    throw ConfigError("synthetic: expected one mean per cell");
  for (const auto& m : means)
    if (m.size() != static_cast<size_t>(dim))
      throw ConfigError("synthetic: mean has wrong dimension");
  if (!covariances.empty()) {
    if (covariances.size() != cells)
      throw ConfigError("synthetic: expected one covariance per cell");
    for (const auto& c : covariances)
      if (c.size() != static_cast<size_t>(dim * dim))
        throw ConfigError("synthetic: covariance has wrong size");
  }
  if (!(noise_scale >= 0.0))
    throw ConfigError("synthetic: noise scale must be >= 0");
}

SyntheticSpec SyntheticSpec::FromJson(const json& j) {
  SyntheticSpec s;
  try {
    s.num_classes = j.at("num_classes").get<int>();
    s.num_groups = j.at("num_groups").get<int>();
    s.overlapping = j.value("overlapping", false);
    s.dim = j.at("dim").get<int>();
    s.weights = j.at("weights").get<std::vector<double>>();
    s.means = j.at("means").get<std::vector<std::vector<double>>>();
    if (j.contains("covariances"))
      s.covariances =
          j.at("covariances").get<std::vector<std::vector<double>>>();
    s.noise_scale = j.value("noise_scale", 0.0);
    s.seed = j.value("seed", uint64_t{0});
  } catch (const json::exception& e) {
    throw ConfigError(std::string("synthetic spec: ") + e.what());
  }
  s.Validate();
  return s;
}

json SyntheticSpec::ToJson() const {
  json j = {{"num_classes", num_classes}, {"num_groups", num_groups},
            {"overlapping", overlapping}, {"dim", dim},
            {"weights", weights},         {"means", means},
            {"noise_scale", noise_scale}, {"seed", seed}};
  if (!covariances.empty()) j["covariances"] = covariances;
  return j;
}

SyntheticPosterior::SyntheticPosterior(const SyntheticSpec& spec)
    : spec_(spec) {
  spec_.Validate();
  const int d = spec_.dim;
  for (int c = 0; c < spec_.num_cells(); ++c) {
    Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(d, d);
    if (!spec_.covariances.empty()) {
      for (int r = 0; r < d; ++r)
        for (int k = 0; k < d; ++k) cov(r, k) = spec_.covariances[c][r * d + k];
    }
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
      throw ConfigError("synthetic: covariance of cell " + std::to_string(c) +
                        " is not positive definite");
    Eigen::MatrixXd l = llt.matrixL();
    double log_det = 0.0;
    for (int r = 0; r < d; ++r) log_det += 2.0 * std::log(l(r, r));
    chol_l_.push_back(std::move(l));
    log_norm_.push_back(std::log(spec_.weights[c]) - 0.5 * log_det);
  }
}

std::vector<double> SyntheticPosterior::LogJoint(
    std::span<const double> x) const {
  const int d = spec_.dim;
  if (x.size() != static_cast<size_t>(d))
    throw DataError("synthetic posterior: wrong input dimension");
  Eigen::Map<const Eigen::VectorXd> xv(x.data(), d);
  std::vector<double> out(spec_.num_cells());
  for (int c = 0; c < spec_.num_cells(); ++c) {
    Eigen::Map<const Eigen::VectorXd> mu(spec_.means[c].data(), d);
    const Eigen::VectorXd z =
        chol_l_[c].triangularView<Eigen::Lower>().solve(xv - mu);
    out[c] = log_norm_[c] - 0.5 * z.squaredNorm();
  }
  const double lse = LogSumExp(out);
  for (double& v : out) v -= lse;
  return out;
}

DatasetSchema SyntheticSchema(const SyntheticSpec& spec) {
  DatasetSchema s;
  for (int j = 0; j < spec.dim; ++j)
    s.columns.push_back({"x" + std::to_string(j), ColumnKind::kNumeric, ""});
  s.columns.push_back({"y", ColumnKind::kCategorical, ""});
  s.label_column = "y";
  for (int k = 0; k < spec.num_classes; ++k)
    s.label_values.push_back("class" + std::to_string(k));
  s.overlapping = spec.overlapping;
  if (spec.overlapping) {
    for (int g = 0; g < spec.num_groups; ++g) {
      const std::string name = "in_group" + std::to_string(g);
      s.columns.push_back({name, ColumnKind::kNumeric, ""});
      s.group_columns.push_back(name);
      s.group_values.push_back("group" + std::to_string(g));
    }
  } else {
    s.columns.push_back({"group", ColumnKind::kCategorical, ""});
    s.group_columns = {"group"};
    for (int g = 0; g < spec.num_groups; ++g)
      s.group_values.push_back("group" + std::to_string(g));
  }
  return s;
}

SyntheticData SynthGenerate(const SyntheticSpec& spec, int n,
                            const std::string& id_prefix) {
  SyntheticPosterior posterior(spec);
  const DatasetSchema schema = SyntheticSchema(spec);
  const int d = spec.dim;
  const int k_classes = spec.num_classes;
  std::mt19937_64 rng(spec.seed);
  std::discrete_distribution<int> pick(spec.weights.begin(),
                                       spec.weights.end());
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<Eigen::MatrixXd> chol;
  for (int c = 0; c < spec.num_cells(); ++c) {
    Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(d, d);
    if (!spec.covariances.empty())
      for (int r = 0; r < d; ++r)
        for (int k = 0; k < d; ++k) cov(r, k) = spec.covariances[c][r * d + k];
    chol.push_back(Eigen::LLT<Eigen::MatrixXd>(cov).matrixL());
  }

  std::vector<Example> examples;
  examples.reserve(n);
  for (int i = 0; i < n; ++i) {
    const int cell = pick(rng);
    Eigen::VectorXd z(d);
    for (int j = 0; j < d; ++j) z(j) = normal(rng);
    Eigen::VectorXd x = chol[cell] * z;
    Example e;
    e.id = id_prefix + std::to_string(i);
    for (int j = 0; j < d; ++j)
      e.features["x" + std::to_string(j)] =
          FormatDouble(x(j) + spec.means[cell][j]);
    e.y = cell % k_classes;
    const int group_cell = cell / k_classes;
    e.a = spec.overlapping
              ? GroupLabel::Mask(static_cast<uint32_t>(group_cell))
              : GroupLabel::Disjoint(group_cell);
    e.serialized = SerializeList(e, schema);
    examples.push_back(std::move(e));
  }
  return {std::move(examples), std::move(posterior)};
}

std::vector<double> FeatureVector(const Example& e, int dim) {
  std::vector<double> x(dim);
  for (int j = 0; j < dim; ++j) {
    auto it = e.features.find("x" + std::to_string(j));
    if (it == e.features.end())
      throw DataError("example " + e.id + " lacks feature x" +
                      std::to_string(j));
    x[j] = ParseDouble(it->second);
  }
  return x;
}

}  // namespace fairpost::datahub
