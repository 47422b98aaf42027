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

#include "fairpost/bundle.h"

#include <cmath>
#include <fstream>

namespace fairpost {
namespace {

using nlohmann::json;
using promptkit::Strategy;

void CheckVector(const std::optional<std::vector<double>>& v, bool required,
                 size_t size, const char* name, const std::string& id) {
  if (v.has_value() != required)
    throw DataError("bundle " + id + ": field " + name +
                    (required ? " is required" : " must be absent"));
  if (!v) return;
  if (v->size() != size)
    throw DataError("bundle " + id + ": field " + name + " has length " +
                    std::to_string(v->size()) + ", expected " +
                    std::to_string(size));
  for (double x : *v)
    if (!std::isfinite(x))
      throw DataError("bundle " + id + ": field " + name +
                      " has a non-finite entry");
}

void CheckMatrix(const std::optional<std::vector<std::vector<double>>>& m,
                 bool required, size_t rows, size_t cols, const char* name,
                 const std::string& id) {
  if (m.has_value() != required)
    throw DataError("bundle " + id + ": field " + name +
                    (required ? " is required" : " must be absent"));
  if (!m) return;
  if (m->size() != rows)
    throw DataError("bundle " + id + ": field " + name + " has wrong shape");
  for (const auto& row : *m) {
    std::optional<std::vector<double>> r = row;
    CheckVector(r, true, cols, name, id);
  }
}

}  // namespace

void LogitBundle::Validate(int num_classes, int num_groups) const {
  const size_t k = num_classes, g = num_groups;
  const bool decomposed = strategy == Strategy::kDecomposed;
  const bool need_y = strategy != Strategy::kJoint &&
                      !(decomposed && swapped);
  const bool need_a = strategy == Strategy::kCondIndep ||
                      (decomposed && swapped);
  CheckVector(q_y, need_y, k, "q_y", example_id);
  CheckVector(q_a, need_a, g, "q_a", example_id);
  CheckMatrix(q_a_given_y, decomposed && !swapped, k, g, "q_a_given_y",
              example_id);
  CheckMatrix(q_y_given_a, decomposed && swapped, g, k, "q_y_given_a",
              example_id);
  CheckVector(q_ay, strategy == Strategy::kJoint, g * k, "q_ay", example_id);
  const bool need_ind = strategy == Strategy::kPerGroupIndicator;
  if (q_a_ind.has_value() != need_ind)
    throw DataError("bundle " + example_id + ": field q_a_ind " +
                    (need_ind ? "is required" : "must be absent"));
  if (q_a_ind) {
    if (q_a_ind->size() != g)
      throw DataError("bundle " + example_id + ": field q_a_ind has wrong shape");
    for (const auto& pair : *q_a_ind)
      if (!std::isfinite(pair[0]) || !std::isfinite(pair[1]))
        throw DataError("bundle " + example_id +
                        ": field q_a_ind has a non-finite entry");
  }
}

json BundleToJson(const LogitBundle& b) {
  json j = {{"example_id", b.example_id},
            {"strategy", promptkit::StrategyName(b.strategy)},
            {"swapped", b.swapped}};
  if (b.q_y) j["q_y"] = *b.q_y;
  if (b.q_a) j["q_a"] = *b.q_a;
  if (b.q_a_given_y) j["q_a_given_y"] = *b.q_a_given_y;
  if (b.q_y_given_a) j["q_y_given_a"] = *b.q_y_given_a;
  if (b.q_ay) j["q_ay"] = *b.q_ay;
  if (b.q_a_ind) j["q_a_ind"] = *b.q_a_ind;
  j["provenance"] = {{"model", b.provenance.model},
                     {"prompt_hashes", b.provenance.prompt_hashes},
                     {"timestamp", b.provenance.timestamp}};
  return j;
}

LogitBundle BundleFromJson(const json& j) {
  LogitBundle b;
  try {
    b.example_id = j.at("example_id").get<std::string>();
    b.strategy = promptkit::StrategyFromString(j.at("strategy").get<std::string>());
    b.swapped = j.value("swapped", false);
    if (j.contains("q_y")) b.q_y = j.at("q_y").get<std::vector<double>>();
    if (j.contains("q_a")) b.q_a = j.at("q_a").get<std::vector<double>>();
    if (j.contains("q_a_given_y"))
      b.q_a_given_y = j.at("q_a_given_y").get<std::vector<std::vector<double>>>();
    if (j.contains("q_y_given_a"))
      b.q_y_given_a = j.at("q_y_given_a").get<std::vector<std::vector<double>>>();
    if (j.contains("q_ay")) b.q_ay = j.at("q_ay").get<std::vector<double>>();
    if (j.contains("q_a_ind"))
      b.q_a_ind = j.at("q_a_ind").get<std::vector<std::array<double, 2>>>();
    if (j.contains("provenance")) {
      const json& p = j.at("provenance");
      b.provenance.model = p.value("model", std::string());
      b.provenance.prompt_hashes =
          p.value("prompt_hashes", std::vector<std::string>());
      b.provenance.timestamp = p.value("timestamp", std::string());
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("bundle record: ") + e.what());
  }
  return b;
}

void WriteBundlesJsonl(const std::string& path,
                       const std::vector<LogitBundle>& bundles) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  for (const LogitBundle& b : bundles) out << BundleToJson(b).dump() << '\n';
}

std::vector<LogitBundle> ReadBundlesJsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<LogitBundle> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(BundleFromJson(json::parse(line)));
    } catch (const json::exception& e) {
      throw DataError(path + ": " + e.what());
    }
  }
  return out;
}

}  // namespace fairpost
