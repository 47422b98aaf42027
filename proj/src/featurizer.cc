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

#include "fairpost/featurizer.h"

#include <bit>
#include <cstring>
#include <fstream>

namespace fairpost::featurizer {
namespace {

using nlohmann::json;
using promptkit::Strategy;

constexpr char kMagic[8] = {'F', 'P', 'F', 'E', 'A', 'T', '0', '1'};

void CheckLength(std::span<const double> v, size_t want, const char* what) {
  if (v.size() != want)
    throw DataError(std::string(what) + " has length " +
                    std::to_string(v.size()) + ", expected " +
                    std::to_string(want));
}

template <typename T>
void PutRaw(std::ostream& out, T v) {
  static_assert(std::endian::native == std::endian::little);
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T GetRaw(std::istream& in, const std::string& path) {
  T v;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(v)))
    throw DataError(path + ": truncated feature file");
  return v;
}

}  // namespace

const char* FeatureKindName(FeatureKind kind) {
  return kind == FeatureKind::kJoint ? "joint" : "y_only";
}

FeatureKind FeatureKindFromString(const std::string& s) {
  if (s == "joint") return FeatureKind::kJoint;
  if (s == "y_only") return FeatureKind::kYOnly;
  throw ConfigError("unknown feature kind '" + s + "'");
}

json FeatureLayout::ToJson() const {
  return {{"num_classes", num_classes},
          {"num_groups", num_groups},
          {"overlapping", overlapping},
          {"kind", FeatureKindName(kind)}};
}

FeatureLayout FeatureLayout::FromJson(const json& j) {
  FeatureLayout l;
  try {
    l.num_classes = j.at("num_classes").get<int>();
    l.num_groups = j.at("num_groups").get<int>();
    l.overlapping = j.at("overlapping").get<bool>();
    l.kind = FeatureKindFromString(j.at("kind").get<std::string>());
  } catch (const json::exception& e) {
    throw DataError(std::string("feature layout: ") + e.what());
  }
  return l;
}

JointFeature ComposeJoint(std::span<const double> q_ay, int num_classes,
                          int num_groups) {
  CheckLength(q_ay, static_cast<size_t>(num_classes) * num_groups, "q_AY");
  return {{q_ay.begin(), q_ay.end()},
          {num_classes, num_groups, false, FeatureKind::kJoint}};
}

JointFeature ComposeCondIndep(std::span<const double> q_a,
                              std::span<const double> q_y) {
  if (q_a.empty() || q_y.empty()) throw DataError("empty logit vector");
  const int g = q_a.size(), k = q_y.size();
  JointFeature f{std::vector<double>(g * k), {k, g, false, FeatureKind::kJoint}};
  for (int a = 0; a < g; ++a)
    for (int c = 0; c < k; ++c) f.q[a * k + c] = q_a[a] + q_y[c];
  return f;
}

JointFeature ComposeDecomposed(std::span<const double> q_y,
                               const std::vector<std::vector<double>>& conditionals) {
  const int k = q_y.size();
  if (k == 0) throw DataError("empty q_Y");
  if (static_cast<int>(conditionals.size()) != k)
    throw DataError("expected one conditional group vector per class");
  const int g = conditionals[0].size();
  if (g == 0) throw DataError("empty conditional group vector");
  JointFeature f{std::vector<double>(g * k), {k, g, false, FeatureKind::kJoint}};
  for (int c = 0; c < k; ++c) {
    CheckLength(conditionals[c], g, "q_A|Y");
    const double lse = LogSumExp(conditionals[c]);
    for (int a = 0; a < g; ++a)
      f.q[a * k + c] = conditionals[c][a] - lse + q_y[c];
  }
  return f;
}

JointFeature ComposeDecomposedSwapped(
    std::span<const double> q_a,
    const std::vector<std::vector<double>>& conditionals) {
  const int g = q_a.size();
  if (g == 0) throw DataError("empty q_A");
  if (static_cast<int>(conditionals.size()) != g)
    throw DataError("expected one conditional class vector per group");
  const int k = conditionals[0].size();
  if (k == 0) throw DataError("empty conditional class vector");
  JointFeature f{std::vector<double>(g * k), {k, g, false, FeatureKind::kJoint}};
  for (int a = 0; a < g; ++a) {
    CheckLength(conditionals[a], k, "q_Y|A");
    const double lse = LogSumExp(conditionals[a]);
    for (int c = 0; c < k; ++c)
      f.q[a * k + c] = q_a[a] + conditionals[a][c] - lse;
  }
  return f;
}

JointFeature ComposeOverlapping(std::span<const double> q_y,
                                const std::vector<std::array<double, 2>>& indicators) {
  const int k = q_y.size();
  const int g = indicators.size();
  if (k == 0) throw DataError("empty q_Y");
  if (g == 0) throw DataError("no group indicators");
  if (g > kMaxOverlappingGroups)
    throw ConfigError("overlapping features over " + std::to_string(g) +
                      " groups would need 2^" + std::to_string(g) +
                      " cells; the limit is " +
                      std::to_string(kMaxOverlappingGroups) + " groups");
  const int cells = 1 << g;
  JointFeature f{std::vector<double>(static_cast<size_t>(cells) * k),
                 {k, g, true, FeatureKind::kJoint}};
  for (int mask = 0; mask < cells; ++mask) {
    double s = 0.0;
    for (int i = 0; i < g; ++i) s += indicators[i][(mask >> i) & 1];
    for (int c = 0; c < k; ++c) f.q[mask * k + c] = q_y[c] + s;
  }
  return f;
}

JointFeature YOnlyFeature(std::span<const double> q_y) {
  if (q_y.empty()) throw DataError("empty q_Y");
  const int k = q_y.size();
  return {{q_y.begin(), q_y.end()}, {k, 0, false, FeatureKind::kYOnly}};
}

JointFeature Featurize(const LogitBundle& b, int num_classes, int num_groups) {
  b.Validate(num_classes, num_groups);
  JointFeature f;
  switch (b.strategy) {
    case Strategy::kJoint:
      return ComposeJoint(*b.q_ay, num_classes, num_groups);
    case Strategy::kCondIndep:
      return ComposeCondIndep(*b.q_a, *b.q_y);
    case Strategy::kDecomposed:
      return b.swapped ? ComposeDecomposedSwapped(*b.q_a, *b.q_y_given_a)
                       : ComposeDecomposed(*b.q_y, *b.q_a_given_y);
    case Strategy::kPerGroupIndicator:
      return ComposeOverlapping(*b.q_y, *b.q_a_ind);
    case Strategy::kYOnly:
      f = YOnlyFeature(*b.q_y);
      f.layout.num_groups = num_groups;
      return f;
  }
  throw DataError("unknown strategy");
}

FeatureSet FeaturizeAll(const std::vector<LogitBundle>& bundles,
                        int num_classes, int num_groups) {
  FeatureSet set;
  if (bundles.empty()) throw DataError("no logit bundles to featurize");
  for (size_t i = 0; i < bundles.size(); ++i) {
    JointFeature f = Featurize(bundles[i], num_classes, num_groups);
    if (i == 0) {
      set.layout = f.layout;
      set.rows.resize(bundles.size(), f.q.size());
    } else if (!(f.layout == set.layout)) {
      throw DataError("bundle " + bundles[i].example_id +
                      " has a different strategy from the first bundle");
    }
    set.ids.push_back(bundles[i].example_id);
    for (size_t c = 0; c < f.q.size(); ++c) set.rows(i, c) = f.q[c];
  }
  return set;
}

void WriteFeaturesJsonl(const std::string& path, const FeatureSet& set) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  const json layout = set.layout.ToJson();
  for (int i = 0; i < set.size(); ++i) {
    std::vector<double> q(set.rows.cols());
    for (size_t c = 0; c < q.size(); ++c) q[c] = set.rows(i, c);
    // nlohmann prints doubles with round-trip precision.
    out << json({{"id", set.ids[i]}, {"layout", layout}, {"q", q}}).dump()
        << '\n';
  }
}

FeatureSet ReadFeaturesJsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  FeatureSet set;
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      FeatureLayout l = FeatureLayout::FromJson(j.at("layout"));
      if (rows.empty()) {
        set.layout = l;
      } else if (!(l == set.layout)) {
        throw DataError(path + ":" + std::to_string(lineno) +
                        ": layout differs from the first row");
      }
      std::vector<double> q = j.at("q").get<std::vector<double>>();
      if (static_cast<int>(q.size()) != l.size())
        throw DataError(path + ":" + std::to_string(lineno) +
                        ": feature length does not match layout");
      set.ids.push_back(j.at("id").get<std::string>());
      rows.push_back(std::move(q));
    } catch (const json::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (rows.empty()) throw DataError(path + ": no feature rows");
  set.rows.resize(rows.size(), rows[0].size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t c = 0; c < rows[i].size(); ++c) set.rows(i, c) = rows[i][c];
  return set;
}

void WriteFeaturesBinary(const std::string& path, const FeatureSet& set) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  out.write(kMagic, sizeof(kMagic));
  PutRaw<int32_t>(out, set.layout.num_classes);
  PutRaw<int32_t>(out, set.layout.num_groups);
  PutRaw<int32_t>(out, set.layout.overlapping ? 1 : 0);
  PutRaw<int32_t>(out, set.layout.kind == FeatureKind::kJoint ? 0 : 1);
  PutRaw<uint64_t>(out, set.size());
  PutRaw<uint64_t>(out, set.rows.cols());
  for (int i = 0; i < set.size(); ++i) {
    PutRaw<uint32_t>(out, set.ids[i].size());
    out.write(set.ids[i].data(), set.ids[i].size());
    for (Eigen::Index c = 0; c < set.rows.cols(); ++c)
      PutRaw<double>(out, set.rows(i, c));
  }
  if (!out) throw DataError("write failed: " + path);
}

FeatureSet ReadFeaturesBinary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) ||
      std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw DataError(path + ": not a feature file");
  FeatureSet set;
  set.layout.num_classes = GetRaw<int32_t>(in, path);
  set.layout.num_groups = GetRaw<int32_t>(in, path);
  set.layout.overlapping = GetRaw<int32_t>(in, path) != 0;
  set.layout.kind =
      GetRaw<int32_t>(in, path) == 0 ? FeatureKind::kJoint : FeatureKind::kYOnly;
  const uint64_t n = GetRaw<uint64_t>(in, path);
  const uint64_t dim = GetRaw<uint64_t>(in, path);
  if (static_cast<int>(dim) != set.layout.size())
    throw DataError(path + ": feature length does not match layout");
  set.rows.resize(n, dim);
  for (uint64_t i = 0; i < n; ++i) {
    const uint32_t len = GetRaw<uint32_t>(in, path);
    std::string id(len, '\0');
    if (!in.read(id.data(), len)) throw DataError(path + ": truncated feature file");
    set.ids.push_back(std::move(id));
    for (uint64_t c = 0; c < dim; ++c) set.rows(i, c) = GetRaw<double>(in, path);
  }
  return set;
}

}  // namespace fairpost::featurizer
