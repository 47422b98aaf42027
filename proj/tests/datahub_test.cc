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
#include <filesystem>
#include <set>
#include <sstream>

#include "gtest/gtest.h"

namespace fairpost::datahub {
namespace {

using nlohmann::json;

DatasetSchema SmallSchema() {
  return DatasetSchema::FromJson(json::parse(R"({
    "columns": [
      {"name": "age", "kind": "numeric", "display": "Age"},
      {"name": "job", "kind": "categorical", "display": "Occupation"},
      {"name": "sex", "kind": "categorical"},
      {"name": "hours", "kind": "numeric", "display": "Hours worked per week"},
      {"name": "label", "kind": "categorical"}
    ],
    "label_column": "label", "label_values": ["no", "yes"],
    "group_column": "sex", "group_values": ["F", "M"]
  })"));
}

TEST(LoadCsvTest, ParsesLabelsAndGroups) {
  const std::string csv =
      "age,job,sex,hours,label\n"
      "39,clerk,M,40,no\n"
      "50,\"exec, senior\",F,13,yes\n"
      "28,clerk,F,40,yes\n";
  std::vector<Example> ex = ParseExamples(csv, SmallSchema());
  ASSERT_EQ(ex.size(), 3u);
  EXPECT_EQ(ex[0].y, 0);
  EXPECT_EQ(ex[0].a.index(), 1);
  EXPECT_EQ(ex[1].y, 1);
  EXPECT_EQ(ex[1].a.index(), 0);
  EXPECT_EQ(ex[1].features.at("job"), "exec, senior");
  EXPECT_EQ(ex[2].y, 1);
  EXPECT_EQ(ex[2].a.index(), 0);
}

TEST(LoadCsvTest, UnknownLabelNamesRowAndValue) {
  const std::string csv = "age,job,sex,hours,label\n39,clerk,M,40,maybe\n";
  try {
    ParseExamples(csv, SmallSchema());
    FAIL() << "expected a data error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kData);
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("maybe"), std::string::npos);
  }
}

TEST(LoadCsvTest, MissingGroupIsRejected) {
  const std::string csv = "age,job,sex,hours,label\n39,clerk,?,40,no\n";
  EXPECT_THROW(ParseExamples(csv, SmallSchema()), Error);
}

TEST(LoadCsvTest, HeaderMustMatchSchema) {
  const std::string csv = "age,job,sex,label\n39,clerk,M,no\n";
  EXPECT_THROW(ParseExamples(csv, SmallSchema()), Error);
}

TEST(LoadCsvTest, IndicatorColumnsBecomeBitVector) {
  DatasetSchema s = DatasetSchema::FromJson(json::parse(R"({
    "columns": [
      {"name": "text", "kind": "text"},
      {"name": "toxic", "kind": "categorical"},
      {"name": "christian", "kind": "numeric"},
      {"name": "jewish", "kind": "numeric"},
      {"name": "muslim", "kind": "numeric"},
      {"name": "buddhist", "kind": "numeric"},
      {"name": "other_religion", "kind": "numeric"}
    ],
    "label_column": "toxic", "label_values": ["0", "1"],
    "group_columns": ["christian", "jewish", "muslim", "buddhist",
                      "other_religion"],
    "overlapping": true
  })"));
  const std::string csv =
      "text,toxic,christian,jewish,muslim,buddhist,other_religion\n"
      "\"hello, world\",1,1,0,1,0,0\n";
  std::vector<Example> ex = ParseExamples(csv, s);
  ASSERT_EQ(ex.size(), 1u);
  EXPECT_TRUE(ex[0].a.overlapping);
  EXPECT_EQ(ex[0].a.value, 0b00101u);
  EXPECT_EQ(s.num_groups(), 5);
  EXPECT_EQ(ex[0].serialized, "text: hello, world");
}

TEST(SerializeTest, AdultMappingReplacesCodes) {
  const std::string dir = "templates/adult/";
  DatasetSchema schema =
      DatasetSchema::FromJson(json::parse(ReadFile(dir + "schema.json")));
  CodeMapping mapping = LoadMapping(dir + "mapping.json");
  const std::string csv =
      "age,workclass,fnlwgt,education,education-num,marital-status,"
      "occupation,relationship,race,sex,capital-gain,capital-loss,"
      "hours-per-week,native-country,income\n"
      "39,State-gov,77516,Bachelors,13,Never-married,Adm-clerical,"
      "Not-in-family,White,Male,2174,0,40,United-States,<=50K\n";
  std::vector<Example> ex = ParseExamples(csv, schema, &mapping);
  ASSERT_EQ(ex.size(), 1u);
  const std::string& s = ex[0].serialized;
  EXPECT_NE(s.find("Class of worker: State government employee"),
            std::string::npos);
  EXPECT_EQ(s,
            "Age: 39\n"
            "Class of worker: State government employee\n"
            "Educational attainment: Bachelor's degree\n"
            "Education level (numeric): 13\n"
            "Marital status: Never married or under 15 years old\n"
            "Occupation: Administrative support and clerical workers\n"
            "Relationship: Other nonrelative\n"
            "Capital gain in the previous year: 2174\n"
            "Capital loss in the previous year: 0\n"
            "Hours worked per week: 40\n"
            "Country of origin: United States");
  // Sensitive and dropped columns never reach the text.
  EXPECT_EQ(s.find("Male"), std::string::npos);
  EXPECT_EQ(s.find("White"), std::string::npos);
  EXPECT_EQ(s.find("77516"), std::string::npos);
}

TEST(SerializeTest, MissingColumnIsOmitted) {
  const std::string csv =
      "age,job,sex,hours,label\n39,clerk,M,40,no\n39,?,M,40,no\n";
  std::vector<Example> ex = ParseExamples(csv, SmallSchema());
  auto lines = [](const std::string& s) {
    return std::count(s.begin(), s.end(), '\n') + 1;
  };
  EXPECT_EQ(lines(ex[0].serialized), 3);
  EXPECT_EQ(lines(ex[1].serialized), 2);
  EXPECT_EQ(ex[1].serialized.find("Occupation"), std::string::npos);
}

TEST(SerializeTest, NumericRowWithEmptyMapping) {
  DatasetSchema s = DatasetSchema::FromJson(json::parse(R"({
    "columns": [
      {"name": "age", "kind": "numeric", "display": "Age"},
      {"name": "hours", "kind": "numeric", "display": "Hours worked per week"},
      {"name": "sex", "kind": "categorical"},
      {"name": "label", "kind": "categorical"}
    ],
    "label_column": "label", "label_values": ["no", "yes"],
    "group_column": "sex", "group_values": ["F", "M"]
  })"));
  CodeMapping empty;
  std::vector<Example> ex =
      ParseExamples("age,hours,sex,label\n39,40,M,no\n", s, &empty);
  EXPECT_EQ(ex[0].serialized, "Age: 39\nHours worked per week: 40");
}

TEST(SerializeTest, UnmappedCodeIsAnError) {
  CodeMapping mapping = {{"job", {{"clerk", "Clerical worker"}}}};
  EXPECT_THROW(ParseExamples("age,job,sex,hours,label\n39,pilot,M,40,no\n",
                             SmallSchema(), &mapping),
               Error);
}

TEST(SerializeTest, InjectiveOnDifferingRows) {
  const std::string csv =
      "age,job,sex,hours,label\n"
      "39,clerk,M,40,no\n"
      "39,clerk,M,41,no\n"
      "38,clerk,M,40,no\n"
      "39,clerks,M,40,no\n"
      "39,,M,40,no\n";
  std::vector<Example> ex = ParseExamples(csv, SmallSchema());
  std::set<std::string> texts;
  for (const Example& e : ex) texts.insert(e.serialized);
  EXPECT_EQ(texts.size(), ex.size());
}

std::vector<Example> NumberedExamples(int n, int num_classes = 2) {
  std::vector<Example> out(n);
  for (int i = 0; i < n; ++i) {
    out[i].id = "e" + std::to_string(i);
    out[i].y = i % num_classes;
    out[i].a = GroupLabel::Disjoint(i % 2);
  }
  return out;
}

std::vector<std::string> Ids(const std::vector<Example>& v) {
  std::vector<std::string> ids;
  for (const Example& e : v) ids.push_back(e.id);
  return ids;
}

TEST(SplitTest, DeterministicDisjointExactSizes) {
  std::vector<Example> ex = NumberedExamples(10);
  Splits a = Split(ex, {5, 2, 3}, 11);
  Splits b = Split(ex, {5, 2, 3}, 11);
  EXPECT_EQ(Ids(a.train), Ids(b.train));
  EXPECT_EQ(Ids(a.val), Ids(b.val));
  EXPECT_EQ(Ids(a.test), Ids(b.test));
  EXPECT_EQ(a.train.size(), 5u);
  EXPECT_EQ(a.val.size(), 2u);
  EXPECT_EQ(a.test.size(), 3u);
  std::set<std::string> all;
  for (auto* part : {&a.train, &a.val, &a.test})
    for (const Example& e : *part) all.insert(e.id);
  EXPECT_EQ(all.size(), 10u);
}

TEST(SplitTest, OversizedRequestIsAnError) {
  EXPECT_THROW(Split(NumberedExamples(10), {8, 2, 3}, 1), Error);
}

TEST(SplitTest, DifferentSeedsGiveDifferentPartitions) {
  std::vector<Example> ex = NumberedExamples(100);
  Splits a = Split(ex, {50, 20, 30}, 1);
  Splits b = Split(ex, {50, 20, 30}, 2);
  EXPECT_NE(Ids(a.train), Ids(b.train));
}

TEST(BaseRateTest, Examples) {
  std::vector<int> even = {0, 0, 1, 1};
  std::vector<int> skew = {0, 0, 0, 1};
  EXPECT_DOUBLE_EQ(BaseRate(even, 2), 0.5);
  EXPECT_DOUBLE_EQ(BaseRate(skew, 2), 0.75);
  std::vector<int> many;
  for (int i = 0; i < 40; ++i) many.push_back(7);
  for (int i = 0; i < 60; ++i) many.push_back(i % 27 < 7 ? i % 27 : i % 27 + 1);
  EXPECT_DOUBLE_EQ(BaseRate(many, 28), 0.40);
  EXPECT_THROW(BaseRate(std::vector<int>{}, 2), Error);
}

TEST(BaseRateTest, MajorityTieTakesLowestIndex) {
  std::vector<int> tie = {1, 1, 2, 2, 0};
  EXPECT_EQ(MajorityClass(tie, 3), 1);
}

TEST(EncoderTest, OneHotBlockSumsToOne) {
  const std::string csv =
      "age,job,sex,hours,label\n"
      "1,a,M,5,no\n2,b,F,5,no\n3,c,M,5,yes\n";
  std::vector<Example> ex = ParseExamples(csv, SmallSchema());
  TabularEncoder enc;
  Diagnostics diag;
  enc.Fit(ex, SmallSchema(), &diag);
  Eigen::MatrixXd x = enc.Transform(ex);
  // age, job (3 codes), hours.
  ASSERT_EQ(x.cols(), 5);
  for (int r = 0; r < 3; ++r) EXPECT_DOUBLE_EQ(x.row(r).segment(1, 3).sum(), 1.0);
  // age [1, 2, 3] standardized with population statistics.
  EXPECT_NEAR(x.col(0).mean(), 0.0, 1e-12);
  EXPECT_NEAR(x.col(0).squaredNorm() / 3.0, 1.0, 1e-12);
  // hours is constant: encoded as 0 with a warning.
  EXPECT_DOUBLE_EQ(x.col(4).cwiseAbs().sum(), 0.0);
  ASSERT_EQ(diag.warnings.size(), 1u);
  EXPECT_NE(diag.warnings[0].find("hours"), std::string::npos);
}

TEST(EncoderTest, AdultSchemaGives97Dimensions) {
  const std::string dir = "templates/adult/";
  DatasetSchema schema =
      DatasetSchema::FromJson(json::parse(ReadFile(dir + "schema.json")));
  CodeMapping mapping = LoadMapping(dir + "mapping.json");
  // One row per country; the other categorical columns cycle through all
  // of their codes.
  std::vector<std::vector<std::string>> codes;
  const std::vector<std::string> cat_cols = {
      "workclass", "education", "marital-status", "occupation",
      "relationship", "native-country"};
  for (const std::string& c : cat_cols) {
    std::vector<std::string> v;
    for (const auto& [code, desc] : mapping.at(c)) v.push_back(code);
    codes.push_back(v);
  }
  std::ostringstream csv;
  csv << "age,workclass,fnlwgt,education,education-num,marital-status,"
         "occupation,relationship,race,sex,capital-gain,capital-loss,"
         "hours-per-week,native-country,income\n";
  for (int r = 0; r < 41; ++r) {
    auto pick = [&](int c) {
      const std::string& s = codes[c][r % codes[c].size()];
      return s.find(',') == std::string::npos ? s : "\"" + s + "\"";
    };
    csv << 20 + r << ',' << pick(0) << ",1000," << pick(1) << ',' << r % 16
        << ',' << pick(2) << ',' << pick(3) << ',' << pick(4) << ",White,"
        << (r % 2 ? "Male" : "Female") << ',' << r * 10 << ',' << r % 3 << ','
        << 30 + r % 20 << ',' << pick(5) << ',' << (r % 3 ? "<=50K" : ">50K")
        << '\n';
  }
  std::vector<Example> ex = ParseExamples(csv.str(), schema, &mapping);
  TabularEncoder enc;
  enc.Fit(ex, schema);
  EXPECT_EQ(enc.dimension(), 97);
  EXPECT_EQ(enc.Transform(ex).cols(), 97);
}

TEST(EncoderTest, TrainStandardizationProperty) {
  SyntheticSpec spec;
  spec.dim = 3;
  spec.weights = {0.25, 0.25, 0.25, 0.25};
  spec.means = {{0, 1, 2}, {3, 4, 5}, {-1, 0, 1}, {2, 2, 2}};
  spec.seed = 3;
  SyntheticData data = SynthGenerate(spec, 500);
  DatasetSchema schema = SyntheticSchema(spec);
  TabularEncoder enc;
  enc.Fit(data.examples, schema);
  Eigen::MatrixXd x = enc.Transform(data.examples);
  ASSERT_EQ(x.cols(), 3);
  for (int c = 0; c < 3; ++c) {
    const double m = x.col(c).mean();
    EXPECT_LE(std::abs(m), 1e-9);
    EXPECT_NEAR((x.col(c).array() - m).square().mean(), 1.0, 1e-9);
  }
}

TEST(JsonlTest, ExamplesRoundTrip) {
  const std::string csv =
      "age,job,sex,hours,label\n39,clerk,M,40,no\n50,?,F,13,yes\n";
  std::vector<Example> ex = ParseExamples(csv, SmallSchema());
  const std::string path =
      (std::filesystem::temp_directory_path() / "fairpost_examples.jsonl")
          .string();
  WriteExamplesJsonl(path, ex, 2);
  std::vector<Example> back = ReadExamplesJsonl(path);
  ASSERT_EQ(back.size(), ex.size());
  for (size_t i = 0; i < ex.size(); ++i) {
    EXPECT_EQ(back[i].id, ex[i].id);
    EXPECT_EQ(back[i].features, ex[i].features);
    EXPECT_EQ(back[i].serialized, ex[i].serialized);
    EXPECT_EQ(back[i].y, ex[i].y);
    EXPECT_EQ(back[i].a, ex[i].a);
  }
  std::filesystem::remove(path);
}

SyntheticSpec TwoByTwo(double sep) {
  SyntheticSpec spec;
  spec.dim = 2;
  spec.weights = {0.3, 0.2, 0.2, 0.3};
  spec.means = {{-sep, -sep}, {sep, -sep}, {-sep, sep}, {sep, sep}};
  spec.seed = 17;
  return spec;
}

TEST(SynthTest, IdenticalConditionalsGivePriorPosterior) {
  SyntheticSpec spec = TwoByTwo(0.0);
  SyntheticData data = SynthGenerate(spec, 50);
  for (const Example& e : data.examples) {
    std::vector<double> lj = data.posterior.LogJoint(FeatureVector(e, 2));
    for (int c = 0; c < 4; ++c)
      EXPECT_NEAR(std::exp(lj[c]), spec.weights[c], 1e-12);
  }
}

TEST(SynthTest, SeparatedGaussiansArePredictable) {
  SyntheticData data = SynthGenerate(TwoByTwo(4.0), 2000);
  int correct = 0;
  for (const Example& e : data.examples) {
    std::vector<double> lj = data.posterior.LogJoint(FeatureVector(e, 2));
    const int cell = std::max_element(lj.begin(), lj.end()) - lj.begin();
    correct += (cell == e.a.index() * 2 + e.y);
  }
  EXPECT_GE(correct / 2000.0, 0.95);
}

TEST(SynthTest, PosteriorIsNormalized) {
  SyntheticSpec spec = TwoByTwo(1.0);
  spec.covariances = {{1, 0.3, 0.3, 2}, {1, 0, 0, 1}, {0.5, 0, 0, 0.5},
                      {2, -0.4, -0.4, 1}};
  SyntheticData data = SynthGenerate(spec, 500);
  for (const Example& e : data.examples) {
    std::vector<double> lj = data.posterior.LogJoint(FeatureVector(e, 2));
    EXPECT_NEAR(LogSumExp(lj), 0.0, 1e-10);
  }
}

TEST(SynthTest, DeterministicGivenSeed) {
  SyntheticData a = SynthGenerate(TwoByTwo(1.0), 20);
  SyntheticData b = SynthGenerate(TwoByTwo(1.0), 20);
  for (int i = 0; i < 20; ++i) {
    EXPECT_EQ(a.examples[i].features, b.examples[i].features);
    EXPECT_EQ(a.examples[i].y, b.examples[i].y);
  }
}

TEST(SynthTest, OverlappingLabelsAreMasks) {
  SyntheticSpec spec;
  spec.num_groups = 2;
  spec.overlapping = true;
  spec.dim = 1;
  spec.weights.assign(8, 0.125);
  for (int c = 0; c < 8; ++c) spec.means.push_back({static_cast<double>(c)});
  SyntheticData data = SynthGenerate(spec, 200);
  std::set<uint32_t> masks;
  for (const Example& e : data.examples) {
    EXPECT_TRUE(e.a.overlapping);
    EXPECT_LT(e.a.value, 4u);
    masks.insert(e.a.value);
  }
  EXPECT_EQ(masks.size(), 4u);
}

}  // namespace
}  // namespace fairpost::datahub
