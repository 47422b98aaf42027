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

// Multiple-choice prompt templates and per-example query planning.

#ifndef FAIRPOST_PROMPTKIT_H_
#define FAIRPOST_PROMPTKIT_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fairpost/datahub.h"
#include "json.hpp"

namespace fairpost::promptkit {

inline constexpr std::string_view kExamplePlaceholder = "{example}";
inline constexpr std::string_view kConditionPlaceholder = "{class_condition}";

// What the answer options of a template enumerate.
enum class TargetKind {
  kY,           // class index
  kA,           // group index
  kAGivenY,     // group index, conditioned on a hypothetical class
  kAYJoint,     // flat (group, class) index a * K + k
  kAIndicator,  // 0 = not a member of group i, 1 = member
  kYGivenA,     // class index, conditioned on a hypothetical group
};

const char* TargetKindName(TargetKind kind);
TargetKind TargetKindFromString(const std::string& s);

struct Option {
  char letter;
  int target;
};

class PromptTemplate {
 public:
  // Throws a config error unless: the body holds {example} exactly once,
  // conditional kinds hold {class_condition}, letters are unique in A..Z,
  // and targets are unique and nonnegative.
  static PromptTemplate Create(std::string body, std::vector<Option> options,
                               TargetKind kind, int indicator = -1);
  // Letters A, B, C, ... map to targets 0, 1, 2, ...
  static PromptTemplate Positional(std::string body, TargetKind kind,
                                   int num_targets, int indicator = -1);

  const std::string& body() const { return body_; }
  const std::vector<Option>& options() const { return options_; }
  TargetKind kind() const { return kind_; }
  // Group index for kAIndicator templates, -1 otherwise.
  int indicator() const { return indicator_; }
  bool requires_condition() const {
    return kind_ == TargetKind::kAGivenY || kind_ == TargetKind::kYGivenA;
  }
  std::vector<std::string> letters() const;

 private:
  PromptTemplate() = default;
  std::string body_;
  std::vector<Option> options_;
  TargetKind kind_ = TargetKind::kY;
  int indicator_ = -1;
};

// Substitutes the serialized example (and the condition text, when the
// template is conditional). Nothing else in the body changes.
std::string Render(const PromptTemplate& tmpl, std::string_view serialized,
                   std::optional<std::string_view> class_condition =
                       std::nullopt);
std::string Render(const PromptTemplate& tmpl, const datahub::Example& example,
                   std::optional<std::string_view> class_condition =
                       std::nullopt);

enum class Strategy { kJoint, kDecomposed, kCondIndep, kPerGroupIndicator,
                      kYOnly };

const char* StrategyName(Strategy s);
Strategy StrategyFromString(const std::string& s);

struct ElicitationPlan {
  Strategy strategy = Strategy::kYOnly;
  int num_classes = 2;
  int num_groups = 2;
  // Decomposed only: factor as Pr(A|X) Pr(Y|A,X) instead of the default
  // Pr(Y|X) Pr(A|Y,X).
  bool swapped = false;
  std::vector<PromptTemplate> templates;
  // Decomposed only: one text per hypothetical class (per group when
  // swapped), used by templates[1 + i].
  std::vector<std::string> condition_texts;

  // Throws a config error when the template count or kinds do not match
  // the strategy.
  void Validate() const;

  static ElicitationPlan Joint(PromptTemplate joint, int num_classes,
                               int num_groups);
  static ElicitationPlan Decomposed(PromptTemplate y, PromptTemplate a_given_y,
                                    std::vector<std::string> condition_texts,
                                    int num_groups);
  static ElicitationPlan DecomposedSwapped(
      PromptTemplate a, PromptTemplate y_given_a,
      std::vector<std::string> condition_texts, int num_classes);
  static ElicitationPlan CondIndep(PromptTemplate y, PromptTemplate a);
  static ElicitationPlan PerGroupIndicator(
      PromptTemplate y, std::vector<PromptTemplate> indicators);
  static ElicitationPlan YOnly(PromptTemplate y, int num_groups);
};

struct PlannedQuery {
  std::string query_id;
  std::string prompt;
  TargetKind kind;
  int template_index = 0;
  std::optional<int> condition_index;
};

// Deterministic hash of (example id, strategy, template index, condition).
std::string QueryId(std::string_view example_id, Strategy strategy,
                    int template_index, std::optional<int> condition_index);

std::vector<PlannedQuery> PlanQueries(const ElicitationPlan& plan,
                                      const datahub::Example& example);

// Number of queries per example the strategy issues.
int QueriesPerExample(Strategy strategy, int num_classes, int num_groups,
                      bool swapped = false);

// Template file = plain-text body at `path`, metadata at the same path with
// a .json extension: {"target_kind", "options", "indicator",
// "condition_texts", "group_substitutions"}.
struct LoadedTemplate {
  std::vector<PromptTemplate> templates;  // > 1 when group_substitutions
  std::vector<std::string> condition_texts;
};
LoadedTemplate LoadTemplate(const std::string& path);

// Builds a plan from the run-config "elicitation" section; template paths
// are resolved against base_dir.
ElicitationPlan PlanFromJson(const nlohmann::json& j,
                             const std::string& base_dir, int num_classes,
                             int num_groups);

// Generic templates for synthetic data; the oracle backend ignores wording.
ElicitationPlan DefaultPlan(Strategy strategy, int num_classes,
                            int num_groups);

}  // namespace fairpost::promptkit

#endif  // FAIRPOST_PROMPTKIT_H_
