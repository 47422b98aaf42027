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

#include "fairpost/promptkit.h"

#include <algorithm>
#include <filesystem>
#include <set>

namespace fairpost::promptkit {
namespace {

using nlohmann::json;

size_t CountOccurrences(std::string_view haystack, std::string_view needle) {
  size_t count = 0;
  for (size_t pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size()))
    ++count;
  return count;
}

std::string ReplaceAll(std::string s, std::string_view from,
                       std::string_view to) {
  if (from.empty()) return s;
  std::string out;
  size_t start = 0;
  for (size_t pos = s.find(from); pos != std::string::npos;
       pos = s.find(from, start)) {
    out.append(s, start, pos - start);
    out.append(to);
    start = pos + from.size();
  }
  out.append(s, start, std::string::npos);
  return out;
}

void Expect(bool cond, const std::string& message) {
  if (!cond) throw ConfigError("elicitation plan: " + message);
}

void ExpectTemplate(const PromptTemplate& t, TargetKind kind, int num_targets,
                    const std::string& role) {
  Expect(t.kind() == kind, role + " template has target kind " +
                               TargetKindName(t.kind()) + ", expected " +
                               TargetKindName(kind));
  Expect(static_cast<int>(t.options().size()) == num_targets,
         role + " template has " + std::to_string(t.options().size()) +
             " options, expected " + std::to_string(num_targets));
  for (const Option& o : t.options())
    Expect(o.target < num_targets, role + " template option " +
                                       std::string(1, o.letter) +
                                       " targets an out-of-range index");
}

}  // namespace

const char* TargetKindName(TargetKind kind) {
  switch (kind) {
    case TargetKind::kY:
      return "Y";
    case TargetKind::kA:
      return "A";
    case TargetKind::kAGivenY:
      return "A_given_Y";
    case TargetKind::kAYJoint:
      return "AY_joint";
    case TargetKind::kAIndicator:
      return "A_indicator";
    case TargetKind::kYGivenA:
      return "Y_given_A";
  }
  return "?";
}

TargetKind TargetKindFromString(const std::string& s) {
  for (TargetKind k :
       {TargetKind::kY, TargetKind::kA, TargetKind::kAGivenY,
        TargetKind::kAYJoint, TargetKind::kAIndicator, TargetKind::kYGivenA}) {
    if (s == TargetKindName(k)) return k;
  }
  throw ConfigError("unknown target kind: " + s);
}

PromptTemplate PromptTemplate::Create(std::string body,
                                      std::vector<Option> options,
                                      TargetKind kind, int indicator) {
  if (CountOccurrences(body, kExamplePlaceholder) != 1)
    throw ConfigError("template body must contain {example} exactly once");
  const bool conditional =
      kind == TargetKind::kAGivenY || kind == TargetKind::kYGivenA;
  if (conditional && CountOccurrences(body, kConditionPlaceholder) == 0)
    throw ConfigError(std::string("template of kind ") + TargetKindName(kind) +
                      " must contain {class_condition}");
  if (options.empty()) throw ConfigError("template has no options");
  std::set<char> letters;
  std::set<int> targets;
  for (const Option& o : options) {
    if (o.letter < 'A' || o.letter > 'Z')
      throw ConfigError("option letters must be in A..Z");
    if (!letters.insert(o.letter).second)
      throw ConfigError(std::string("duplicate option letter ") + o.letter);
    if (o.target < 0 || !targets.insert(o.target).second)
      throw ConfigError("option targets must be unique and nonnegative");
  }
  if (kind == TargetKind::kAIndicator && indicator < 0)
    throw ConfigError("indicator template needs a group index");
  PromptTemplate t;
  t.body_ = std::move(body);
  t.options_ = std::move(options);
  t.kind_ = kind;
  t.indicator_ = kind == TargetKind::kAIndicator ? indicator : -1;
  return t;
}

PromptTemplate PromptTemplate::Positional(std::string body, TargetKind kind,
                                          int num_targets, int indicator) {
  if (num_targets > 26)
    throw ConfigError("more than 26 options cannot be lettered A..Z");
  std::vector<Option> options;
  for (int i = 0; i < num_targets; ++i)
    options.push_back({static_cast<char>('A' + i), i});
  return Create(std::move(body), std::move(options), kind, indicator);
}

std::vector<std::string> PromptTemplate::letters() const {
  std::vector<std::string> out;
  for (const Option& o : options_) out.emplace_back(1, o.letter);
  return out;
}

std::string Render(const PromptTemplate& tmpl, std::string_view serialized,
                   std::optional<std::string_view> class_condition) {
  if (tmpl.requires_condition() && !class_condition)
    throw ConfigError("template requires a {class_condition} value");
  if (!tmpl.requires_condition() && class_condition)
    throw ConfigError("template does not take a {class_condition} value");
  const std::string& body = tmpl.body();
  std::string out;
  out.reserve(body.size() + serialized.size());
  for (size_t i = 0; i < body.size();) {
    std::string_view rest(body.data() + i, body.size() - i);
    if (rest.starts_with(kExamplePlaceholder)) {
      out.append(serialized);
      i += kExamplePlaceholder.size();
    } else if (class_condition && rest.starts_with(kConditionPlaceholder)) {
      out.append(*class_condition);
      i += kConditionPlaceholder.size();
    } else {
      out.push_back(body[i]);
      ++i;
    }
  }
  return out;
}

std::string Render(const PromptTemplate& tmpl, const datahub::Example& example,
                   std::optional<std::string_view> class_condition) {
  return Render(tmpl, std::string_view(example.serialized), class_condition);
}

const char* StrategyName(Strategy s) {
  switch (s) {
    case Strategy::kJoint:
      return "joint";
    case Strategy::kDecomposed:
      return "decomposed";
    case Strategy::kCondIndep:
      return "cond_indep";
    case Strategy::kPerGroupIndicator:
      return "per_group_indicator";
    case Strategy::kYOnly:
      return "y_only";
  }
  return "?";
}

Strategy StrategyFromString(const std::string& s) {
  for (Strategy k : {Strategy::kJoint, Strategy::kDecomposed,
                     Strategy::kCondIndep, Strategy::kPerGroupIndicator,
                     Strategy::kYOnly}) {
    if (s == StrategyName(k)) return k;
  }
  throw ConfigError("unknown elicitation strategy: " + s);
}

void ElicitationPlan::Validate() const {
  const int k = num_classes, g = num_groups;
  Expect(k >= 2, "need K >= 2");
  Expect(g >= 1, "need G >= 1");
  switch (strategy) {
    case Strategy::kJoint:
      Expect(templates.size() == 1, "joint strategy uses 1 template");
      Expect(g * k <= 26,
             "joint strategy needs G x K <= 26 options; use the decomposed "
             "strategy instead");
      ExpectTemplate(templates[0], TargetKind::kAYJoint, g * k, "joint");
      break;
    case Strategy::kDecomposed: {
      const int conds = swapped ? g : k;
      Expect(static_cast<int>(templates.size()) == 1 + conds,
             "decomposed strategy uses " + std::to_string(1 + conds) +
                 " templates");
      Expect(static_cast<int>(condition_texts.size()) == conds,
             "decomposed strategy needs one condition text per " +
                 std::string(swapped ? "group" : "class"));
      if (swapped) {
        ExpectTemplate(templates[0], TargetKind::kA, g, "group");
        for (int i = 1; i <= g; ++i)
          ExpectTemplate(templates[i], TargetKind::kYGivenA, k, "conditional");
      } else {
        ExpectTemplate(templates[0], TargetKind::kY, k, "label");
        for (int i = 1; i <= k; ++i)
          ExpectTemplate(templates[i], TargetKind::kAGivenY, g, "conditional");
      }
      break;
    }
    case Strategy::kCondIndep:
      Expect(templates.size() == 2, "cond_indep strategy uses 2 templates");
      ExpectTemplate(templates[0], TargetKind::kY, k, "label");
      ExpectTemplate(templates[1], TargetKind::kA, g, "group");
      break;
    case Strategy::kPerGroupIndicator:
      Expect(static_cast<int>(templates.size()) == 1 + g,
             "per_group_indicator strategy uses 1 + G templates");
      ExpectTemplate(templates[0], TargetKind::kY, k, "label");
      for (int i = 1; i <= g; ++i) {
        ExpectTemplate(templates[i], TargetKind::kAIndicator, 2, "indicator");
        Expect(templates[i].indicator() == i - 1,
               "indicator templates must be ordered by group");
      }
      break;
    case Strategy::kYOnly:
      Expect(templates.size() == 1, "y_only strategy uses 1 template");
      ExpectTemplate(templates[0], TargetKind::kY, k, "label");
      break;
  }
}

ElicitationPlan ElicitationPlan::Joint(PromptTemplate joint, int num_classes,
                                       int num_groups) {
  ElicitationPlan p;
  p.strategy = Strategy::kJoint;
  p.num_classes = num_classes;
  p.num_groups = num_groups;
  p.templates = {std::move(joint)};
  p.Validate();
  return p;
}

ElicitationPlan ElicitationPlan::Decomposed(
    PromptTemplate y, PromptTemplate a_given_y,
    std::vector<std::string> condition_texts, int num_groups) {
  ElicitationPlan p;
  p.strategy = Strategy::kDecomposed;
  p.num_classes = static_cast<int>(y.options().size());
  p.num_groups = num_groups;
  p.templates.push_back(std::move(y));
  for (int k = 0; k < p.num_classes; ++k) p.templates.push_back(a_given_y);
  p.condition_texts = std::move(condition_texts);
  p.Validate();
  return p;
}

ElicitationPlan ElicitationPlan::DecomposedSwapped(
    PromptTemplate a, PromptTemplate y_given_a,
    std::vector<std::string> condition_texts, int num_classes) {
  ElicitationPlan p;
  p.strategy = Strategy::kDecomposed;
  p.swapped = true;
  p.num_classes = num_classes;
  p.num_groups = static_cast<int>(a.options().size());
  p.templates.push_back(std::move(a));
  for (int g = 0; g < p.num_groups; ++g) p.templates.push_back(y_given_a);
  p.condition_texts = std::move(condition_texts);
  p.Validate();
  return p;
}

ElicitationPlan ElicitationPlan::CondIndep(PromptTemplate y, PromptTemplate a) {
  ElicitationPlan p;
  p.strategy = Strategy::kCondIndep;
  p.num_classes = static_cast<int>(y.options().size());
  p.num_groups = static_cast<int>(a.options().size());
  p.templates = {std::move(y), std::move(a)};
  p.Validate();
  return p;
}

ElicitationPlan ElicitationPlan::PerGroupIndicator(
    PromptTemplate y, std::vector<PromptTemplate> indicators) {
  ElicitationPlan p;
  p.strategy = Strategy::kPerGroupIndicator;
  p.num_classes = static_cast<int>(y.options().size());
  p.num_groups = static_cast<int>(indicators.size());
  p.templates.push_back(std::move(y));
  for (PromptTemplate& t : indicators) p.templates.push_back(std::move(t));
  p.Validate();
  return p;
}

ElicitationPlan ElicitationPlan::YOnly(PromptTemplate y, int num_groups) {
  ElicitationPlan p;
  p.strategy = Strategy::kYOnly;
  p.num_classes = static_cast<int>(y.options().size());
  p.num_groups = num_groups;
  p.templates = {std::move(y)};
  p.Validate();
  return p;
}

std::string QueryId(std::string_view example_id, Strategy strategy,
                    int template_index, std::optional<int> condition_index) {
  std::string key(example_id);
  key += '\x1f';
  key += StrategyName(strategy);
  key += '\x1f';
  key += std::to_string(template_index);
  key += '\x1f';
  key += condition_index ? std::to_string(*condition_index) : "-";
  return Sha256Hex(key).substr(0, 32);
}

std::vector<PlannedQuery> PlanQueries(const ElicitationPlan& plan,
                                      const datahub::Example& example) {
  std::vector<PlannedQuery> out;
  out.reserve(plan.templates.size());
  for (size_t t = 0; t < plan.templates.size(); ++t) {
    const PromptTemplate& tmpl = plan.templates[t];
    PlannedQuery q;
    q.template_index = static_cast<int>(t);
    q.kind = tmpl.kind();
    std::optional<std::string_view> condition;
    if (plan.strategy == Strategy::kDecomposed && t >= 1) {
      q.condition_index = static_cast<int>(t) - 1;
      condition = plan.condition_texts.at(t - 1);
    }
    q.prompt = Render(tmpl, example, condition);
    q.query_id =
        QueryId(example.id, plan.strategy, q.template_index, q.condition_index);
    out.push_back(std::move(q));
  }
  return out;
}

int QueriesPerExample(Strategy strategy, int num_classes, int num_groups,
                      bool swapped) {
  switch (strategy) {
    case Strategy::kJoint:
    case Strategy::kYOnly:
      return 1;
    case Strategy::kDecomposed:
      return 1 + (swapped ? num_groups : num_classes);
    case Strategy::kCondIndep:
      return 2;
    case Strategy::kPerGroupIndicator:
      return 1 + num_groups;
  }
  return 0;
}

LoadedTemplate LoadTemplate(const std::string& path) {
  std::filesystem::path meta_path(path);
  meta_path.replace_extension(".json");
  const std::string body = ReadFile(path);
  json meta;
  try {
    meta = json::parse(ReadFile(meta_path.string()));
  } catch (const json::exception& e) {
    throw ConfigError("template metadata " + meta_path.string() + ": " +
                      e.what());
  }
  LoadedTemplate out;
  try {
    const TargetKind kind =
        TargetKindFromString(meta.at("target_kind").get<std::string>());
    std::vector<Option> options;
    const json& jo = meta.at("options");
    for (size_t i = 0; i < jo.size(); ++i) {
      if (jo[i].is_string()) {
        const std::string letter = jo[i].get<std::string>();
        if (letter.size() != 1)
          throw ConfigError("option letters must be single characters");
        options.push_back({letter[0], static_cast<int>(i)});
      } else {
        const std::string letter = jo[i].at("letter").get<std::string>();
        if (letter.size() != 1)
          throw ConfigError("option letters must be single characters");
        options.push_back({letter[0], jo[i].at("target").get<int>()});
      }
    }
    if (meta.contains("condition_texts"))
      out.condition_texts =
          meta.at("condition_texts").get<std::vector<std::string>>();
    if (meta.contains("group_substitutions")) {
      const json& subs = meta.at("group_substitutions");
      for (size_t g = 0; g < subs.size(); ++g) {
        std::string b = body;
        for (const auto& [from, to] : subs[g].items())
          b = ReplaceAll(b, from, to.get<std::string>());
        out.templates.push_back(PromptTemplate::Create(
            b, options, kind,
            kind == TargetKind::kAIndicator ? static_cast<int>(g) : -1));
      }
    } else {
      out.templates.push_back(PromptTemplate::Create(
          body, options, kind, meta.value("indicator", -1)));
    }
  } catch (const json::exception& e) {
    throw ConfigError("template metadata " + meta_path.string() + ": " +
                      e.what());
  }
  return out;
}

ElicitationPlan PlanFromJson(const json& j, const std::string& base_dir,
                             int num_classes, int num_groups) {
  const Strategy strategy =
      StrategyFromString(j.value("strategy", std::string("decomposed")));
  if (!j.contains("templates")) return DefaultPlan(strategy, num_classes, num_groups);
  const json& t = j.at("templates");
  auto load = [&](const char* key) {
    if (!t.contains(key))
      throw ConfigError(std::string("elicitation.templates.") + key +
                        " is required for strategy " + StrategyName(strategy));
    std::filesystem::path p(t.at(key).get<std::string>());
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    return LoadTemplate(p.string());
  };
  const bool swapped = j.value("swap_roles", false);
  ElicitationPlan plan;
  switch (strategy) {
    case Strategy::kJoint:
      plan = ElicitationPlan::Joint(load("joint").templates.at(0), num_classes,
                                    num_groups);
      break;
    case Strategy::kDecomposed: {
      LoadedTemplate cond = load("conditional");
      std::vector<std::string> texts =
          j.contains("condition_texts")
              ? j.at("condition_texts").get<std::vector<std::string>>()
              : cond.condition_texts;
      if (swapped) {
        plan = ElicitationPlan::DecomposedSwapped(load("a").templates.at(0),
                                                  cond.templates.at(0),
                                                  std::move(texts),
                                                  num_classes);
      } else {
        plan = ElicitationPlan::Decomposed(load("y").templates.at(0),
                                           cond.templates.at(0),
                                           std::move(texts), num_groups);
      }
      break;
    }
    case Strategy::kCondIndep:
      plan = ElicitationPlan::CondIndep(load("y").templates.at(0),
                                        load("a").templates.at(0));
      break;
    case Strategy::kPerGroupIndicator:
      plan = ElicitationPlan::PerGroupIndicator(load("y").templates.at(0),
                                                load("indicator").templates);
      break;
    case Strategy::kYOnly:
      plan = ElicitationPlan::YOnly(load("y").templates.at(0), num_groups);
      break;
  }
  if (plan.num_classes != num_classes || plan.num_groups != num_groups)
    throw ConfigError("elicitation templates do not match the dataset's K/G");
  return plan;
}

ElicitationPlan DefaultPlan(Strategy strategy, int num_classes,
                            int num_groups) {
  const std::string head = "Answer with a single letter.\nQuestion: ";
  const std::string tail = "\n{example}\nAnswer:";
  auto y = [&] {
    return PromptTemplate::Positional(head + "What is the class?" + tail,
                                      TargetKind::kY, num_classes);
  };
  auto a = [&] {
    return PromptTemplate::Positional(head + "What is the group?" + tail,
                                      TargetKind::kA, num_groups);
  };
  switch (strategy) {
    case Strategy::kJoint:
      return ElicitationPlan::Joint(
          PromptTemplate::Positional(head + "What are the group and class?" +
                                         tail,
                                     TargetKind::kAYJoint,
                                     num_classes * num_groups),
          num_classes, num_groups);
    case Strategy::kDecomposed: {
      std::vector<std::string> texts;
      for (int k = 0; k < num_classes; ++k)
        texts.push_back("class " + std::to_string(k));
      return ElicitationPlan::Decomposed(
          y(),
          PromptTemplate::Positional(
              head + "What is the group? The class is {class_condition}." +
                  tail,
              TargetKind::kAGivenY, num_groups),
          std::move(texts), num_groups);
    }
    case Strategy::kCondIndep:
      return ElicitationPlan::CondIndep(y(), a());
    case Strategy::kPerGroupIndicator: {
      std::vector<PromptTemplate> ind;
      for (int g = 0; g < num_groups; ++g)
        ind.push_back(PromptTemplate::Positional(
            head + "Does the example belong to group " + std::to_string(g) +
                "?" + tail,
            TargetKind::kAIndicator, 2, g));
      return ElicitationPlan::PerGroupIndicator(y(), std::move(ind));
    }
    case Strategy::kYOnly:
      return ElicitationPlan::YOnly(y(), num_groups);
  }
  throw ConfigError("unknown strategy");
}

}  // namespace fairpost::promptkit
