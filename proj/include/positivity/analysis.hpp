#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <vector>

#include "positivity/config.hpp"
#include "positivity/dataset.hpp"
#include "positivity/density.hpp"
#include "positivity/explain.hpp"
#include "positivity/propensity.hpp"
#include "positivity/tree.hpp"
#include "positivity/violation.hpp"

namespace positivity {

struct GroupExplanation {
  int group = 0;
  std::vector<std::size_t> rows;
  std::vector<bool> labels;
  std::optional<ExplanationTree> tree;
  std::optional<ExplanationTree> pruned;
  std::vector<RuleSet> rulesets;
};

struct Analysis {
  Config config;
  PropensityResult propensity;
  GroupHistograms histograms;
  ViolationReport report;
  std::array<GroupExplanation, 2> groups;

  std::vector<RuleSet> rulesets() const {
    std::vector<RuleSet> out;
    for (const auto& g : groups) out.insert(out.end(), g.rulesets.begin(), g.rulesets.end());
    return out;
  }
};

// Trees and rules for one group given its per-sample violation labels.
// No violations: no tree. Every sample violating: a single leaf.
inline GroupExplanation explain_group(const Dataset& dataset, int group, const std::vector<bool>& labels,
                                      const Config& config) {
  GroupExplanation out;
  out.group = group;
  out.rows = dataset.group_rows(group);
  out.labels = labels;
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
  if (positives == 0) return out;

  if (positives == labels.size()) {
    ExplanationTree leaf;
    leaf.group = group;
    leaf.feature_names = dataset.feature_names();
    leaf.total_violations = positives;
    leaf.nodes.push_back(TreeNode{positives, 0, 0});
    out.tree = leaf;
  } else {
    out.tree = build_tree(dataset, group, labels, TreeOptions{config.max_depth, 2});
  }
  out.pruned = prune(*out.tree, config.beta, config.gamma);
  out.rulesets = extract_rules(*out.pruned, config.beta, config.gamma);
  return out;
}

// Detection (propensity, histograms, tests, FDR) followed by explanation
// (per-group tree, asymmetric pruning, rule extraction).
inline Analysis analyze(const Dataset& dataset, const Config& config) {
  config.check();
  if (const auto diagnostics = validate(dataset); !diagnostics.empty()) {
    throw std::invalid_argument(diagnostics.front().message);
  }
  Analysis a;
  a.config = config;
  a.propensity = fit_predict(dataset, config);
  a.histograms = estimate_histograms(a.propensity.scores, dataset.treatment(), config.bins);
  a.report = detect(a.histograms, config, a.propensity.scores, dataset.treatment());
  for (int group : {0, 1}) {
    a.groups[group] = explain_group(dataset, group, a.report.sample_labels(group), config);
  }
  return a;
}

}  // namespace positivity
