#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdio>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "positivity/config.hpp"
#include "positivity/propensity.hpp"
#include "positivity/tree.hpp"
#include "positivity/violation.hpp"

namespace positivity {

enum class RuleOp { kLessEqual, kGreater };

struct Rule {
  std::size_t feature_index = 0;
  std::string feature_name;
  RuleOp op = RuleOp::kLessEqual;
  double cutoff = 0.0;

  bool holds(std::span<const double> x) const {
    return op == RuleOp::kLessEqual ? x[feature_index] <= cutoff : x[feature_index] > cutoff;
  }

  bool operator==(const Rule&) const = default;
};

// Conjunction of rules describing one violation leaf.
struct RuleSet {
  std::vector<Rule> rules;
  int group = 0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  double coverage = 0.0;

  bool matches(std::span<const double> x) const {
    return std::all_of(rules.begin(), rules.end(), [&](const Rule& r) { return r.holds(x); });
  }

  bool operator==(const RuleSet&) const = default;
};

// Keeps the tightest bound per (feature, direction), in order of first
// appearance along the path.
inline std::vector<Rule> simplify_rules(const std::vector<Rule>& path) {
  std::vector<Rule> out;
  for (const Rule& rule : path) {
    auto it = std::find_if(out.begin(), out.end(), [&](const Rule& r) {
      return r.feature_index == rule.feature_index && r.op == rule.op;
    });
    if (it == out.end()) {
      out.push_back(rule);
    } else if (rule.op == RuleOp::kLessEqual) {
      it->cutoff = std::min(it->cutoff, rule.cutoff);
    } else {
      it->cutoff = std::max(it->cutoff, rule.cutoff);
    }
  }
  return out;
}

// Root-to-leaf conditions for every leaf, unsimplified, keyed by leaf index.
inline std::vector<std::pair<std::size_t, std::vector<Rule>>> leaf_paths(const ExplanationTree& tree) {
  std::vector<std::pair<std::size_t, std::vector<Rule>>> out;
  std::vector<Rule> path;
  auto walk = [&](auto&& self, std::size_t i) -> void {
    const TreeNode& node = tree.nodes[i];
    if (node.is_leaf()) {
      out.emplace_back(i, path);
      return;
    }
    const std::string& name = tree.feature_names[node.feature];
    path.push_back({node.feature, name, RuleOp::kLessEqual, node.threshold});
    self(self, node.left);
    path.back().op = RuleOp::kGreater;
    self(self, node.right);
    path.pop_back();
  };
  walk(walk, 0);
  return out;
}

// One RuleSet per violation leaf (see violation_leaves) of a pruned tree.
inline std::vector<RuleSet> extract_rules(const ExplanationTree& tree, double beta, double gamma) {
  const auto wanted = violation_leaves(tree, beta, gamma);
  std::vector<RuleSet> out;
  for (auto& [leaf, path] : leaf_paths(tree)) {
    if (std::find(wanted.begin(), wanted.end(), leaf) == wanted.end()) continue;
    const TreeNode& node = tree.nodes[leaf];
    RuleSet set;
    set.rules = simplify_rules(path);
    set.group = tree.group;
    set.n_pos = node.n_pos;
    set.n_neg = node.n_neg;
    set.coverage = tree.total_violations == 0
                       ? 0.0
                       : static_cast<double>(node.n_pos) / static_cast<double>(tree.total_violations);
    out.push_back(std::move(set));
  }
  return out;
}

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

inline std::string describe(const Rule& rule) {
  return rule.feature_name +
         (rule.op == RuleOp::kGreater ? " is greater than " : " is lesser than or equal to ") +
         format_number(rule.cutoff);
}

inline std::string describe(const RuleSet& set) {
  if (set.rules.empty()) return "every sample of this group";
  std::string out;
  for (std::size_t i = 0; i < set.rules.size(); ++i) {
    if (i > 0) out += " and ";
    out += describe(set.rules[i]);
  }
  return out;
}

inline std::string group_title(int group) {
  return group == 0 ? "Control group (T=0)" : "Treated group (T=1)";
}

inline std::string render_text(const std::vector<RuleSet>& rulesets, const ViolationReport& report,
                               const PropensityResult& propensity, double alpha) {
  std::ostringstream out;
  out << "Positivity analysis\n";
  out << "Propensity model: AUC = " << format_number(propensity.auc)
      << ", log-loss = " << format_number(propensity.log_loss) << " ("
      << (propensity.folds == 1 ? std::string("in-sample scores")
                                : std::to_string(propensity.folds) + "-fold cross-fitted scores")
      << ")\n";
  out << "Suspected bins: " << report.suspected.size() << ", significant after FDR at alpha = "
      << format_number(alpha) << ": " << report.significant_count() << "\n\n";

  if (!report.violation_detected()) {
    out << "No positivity violations detected.\n";
    return out.str();
  }
  out << "Positivity violation detected.\n";
  for (int group : {0, 1}) {
    const auto& labels = report.sample_labels(group);
    const auto violating = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
    out << '\n' << group_title(group) << ": " << violating << " violating samples\n";
    std::size_t region = 0;
    for (const auto& set : rulesets) {
      if (set.group != group) continue;
      out << "  Region " << ++region << ": " << describe(set) << '\n';
      out << "    violating samples: " << set.n_pos << ", non-violating samples: " << set.n_neg
          << ", coverage: " << format_number(set.coverage) << '\n';
    }
    if (violating > 0 && region == 0) out << "  No region large and pure enough to report.\n";
  }
  return out.str();
}

// Indented dump, one node per line.
inline std::string dump_tree(const ExplanationTree& tree) {
  std::ostringstream out;
  out << group_title(tree.group) << ", violating samples: " << tree.total_violations << '\n';
  auto counts = [](const TreeNode& n) {
    return "violating=" + std::to_string(n.n_pos) + " non-violating=" + std::to_string(n.n_neg) +
           (n.is_leaf() ? " (leaf)" : "");
  };
  auto walk = [&](auto&& self, std::size_t i, const std::string& label) -> void {
    const TreeNode& node = tree.nodes[i];
    out << std::string(2 * node.depth, ' ') << label << ": " << counts(node) << '\n';
    if (node.is_leaf()) return;
    const std::string& name = tree.feature_names[node.feature];
    const std::string cut = format_number(node.threshold);
    self(self, node.left, name + " <= " + cut);
    self(self, node.right, name + " > " + cut);
  };
  walk(walk, 0, "root");
  return out.str();
}

struct GroupReport {
  int group = 0;
  std::size_t samples = 0;
  std::size_t violations = 0;
  std::vector<RuleSet> rulesets;

  bool operator==(const GroupReport&) const = default;
};

struct ReportDocument {
  int version = 1;
  Config config;
  bool violation_detected = false;
  double auc = 0.5;
  double log_loss = 0.0;
  std::size_t folds = 1;
  std::vector<BinTest> bins;
  std::vector<GroupReport> groups;

  bool operator==(const ReportDocument&) const = default;
};

using json = nlohmann::ordered_json;

inline json to_json(const Config& c) {
  return json{{"bins", c.bins},
              {"alpha", c.alpha},
              {"beta", c.beta},
              {"gamma", c.gamma},
              {"noise_threshold", c.noise_threshold},
              {"test", to_string(c.test_kind)},
              {"max_depth", c.max_depth},
              {"cross_fit_folds", c.cross_fit_folds},
              {"seed", c.seed},
              {"l2_lambda", c.l2_lambda},
              {"tol", c.tol},
              {"max_iter", c.max_iter},
              {"grid_resolutions", c.grid_resolutions}};
}

inline Config config_from_json(const json& j) {
  Config c;
  c.bins = j.at("bins").get<std::size_t>();
  c.alpha = j.at("alpha").get<double>();
  c.beta = j.at("beta").get<double>();
  c.gamma = j.at("gamma").get<double>();
  c.noise_threshold = j.at("noise_threshold").get<std::size_t>();
  c.test_kind = test_kind_from_string(j.at("test").get<std::string>());
  c.max_depth = j.at("max_depth").get<std::size_t>();
  c.cross_fit_folds = j.at("cross_fit_folds").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.l2_lambda = j.at("l2_lambda").get<double>();
  c.tol = j.at("tol").get<double>();
  c.max_iter = j.at("max_iter").get<std::size_t>();
  c.grid_resolutions = j.at("grid_resolutions").get<std::vector<std::size_t>>();
  return c;
}

inline json to_json(const ReportDocument& doc) {
  json bins = json::array();
  for (const auto& t : doc.bins) {
    bins.push_back(json{{"index", t.bin},
                        {"k0", t.k0},
                        {"k1", t.k1},
                        {"p_raw", t.p_raw},
                        {"p_adj", t.p_adj},
                        {"significant", t.significant}});
  }
  json groups = json::array();
  for (const auto& g : doc.groups) {
    json sets = json::array();
    for (const auto& s : g.rulesets) {
      json rules = json::array();
      for (const auto& r : s.rules) {
        rules.push_back(json{{"feature", r.feature_name},
                             {"feature_index", r.feature_index},
                             {"op", r.op == RuleOp::kLessEqual ? "<=" : ">"},
                             {"cutoff", r.cutoff},
                             {"text", describe(r)}});
      }
      sets.push_back(json{{"rules", std::move(rules)},
                          {"n_pos", s.n_pos},
                          {"n_neg", s.n_neg},
                          {"coverage", s.coverage}});
    }
    groups.push_back(json{{"group", g.group},
                          {"samples", g.samples},
                          {"violations", g.violations},
                          {"rulesets", std::move(sets)}});
  }
  return json{{"version", doc.version},
              {"config", to_json(doc.config)},
              {"verdict", doc.violation_detected ? "violation_detected" : "no_violation_detected"},
              {"propensity", json{{"auc", doc.auc}, {"log_loss", doc.log_loss}, {"folds", doc.folds}}},
              {"bins", std::move(bins)},
              {"groups", std::move(groups)}};
}

inline ReportDocument report_from_json(const json& j) {
  ReportDocument doc;
  doc.version = j.at("version").get<int>();
  doc.config = config_from_json(j.at("config"));
  doc.violation_detected = j.at("verdict").get<std::string>() == "violation_detected";
  const auto& p = j.at("propensity");
  doc.auc = p.at("auc").get<double>();
  doc.log_loss = p.at("log_loss").get<double>();
  doc.folds = p.at("folds").get<std::size_t>();
  for (const auto& b : j.at("bins")) {
    doc.bins.push_back({b.at("index").get<std::size_t>(), b.at("k0").get<std::size_t>(),
                        b.at("k1").get<std::size_t>(), b.at("p_raw").get<double>(),
                        b.at("p_adj").get<double>(), b.at("significant").get<bool>()});
  }
  for (const auto& g : j.at("groups")) {
    GroupReport group;
    group.group = g.at("group").get<int>();
    group.samples = g.at("samples").get<std::size_t>();
    group.violations = g.at("violations").get<std::size_t>();
    for (const auto& s : g.at("rulesets")) {
      RuleSet set;
      set.group = group.group;
      set.n_pos = s.at("n_pos").get<std::size_t>();
      set.n_neg = s.at("n_neg").get<std::size_t>();
      set.coverage = s.at("coverage").get<double>();
      for (const auto& r : s.at("rules")) {
        set.rules.push_back({r.at("feature_index").get<std::size_t>(), r.at("feature").get<std::string>(),
                             r.at("op").get<std::string>() == "<=" ? RuleOp::kLessEqual : RuleOp::kGreater,
                             r.at("cutoff").get<double>()});
      }
      group.rulesets.push_back(std::move(set));
    }
    doc.groups.push_back(std::move(group));
  }
  return doc;
}

inline ReportDocument make_report(const std::vector<RuleSet>& rulesets, const ViolationReport& report,
                                  const PropensityResult& propensity, const Config& config) {
  ReportDocument doc;
  doc.config = config;
  doc.violation_detected = report.violation_detected();
  doc.auc = propensity.auc;
  doc.log_loss = propensity.log_loss;
  doc.folds = propensity.folds;
  doc.bins = report.tests;
  for (int group : {0, 1}) {
    const auto& labels = report.sample_labels(group);
    GroupReport g;
    g.group = group;
    g.samples = labels.size();
    g.violations = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
    for (const auto& set : rulesets) {
      if (set.group == group) g.rulesets.push_back(set);
    }
    doc.groups.push_back(std::move(g));
  }
  return doc;
}

inline std::string render_report(const std::vector<RuleSet>& rulesets, const ViolationReport& report,
                                 const PropensityResult& propensity, const Config& config) {
  return to_json(make_report(rulesets, report, propensity, config)).dump(2) + "\n";
}

}  // namespace positivity
