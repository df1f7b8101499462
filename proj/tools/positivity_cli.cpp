// positivity: detect and explain positivity (overlap) violations in a CSV dataset.
//
//   positivity analyze data.csv --treatment-col t --out results/
//   positivity synth --out data.csv [--design email|coin]
//   positivity explain-tree data.csv --treatment-col t --label-col violating --out results/

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "positivity/positivity.hpp"

namespace fs = std::filesystem;
using namespace positivity;

namespace {

constexpr int kExitNoViolation = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitViolation = 3;

struct IoFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("positivity");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("POSITIVITY_LOG")) {
    const auto parsed = spdlog::level::from_str(level);
    if (parsed == spdlog::level::off && std::string(level) != "off") {
      spdlog::warn("POSITIVITY_LOG='{}' is not a log level; keeping 'warn'", level);
    } else {
      spdlog::set_level(parsed);
    }
  }
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  out << contents;
  if (!out) throw IoFailure("cannot write '" + path.string() + "'");
  spdlog::info("wrote {}", path.string());
}

void prepare_output_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoFailure("cannot create output directory '" + dir.string() + "'");
}

std::vector<std::size_t> parse_grid(const std::string& text) {
  std::vector<std::size_t> out;
  if (text == "none" || text.empty()) return out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t pos = 0;
    const unsigned long value = std::stoul(item, &pos);
    if (pos != item.size()) throw std::invalid_argument("bad grid resolution '" + item + "'");
    out.push_back(value);
  }
  return out;
}

std::string tree_file_contents(const GroupExplanation& g) {
  if (!g.tree) {
    return group_title(g.group) + ": no violating samples, no tree built.\n";
  }
  return "Pruned tree\n" + dump_tree(*g.pruned) + "\nUnpruned tree\n" + dump_tree(*g.tree);
}

struct AnalyzeArgs {
  std::string input;
  std::string treatment_col;
  std::string out = ".";
  std::string test = "z";
  std::string grid = "10,30";
  Config config;
};

void add_config_flags(CLI::App* cmd, AnalyzeArgs& args) {
  cmd->add_option("input", args.input, "Input CSV file")->required();
  cmd->add_option("--treatment-col", args.treatment_col, "Name of the 0/1 treatment column")->required();
  cmd->add_option("--out", args.out, "Output directory")->capture_default_str();
  cmd->add_option("--bins", args.config.bins, "Histogram bins over [0,1]")->capture_default_str();
  cmd->add_option("--alpha", args.config.alpha, "FDR significance level")->capture_default_str();
  cmd->add_option("--beta", args.config.beta, "Pruning purity threshold")->capture_default_str();
  cmd->add_option("--gamma", args.config.gamma, "Pruning violation-mass threshold")->capture_default_str();
  cmd->add_option("--noise-threshold", args.config.noise_threshold, "Bin counts at or below this are noise")
      ->capture_default_str();
  cmd->add_option("--test", args.test, "Per-bin test: z or fisher")
      ->check(CLI::IsMember({"z", "fisher"}))
      ->capture_default_str();
  cmd->add_option("--max-depth", args.config.max_depth, "Maximum explanation tree depth")->capture_default_str();
  cmd->add_option("--folds", args.config.cross_fit_folds, "Cross-fitting folds (1 = in-sample)")
      ->capture_default_str();
  cmd->add_option("--seed", args.config.seed, "Seed for fold assignment")->capture_default_str();
  cmd->add_option("--l2", args.config.l2_lambda, "L2 penalty of the propensity model")->capture_default_str();
  cmd->add_option("--max-iter", args.config.max_iter, "Optimizer iteration cap")->capture_default_str();
  cmd->add_option("--tol", args.config.tol, "Gradient max-norm convergence tolerance")->capture_default_str();
  cmd->add_option("--grid", args.grid, "Interaction grid resolutions, comma separated, or 'none'")
      ->capture_default_str();
}

void finalize_config(AnalyzeArgs& args) {
  try {
    args.config.test_kind = test_kind_from_string(args.test);
    args.config.grid_resolutions = parse_grid(args.grid);
    args.config.check();
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

int run_analyze(AnalyzeArgs& args) {
  finalize_config(args);
  const fs::path out_dir(args.out);
  const Dataset dataset = load_csv(args.input, args.treatment_col);
  spdlog::info("loaded {} rows, {} features ({} control, {} treated)", dataset.size(), dataset.dimension(),
               dataset.group_size(0), dataset.group_size(1));

  const Analysis a = analyze(dataset, args.config);
  for (const auto& f : a.propensity.fits) {
    if (!f.converged) {
      spdlog::warn("propensity optimizer stopped after {} iterations, gradient max-norm {:.3g}", f.iterations,
                   f.gradient_norm);
    }
  }
  spdlog::info("AUC {:.4f}, {} suspected bins, {} significant", a.propensity.auc, a.report.suspected.size(),
               a.report.significant_count());

  const auto rulesets = a.rulesets();
  const std::string text = render_text(rulesets, a.report, a.propensity, args.config.alpha);
  prepare_output_dir(out_dir);
  write_file(out_dir / "report.txt", text);
  write_file(out_dir / "report.json", render_report(rulesets, a.report, a.propensity, args.config));
  write_file(out_dir / "histogram.svg", render_histogram_svg(a.histograms, a.report, args.config.alpha));
  write_file(out_dir / "tree_group0.txt", tree_file_contents(a.groups[0]));
  write_file(out_dir / "tree_group1.txt", tree_file_contents(a.groups[1]));
  std::cout << text;
  return a.report.violation_detected() ? kExitViolation : kExitNoViolation;
}

struct SynthArgs {
  std::string out;
  std::size_t n = 20000;
  std::uint64_t seed = 0;
  std::string design = "email";
  std::size_t noise = 0;
  std::string carve_mode = "reassign";
  std::string treatment_col = "treatment";
};

int run_synth(const SynthArgs& args) {
  SynthSpec spec = args.design == "coin" ? SynthSpec::coin_flip(args.n, args.seed, args.noise)
                                         : SynthSpec::email_campaign(args.n, args.seed, args.noise);
  spec.carve_mode = args.carve_mode == "delete" ? CarveMode::kDelete : CarveMode::kReassign;
  const Dataset dataset = generate(spec);
  try {
    write_csv(dataset, args.out, args.treatment_col);
  } catch (const DataError& e) {
    throw IoFailure(e.what());
  }
  spdlog::info("wrote {} rows to {}", dataset.size(), args.out);
  return 0;
}

struct ExplainArgs {
  AnalyzeArgs base;
  std::string label_col;
};

int run_explain_tree(ExplainArgs& args) {
  finalize_config(args.base);
  std::ifstream in(args.base.input, std::ios::binary);
  if (!in) throw DataError(DataErrorKind::kIo, "cannot open '" + args.base.input + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  CsvTable table = parse_csv(buffer.str());

  const auto it = std::find(table.header.begin(), table.header.end(), args.label_col);
  if (it == table.header.end()) {
    throw DataError(DataErrorKind::kMissingTreatmentColumn, "missing label column '" + args.label_col + "'");
  }
  const auto label_index = static_cast<std::size_t>(it - table.header.begin());
  std::vector<bool> labels;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::string cell = detail::lower(detail::trim(table.rows[r][label_index]));
    if (cell != "0" && cell != "1" && cell != "true" && cell != "false") {
      throw DataError(DataErrorKind::kUnparseableNumber,
                      "row " + std::to_string(r + 1) + ": label '" + table.rows[r][label_index] + "' is not 0/1");
    }
    labels.push_back(cell == "1" || cell == "true");
    table.rows[r].erase(table.rows[r].begin() + static_cast<std::ptrdiff_t>(label_index));
  }
  table.header.erase(it);
  const Dataset dataset = dataset_from_table(table, args.base.treatment_col);

  const fs::path out_dir(args.base.out);
  prepare_output_dir(out_dir);
  std::ostringstream text;
  text << "Explanation of supplied violation labels\n";
  for (int group : {0, 1}) {
    std::vector<bool> group_labels;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      if (dataset.treatment()[i] == group) group_labels.push_back(labels[i]);
    }
    const auto g = explain_group(dataset, group, group_labels, args.base.config);
    const auto violating = static_cast<std::size_t>(std::count(group_labels.begin(), group_labels.end(), true));
    text << '\n' << group_title(group) << ": " << violating << " violating samples\n";
    std::size_t region = 0;
    for (const auto& set : g.rulesets) {
      text << "  Region " << ++region << ": " << describe(set) << '\n';
      text << "    violating samples: " << set.n_pos << ", non-violating samples: " << set.n_neg
           << ", coverage: " << format_number(set.coverage) << '\n';
    }
    write_file(out_dir / ("tree_group" + std::to_string(group) + ".txt"), tree_file_contents(g));
  }
  write_file(out_dir / "rules.txt", text.str());
  std::cout << text.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Detect and explain positivity violations in observational data"};
  app.require_subcommand(1);

  AnalyzeArgs analyze_args;
  auto* analyze_cmd = app.add_subcommand("analyze", "Run detection and explanation on a CSV file");
  add_config_flags(analyze_cmd, analyze_args);

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic dataset with a planted violation");
  synth_cmd->add_option("--out", synth_args.out, "Output CSV path")->required();
  synth_cmd->add_option("--n", synth_args.n, "Number of samples")->capture_default_str();
  synth_cmd->add_option("--seed", synth_args.seed, "Random seed")->capture_default_str();
  synth_cmd->add_option("--design", synth_args.design, "email (planted carve) or coin (randomized)")
      ->check(CLI::IsMember({"email", "coin"}))
      ->capture_default_str();
  synth_cmd->add_option("--noise-covariates", synth_args.noise, "Extra standard-normal covariates")
      ->capture_default_str();
  synth_cmd->add_option("--carve-mode", synth_args.carve_mode, "reassign or delete carved treated samples")
      ->check(CLI::IsMember({"reassign", "delete"}))
      ->capture_default_str();
  synth_cmd->add_option("--treatment-col", synth_args.treatment_col, "Treatment column name")
      ->capture_default_str();

  ExplainArgs explain_args;
  auto* explain_cmd = app.add_subcommand("explain-tree", "Explain a supplied 0/1 violation label column");
  add_config_flags(explain_cmd, explain_args.base);
  explain_cmd->add_option("--label-col", explain_args.label_col, "Name of the 0/1 violation label column")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*analyze_cmd) return run_analyze(analyze_args);
    if (*synth_cmd) return run_synth(synth_args);
    if (*explain_cmd) return run_explain_tree(explain_args);
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.kind() == DataErrorKind::kIo ? kExitUsage : kExitData;
  } catch (const IoFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
