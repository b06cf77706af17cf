#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "peerfx/csv.hpp"
#include "peerfx/error.hpp"
#include "peerfx/pipeline.hpp"

namespace fs = std::filesystem;
using namespace peerfx;

namespace {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kConfig = 3,
  kData = 4,
  kDegenerate = 5,
  kEmptySelection = 6,
};

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return kUsage;
    case ErrorKind::ConfigError: return kConfig;
    case ErrorKind::DataError:
    case ErrorKind::IoError:
    case ErrorKind::InsufficientData: return kData;
    case ErrorKind::IllConditioned:
    case ErrorKind::NoWithinVariation:
    case ErrorKind::DivisionDegenerate: return kDegenerate;
    case ErrorKind::EmptySelection: return kEmptySelection;
  }
  return 1;
}

struct Common {
  std::string config_path;
  std::uint64_t seed = 42;
  std::string out;
  std::string format = "md";
};

void add_common(CLI::App& cmd, Common& common, bool out_required) {
  cmd.add_option("--config", common.config_path, "Config file (key = value lines)")
      ->check(CLI::ExistingFile);
  cmd.add_option("--seed", common.seed, "Master seed")->capture_default_str();
  auto* out = cmd.add_option("--out", common.out, "Output directory");
  if (out_required) out->required();
  cmd.add_option("--format", common.format, "Printed format")
      ->check(CLI::IsMember({"csv", "md"}))
      ->capture_default_str();
}

RunConfig load_config(const Common& common) {
  RunConfig config = common.config_path.empty() ? RunConfig{} : load_run_config(common.config_path);
  config.validate();
  return config;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

struct EstimateArgs {
  std::string dir, panel, assignments, population, schedules;
  std::vector<std::string> models;
  std::string occasion;
  bool all_models = false;
  bool aa = false;
};

std::string pick(const std::string& explicit_path, const std::string& dir, const char* name) {
  if (!explicit_path.empty()) return explicit_path;
  if (dir.empty()) return {};
  const fs::path candidate = fs::path(dir) / name;
  return fs::exists(candidate) ? candidate.string() : std::string();
}

int cmd_estimate(const Common& common, const EstimateArgs& args) {
  const RunConfig config = load_config(common);
  const Occasion occasion =
      args.occasion.empty() ? config.estimator.occasion : parse_occasion(args.occasion);

  std::vector<Model> models;
  if (args.all_models) {
    models = {Model::ols, Model::ols_controls, Model::fe, Model::iv};
  } else {
    for (const auto& m : args.models) models.push_back(parse_model(m));
    if (models.empty()) models.push_back(Model::iv);
  }

  const std::string panel_path = pick(args.panel, args.dir, kPanelFile);
  if (panel_path.empty()) fail(ErrorKind::InvalidArgument, "no panel file given (--panel or --dir)");
  const std::string assignments_path = pick(args.assignments, args.dir, kAssignmentsFile);
  const std::string population_path = pick(args.population, args.dir, kPopulationFile);
  const std::string schedules_path = pick(args.schedules, args.dir, kSchedulesFile);

  EstimationInputs inputs;
  inputs.panel = csv::read_panel(csv::read_file(panel_path));
  if (inputs.panel.empty()) fail(ErrorKind::InsufficientData, panel_path + " has no rows");
  const bool needs_assignments =
      args.aa || std::find(models.begin(), models.end(), Model::iv) != models.end();
  if (assignments_path.empty() && needs_assignments) {
    fail(ErrorKind::InvalidArgument, "iv and --aa-test need an assignments file");
  }
  if (!assignments_path.empty()) {
    inputs.assignments = csv::read_assignments(csv::read_file(assignments_path));
  }
  if (!population_path.empty()) inputs.members = csv::read_members(csv::read_file(population_path));
  if (!schedules_path.empty()) {
    inputs.schedules = csv::read_schedules(csv::read_file(schedules_path));
  }

  if (args.aa) {
    const auto test = aa_test(inputs, occasion, config);
    std::cout << "A/A pre-period test (" << to_string(occasion) << ", week "
              << config.window.pre_period_week << "): " << format_ttest(test) << "\n\n";
  }
  const auto comparison = estimate_models(inputs, config, occasion, models, false);
  const auto results = comparison.results();
  const std::string estimates = csv::write_estimates(results);

  std::string printed;
  if (common.format == "csv") {
    printed = estimates;
  } else {
    printed = comparison_markdown(comparison, config.window);
    if (comparison.iv) printed += "\n" + first_stage_markdown({&comparison, 1});
  }
  for (const auto& r : results) {
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
  }
  std::cout << printed;

  if (!common.out.empty()) {
    const fs::path out(common.out);
    ensure_dir(out);
    csv::write_file(out / "estimates.csv", estimates);
    csv::write_file(out / "coefficients.csv", coefficient_csv({&comparison, 1}));
    csv::write_file(out / "estimates.md", comparison_markdown(comparison, config.window));
  }
  return kOk;
}

struct BacktestArgs {
  std::string experiments;
  bool synthetic = false;
  std::optional<double> beta;
  std::string mode;
  std::optional<double> alpha;
  std::optional<std::int64_t> top_n;
};

int cmd_backtest(const Common& common, const BacktestArgs& args) {
  const RunConfig config = load_config(common);
  BacktestOptions options = config.backtest;
  if (!args.mode.empty()) options.mode = parse_delta_mode(args.mode);
  if (args.alpha) options.significance_alpha = *args.alpha;
  if (args.top_n) options.top_n = *args.top_n;

  const std::optional<double> beta = args.beta ? args.beta : config.backtest_beta;
  if (!beta) fail(ErrorKind::InvalidArgument, "backtest needs --beta or backtest.beta in the config");
  if (!std::isfinite(*beta)) fail(ErrorKind::InvalidArgument, "beta must be finite");

  std::vector<ExperimentRecord> corpus;
  if (args.synthetic) {
    corpus = simulate_experiment_corpus(config.corpus, common.seed);
  } else if (!args.experiments.empty()) {
    corpus = csv::read_experiments(csv::read_file(args.experiments));
  } else {
    fail(ErrorKind::InvalidArgument, "backtest needs --experiments or --synthetic");
  }

  const auto summary = aggregate_error(corpus, *beta, options);
  std::cout << (common.format == "csv" ? backtest_summary_csv(summary) : backtest_markdown(summary));

  if (!common.out.empty()) {
    const fs::path out(common.out);
    ensure_dir(out);
    if (args.synthetic) csv::write_file(out / "experiments.csv", csv::write_experiments(corpus));
    csv::write_file(out / "backtest_adjusted.csv", csv::write_adjusted(summary.selected));
    csv::write_file(out / "backtest_summary.csv", backtest_summary_csv(summary));
    csv::write_file(out / "backtest_histogram.csv", csv::write_histogram(summary.histogram));
  }
  return kOk;
}

int cmd_simulate(const Common& common) {
  const RunConfig config = load_config(common);
  const auto artifacts = run_simulation(config, common.seed);
  write_simulation(artifacts, config, common.seed, common.out);
  std::cout << "wrote " << artifacts.members.size() << " members, " << artifacts.edges.edges.size()
            << " edges, " << artifacts.simulation.panel.size() << " panel rows to " << common.out
            << '\n';
  return kOk;
}

int cmd_report(const Common& common) {
  const RunConfig config = load_config(common);
  const auto outputs = run_report(config, common.seed, common.out);
  if (common.format == "csv") {
    std::cout << coefficient_csv(outputs.comparisons);
  } else {
    std::cout << csv::read_file(fs::path(common.out) / "report.md");
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Peer-effect estimation from notification-queue natural experiments"};
  app.require_subcommand(1);

  Common common;
  auto* simulate = app.add_subcommand("simulate", "Simulate a population, graph and panel");
  add_common(*simulate, common, true);

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "Estimate the peer effect from panel files");
  add_common(*estimate, common, false);
  estimate->add_option("--dir", est.dir, "Directory written by simulate");
  estimate->add_option("--panel", est.panel, "Panel CSV");
  estimate->add_option("--assignments", est.assignments, "Group assignment CSV");
  estimate->add_option("--population", est.population, "Population CSV (enables controls)");
  estimate->add_option("--schedules", est.schedules, "Schedule CSV");
  estimate->add_option("--model", est.models, "ols, ols_controls, fe or iv (repeatable)");
  estimate->add_option("--occasion", est.occasion, "birthday or anniversary");
  estimate->add_flag("--all-models", est.all_models, "Four-model comparison");
  estimate->add_flag("--aa-test", est.aa, "Pre-period Welch test first");

  BacktestArgs bt;
  auto* backtest = app.add_subcommand("backtest", "Network-adjust A/B test deltas");
  add_common(*backtest, common, false);
  backtest->add_option("--experiments", bt.experiments, "Experiment corpus CSV");
  backtest->add_flag("--synthetic", bt.synthetic, "Simulate the corpus from the config");
  backtest->add_option("--beta", bt.beta, "Peer-effect coefficient");
  backtest->add_option("--mode", bt.mode, "absolute or literal");
  backtest->add_option("--alpha", bt.alpha, "Pageview significance level");
  backtest->add_option("--top-n", bt.top_n, "Experiments kept by message impact");

  auto* report = app.add_subcommand("report", "Simulate, estimate and backtest end to end");
  add_common(*report, common, true);

  auto* config_cmd = app.add_subcommand("config", "Print the default config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*simulate) return cmd_simulate(common);
    if (*estimate) return cmd_estimate(common, est);
    if (*backtest) return cmd_backtest(common, bt);
    if (*report) return cmd_report(common);
    if (*config_cmd) {
      std::cout << default_config_text();
      return kOk;
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kUsage;
}
