#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "peerfx/backtest.hpp"
#include "peerfx/behavior.hpp"
#include "peerfx/config.hpp"
#include "peerfx/estimators.hpp"
#include "peerfx/notifqueue.hpp"
#include "peerfx/synthnet.hpp"

namespace peerfx {

struct SimulationArtifacts {
  std::vector<MemberRecord> members;
  EdgeList edges;
  std::vector<NotificationSchedule> schedules;  // birthdays, then anniversaries
  std::vector<GroupAssignment> assignments;
  PanelSimulation simulation;
};

SimulationArtifacts run_simulation(const RunConfig& config, std::uint64_t seed);

/// File names written by write_simulation, in order.
inline constexpr const char* kPopulationFile = "population.csv";
inline constexpr const char* kEdgesFile = "edges.csv";
inline constexpr const char* kSchedulesFile = "schedules.csv";
inline constexpr const char* kAssignmentsFile = "assignments.csv";
inline constexpr const char* kPanelFile = "panel.csv";
inline constexpr const char* kGroundTruthFile = "ground_truth.csv";
inline constexpr const char* kManifestFile = "manifest.txt";

void write_simulation(const SimulationArtifacts& artifacts, const RunConfig& config,
                      std::uint64_t seed, const std::filesystem::path& out_dir);

/// What the estimators need; schedules and members are optional (without
/// them the observational sample is not filtered and controls are skipped).
struct EstimationInputs {
  std::vector<PanelObservation> panel;
  std::vector<GroupAssignment> assignments;
  std::optional<std::vector<NotificationSchedule>> schedules;
  std::optional<std::vector<MemberRecord>> members;
};

EstimationInputs inputs_from(const SimulationArtifacts& artifacts);

/// Member-weeks in the observational window, without members notified (for
/// either occasion) during that window, with top pageviews trimmed.
std::vector<PanelObservation> observational_sample(const EstimationInputs& inputs,
                                                   const WindowConfig& window,
                                                   double trim_top_fraction);

/// One row per treatment/control member: totals over the observation weeks.
struct InstrumentSample {
  std::vector<MemberId> member_ids;
  Eigen::VectorXd pageviews;
  Eigen::VectorXd messages;
  Eigen::VectorXd treated;  // 1 treatment, 0 control
};

InstrumentSample instrument_sample(const EstimationInputs& inputs, Occasion occasion,
                                   const WindowConfig& window, double trim_top_fraction);

/// Pre-period pageviews of the treatment (first) and control (second) groups.
std::pair<std::vector<double>, std::vector<double>> pre_period_samples(
    const EstimationInputs& inputs, Occasion occasion, const WindowConfig& window,
    double trim_top_fraction);

enum class Model { ols, ols_controls, fe, iv };
Model parse_model(std::string_view text);
std::string_view to_string(Model model) noexcept;

struct ModelComparison {
  Occasion occasion = Occasion::anniversary;
  std::optional<TTestResult> aa_test;
  std::optional<EstimationResult> ols;
  std::optional<EstimationResult> ols_controls;
  std::optional<EstimationResult> fixed_effects;
  std::optional<TwoStageResult> iv;

  /// Results in table order (OLS, OLS + controls, FE, IV second stage).
  std::vector<EstimationResult> results() const;
};

/// Runs the requested models (all four when `models` is empty).
ModelComparison estimate_models(const EstimationInputs& inputs, const RunConfig& config,
                                Occasion occasion, std::span<const Model> models = {},
                                bool aa_test = false);

TTestResult aa_test(const EstimationInputs& inputs, Occasion occasion, const RunConfig& config);

/// Four-column regression table: OLS, OLS with controls, two-way FE, IV.
std::string comparison_markdown(const ModelComparison& comparison, const WindowConfig& window);
std::string first_stage_markdown(std::span<const ModelComparison> comparisons);
/// occasion,model,estimate,std_error,ci_low,ci_high (95% normal interval).
std::string coefficient_csv(std::span<const ModelComparison> comparisons);
std::string backtest_markdown(const ErrorSummary& summary);
std::string backtest_summary_csv(const ErrorSummary& summary);

struct ReportOutputs {
  SimulationArtifacts artifacts;
  std::vector<ModelComparison> comparisons;  // birthday, anniversary
  std::vector<ExperimentRecord> corpus;
  ErrorSummary backtest;
  double backtest_beta = 0.0;
};

/// Full pipeline: simulate, write the artifact set, estimate every model for
/// both occasions, backtest a synthetic corpus and write the reports.
ReportOutputs run_report(const RunConfig& config, std::uint64_t seed,
                         const std::filesystem::path& out_dir);

}  // namespace peerfx
