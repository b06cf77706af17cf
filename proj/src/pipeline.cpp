#include "peerfx/pipeline.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "peerfx/csv.hpp"
#include "peerfx/error.hpp"

namespace peerfx {

namespace {

std::string fixed(double v, int digits = 3) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.*f", digits, v);
  return buffer;
}

std::string hash_text(std::string_view bytes) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "fnv1a64:%016" PRIx64, fnv1a64(bytes));
  return buffer;
}

std::string weeks_label(const std::vector<int>& weeks) {
  if (weeks.empty()) return "";
  bool contiguous = true;
  for (std::size_t i = 1; i < weeks.size(); ++i) contiguous &= weeks[i] == weeks[i - 1] + 1;
  if (weeks.size() == 1) return "week " + std::to_string(weeks.front());
  if (contiguous) {
    return "weeks " + std::to_string(weeks.front()) + "-" + std::to_string(weeks.back());
  }
  std::string out = "weeks ";
  for (std::size_t i = 0; i < weeks.size(); ++i) out += (i ? "," : "") + std::to_string(weeks[i]);
  return out;
}

std::string coefficient_cell(const EstimationResult& r) {
  const auto& c = r.at(kMessages);
  return fixed(c.estimate) + std::string(significance_stars(c.p_value)) + " (" + fixed(c.std_error) + ")";
}

std::string f_cell(const EstimationResult& r) {
  const int digits = r.f_statistic >= 100.0 ? 0 : 2;
  return fixed(r.f_statistic, digits) + std::string(significance_stars(r.f_p_value));
}

std::string title_case(Occasion occasion) {
  return occasion == Occasion::birthday ? "Birthday" : "Work anniversary";
}

CovariateTable covariates_for(std::span<const MemberId> ids, std::span<const MemberRecord> members) {
  std::vector<PanelObservation> rows(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) rows[i].member_id = ids[i];
  return member_covariates(rows, members);
}

}  // namespace

SimulationArtifacts run_simulation(const RunConfig& config, std::uint64_t seed) {
  config.validate();
  SimulationArtifacts out;
  out.members = generate_population(config.population, seed);
  out.edges = generate_graph(out.members, config.graph, seed);
  out.schedules = schedule_birthdays(out.members, config.window);
  const auto anniversaries = schedule_all_anniversaries(out.members, seed);
  out.schedules.insert(out.schedules.end(), anniversaries.begin(), anniversaries.end());
  out.assignments = assign_groups(out.schedules, config.window);
  const Adjacency graph(static_cast<std::int64_t>(out.members.size()), out.edges);
  const auto messages =
      simulate_messages(out.members, graph, out.schedules, config.window, config.dgp, seed);
  out.simulation = simulate_pageviews(out.members, messages, config.dgp, seed);
  return out;
}

void write_simulation(const SimulationArtifacts& artifacts, const RunConfig& config,
                      std::uint64_t seed, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorKind::IoError, "cannot create " + out_dir.string() + ": " + ec.message());

  const std::vector<std::pair<const char*, std::string>> files = {
      {kPopulationFile, csv::write_members(artifacts.members)},
      {kEdgesFile, csv::write_edges(artifacts.edges)},
      {kSchedulesFile, csv::write_schedules(artifacts.schedules)},
      {kAssignmentsFile, csv::write_assignments(artifacts.assignments)},
      {kPanelFile, csv::write_panel(artifacts.simulation.panel)},
      {kGroundTruthFile, csv::write_ground_truth(artifacts.simulation.truth)},
  };
  const std::string config_text = serialize_run_config(config);
  std::string manifest = "seed = " + std::to_string(seed) + "\n";
  manifest += "config_hash = " + hash_text(config_text) + "\n";
  for (const auto& [name, contents] : files) {
    csv::write_file(out_dir / name, contents);
    manifest += std::string(name) + " = " + hash_text(contents) + "\n";
  }
  manifest += "\n[config]\n" + config_text;
  csv::write_file(out_dir / kManifestFile, manifest);
}

EstimationInputs inputs_from(const SimulationArtifacts& artifacts) {
  return EstimationInputs{artifacts.simulation.panel, artifacts.assignments, artifacts.schedules,
                          artifacts.members};
}

std::vector<PanelObservation> observational_sample(const EstimationInputs& inputs,
                                                   const WindowConfig& window,
                                                   double trim_top_fraction) {
  const std::set<int> weeks(window.observational_weeks.begin(), window.observational_weeks.end());
  std::unordered_set<MemberId> notified;
  if (inputs.schedules) {
    for (const auto& s : *inputs.schedules) {
      if (weeks.count(s.scheduled_week)) notified.insert(s.member_id);
    }
  }
  std::vector<PanelObservation> rows;
  for (const auto& row : inputs.panel) {
    if (weeks.count(row.week) && !notified.count(row.member_id)) rows.push_back(row);
  }
  return trim_outliers(rows, trim_top_fraction, PanelColumn::pageviews);
}

InstrumentSample instrument_sample(const EstimationInputs& inputs, Occasion occasion,
                                   const WindowConfig& window, double trim_top_fraction) {
  std::map<MemberId, double> treated;
  for (const auto& a : inputs.assignments) {
    if (a.occasion != occasion || a.group == Group::excluded) continue;
    treated[a.member_id] = a.group == Group::treatment ? 1.0 : 0.0;
  }
  const std::set<int> weeks(window.observation_weeks.begin(), window.observation_weeks.end());
  std::map<MemberId, std::tuple<double, double, std::size_t>> totals;
  for (const auto& row : inputs.panel) {
    if (!weeks.count(row.week) || !treated.count(row.member_id)) continue;
    auto& [pv, m, count] = totals[row.member_id];
    pv += static_cast<double>(row.pageviews);
    m += static_cast<double>(row.messages_received);
    ++count;
  }

  std::vector<MemberId> ids;
  std::vector<double> pv, msg, t;
  for (const auto& [id, flag] : treated) {
    const auto it = totals.find(id);
    if (it == totals.end() || std::get<2>(it->second) != weeks.size()) {
      fail(ErrorKind::DataError, "member " + std::to_string(id) +
                                     " lacks panel rows for every observation week");
    }
    ids.push_back(id);
    pv.push_back(std::get<0>(it->second));
    msg.push_back(std::get<1>(it->second));
    t.push_back(flag);
  }
  const auto keep = trim_mask(pv, trim_top_fraction);
  const auto kept = static_cast<Eigen::Index>(std::count(keep.begin(), keep.end(), true));
  InstrumentSample out;
  out.pageviews.resize(kept);
  out.messages.resize(kept);
  out.treated.resize(kept);
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!keep[i]) continue;
    out.member_ids.push_back(ids[i]);
    out.pageviews(r) = pv[i];
    out.messages(r) = msg[i];
    out.treated(r) = t[i];
    ++r;
  }
  return out;
}

std::pair<std::vector<double>, std::vector<double>> pre_period_samples(
    const EstimationInputs& inputs, Occasion occasion, const WindowConfig& window,
    double trim_top_fraction) {
  std::unordered_map<MemberId, Group> group;
  for (const auto& a : inputs.assignments) {
    if (a.occasion == occasion && a.group != Group::excluded) group[a.member_id] = a.group;
  }
  std::vector<double> values;
  std::vector<bool> is_treatment;
  for (const auto& row : inputs.panel) {
    if (row.week != window.pre_period_week) continue;
    const auto it = group.find(row.member_id);
    if (it == group.end()) continue;
    values.push_back(static_cast<double>(row.pageviews));
    is_treatment.push_back(it->second == Group::treatment);
  }
  const auto keep = trim_mask(values, trim_top_fraction);
  std::pair<std::vector<double>, std::vector<double>> out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!keep[i]) continue;
    (is_treatment[i] ? out.first : out.second).push_back(values[i]);
  }
  return out;
}

Model parse_model(std::string_view text) {
  if (text == "ols") return Model::ols;
  if (text == "ols_controls") return Model::ols_controls;
  if (text == "fe") return Model::fe;
  if (text == "iv") return Model::iv;
  fail(ErrorKind::InvalidArgument, "unknown model '" + std::string(text) + "'");
}

std::string_view to_string(Model model) noexcept {
  switch (model) {
    case Model::ols: return "ols";
    case Model::ols_controls: return "ols_controls";
    case Model::fe: return "fe";
    case Model::iv: return "iv";
  }
  return "ols";
}

std::vector<EstimationResult> ModelComparison::results() const {
  std::vector<EstimationResult> out;
  if (ols) out.push_back(*ols);
  if (ols_controls) out.push_back(*ols_controls);
  if (fixed_effects) out.push_back(*fixed_effects);
  if (iv) {
    out.push_back(iv->first_stage);
    out.push_back(iv->second_stage);
  }
  return out;
}

TTestResult aa_test(const EstimationInputs& inputs, Occasion occasion, const RunConfig& config) {
  const auto [treatment, control] = pre_period_samples(inputs, occasion, config.window,
                                                       config.estimator.trim_top_fraction);
  return welch_t_test(treatment, control);
}

ModelComparison estimate_models(const EstimationInputs& inputs, const RunConfig& config,
                                Occasion occasion, std::span<const Model> models, bool run_aa) {
  static constexpr Model kAll[] = {Model::ols, Model::ols_controls, Model::fe, Model::iv};
  if (models.empty()) models = kAll;
  if (inputs.panel.empty()) fail(ErrorKind::InsufficientData, "panel is empty");

  ModelComparison out;
  out.occasion = occasion;
  if (run_aa) out.aa_test = aa_test(inputs, occasion, config);

  const double trim = config.estimator.trim_top_fraction;
  const auto wants = [&](Model m) { return std::find(models.begin(), models.end(), m) != models.end(); };
  if (wants(Model::ols) || wants(Model::ols_controls) || wants(Model::fe)) {
    const auto sample = observational_sample(inputs, config.window, trim);
    if (sample.empty()) fail(ErrorKind::InsufficientData, "observational sample is empty");
    Eigen::VectorXd y(static_cast<Eigen::Index>(sample.size()));
    Eigen::VectorXd m(static_cast<Eigen::Index>(sample.size()));
    for (std::size_t i = 0; i < sample.size(); ++i) {
      y(static_cast<Eigen::Index>(i)) = static_cast<double>(sample[i].pageviews);
      m(static_cast<Eigen::Index>(i)) = static_cast<double>(sample[i].messages_received);
    }
    if (wants(Model::ols)) {
      out.ols = ols(y, NamedDesign{m, {std::string(kMessages)}}, true, config.estimator.covariance);
    }
    if (wants(Model::ols_controls)) {
      if (!inputs.members) {
        fail(ErrorKind::InvalidArgument, "ols_controls needs the population file");
      }
      out.ols_controls = ols_with_controls(y, m, member_covariates(sample, *inputs.members),
                                           ControlSpec::standard(), config.estimator.covariance);
    }
    if (wants(Model::fe)) out.fixed_effects = fixed_effects(sample);
  }
  if (wants(Model::iv)) {
    const auto sample = instrument_sample(inputs, occasion, config.window, trim);
    if (sample.pageviews.size() < 4) {
      fail(ErrorKind::InsufficientData, "instrument sample has fewer than 4 members");
    }
    std::optional<NamedDesign> controls;
    if (config.estimator.iv_controls && inputs.members) {
      std::vector<std::string> warnings;
      controls = encode_controls(covariates_for(sample.member_ids, *inputs.members),
                                 ControlSpec::standard(), warnings);
      out.iv = two_stage_least_squares(sample.pageviews, sample.messages, sample.treated, controls,
                                       {config.estimator.weak_instrument_threshold});
      auto& w = out.iv->second_stage.warnings;
      w.insert(w.begin(), warnings.begin(), warnings.end());
    } else {
      out.iv = two_stage_least_squares(sample.pageviews, sample.messages, sample.treated,
                                       std::nullopt, {config.estimator.weak_instrument_threshold});
    }
  }
  return out;
}

std::string comparison_markdown(const ModelComparison& c, const WindowConfig& window) {
  const std::string obs = weeks_label(window.observational_weeks);
  const std::string iv = weeks_label(window.observation_weeks);
  const bool iv_controls = c.iv && c.iv->second_stage.coefficients.size() > 2;
  struct Column {
    std::string header;
    const EstimationResult* result;
    const char* controls;
    const char* fe;
  };
  const std::vector<Column> columns = {
      {"OLS (" + obs + ")", c.ols ? &*c.ols : nullptr, "No", "No"},
      {"OLS (" + obs + ")", c.ols_controls ? &*c.ols_controls : nullptr, "Yes", "No"},
      {"User FE (" + obs + ")", c.fixed_effects ? &*c.fixed_effects : nullptr, "No", "Yes"},
      {"Instrumental Variable (" + iv + ")", c.iv ? &c.iv->second_stage : nullptr,
       iv_controls ? "Yes" : "No", "No"},
  };

  std::ostringstream out;
  out << "### " << title_case(c.occasion)
      << " encouragement: regression of member pageviews on messages received\n\n";
  out << "| Dependent variable: Pageviews |";
  for (const auto& col : columns) out << ' ' << col.header << " |";
  out << "\n|---|---|---|---|---|\n";
  const auto row = [&](const std::string& label, auto cell) {
    out << "| " << label << " |";
    for (const auto& col : columns) out << ' ' << (col.result ? cell(col) : std::string()) << " |";
    out << '\n';
  };
  row("Messages Received", [](const Column& col) { return coefficient_cell(*col.result); });
  row("Includes Controls", [](const Column& col) { return std::string(col.controls); });
  row("Includes User FE", [](const Column& col) { return std::string(col.fe); });
  row("Includes Time FE", [](const Column& col) { return std::string(col.fe); });
  row("Observations", [](const Column& col) { return std::to_string(col.result->n_observations); });
  row("R²", [](const Column& col) { return fixed(col.result->r_squared); });
  row("Adjusted R²", [](const Column& col) { return fixed(col.result->adj_r_squared); });
  row("F-Statistic", [](const Column& col) { return f_cell(*col.result); });
  out << "\nNote: *p<0.05; **p<0.01; ***p<0.001\n";
  if (c.aa_test) {
    out << "\nA/A pre-period test (week " << window.pre_period_week
        << ", treatment vs control pageviews): " << format_ttest(*c.aa_test) << '\n';
  }
  if (c.iv) {
    out << "\nFirst-stage F: " << fixed(c.iv->first_stage_f, 2)
        << (c.iv->weak_instrument ? " (WEAK INSTRUMENT)" : "") << '\n';
  }
  return out.str();
}

std::string first_stage_markdown(std::span<const ModelComparison> comparisons) {
  std::ostringstream out;
  out << "### Stage 1: messages received by ego on peer encouragement treatment status\n\n";
  out << "| Dependent variable: Messages Received |";
  for (const auto& c : comparisons) out << ' ' << title_case(c.occasion) << " |";
  out << "\n|---|";
  for (std::size_t i = 0; i < comparisons.size(); ++i) out << "---|";
  out << '\n';
  const auto row = [&](const std::string& label, auto cell) {
    out << "| " << label << " |";
    for (const auto& c : comparisons) out << ' ' << (c.iv ? cell(*c.iv) : std::string()) << " |";
    out << '\n';
  };
  row("Peer treatment", [](const TwoStageResult& iv) {
    const auto& g = iv.first_stage.at("instrument");
    return fixed(g.estimate) + std::string(significance_stars(g.p_value)) + " (" + fixed(g.std_error) + ")";
  });
  row("R²", [](const TwoStageResult& iv) { return fixed(iv.first_stage.r_squared); });
  row("First-stage F", [](const TwoStageResult& iv) { return fixed(iv.first_stage_f, 2); });
  row("Observations", [](const TwoStageResult& iv) { return std::to_string(iv.first_stage.n_observations); });
  out << "\nNote: *p<0.05; **p<0.01; ***p<0.001\n";
  return out.str();
}

std::string coefficient_csv(std::span<const ModelComparison> comparisons) {
  std::ostringstream out;
  out << "occasion,model,estimate,std_error,ci_low,ci_high\n";
  for (const auto& c : comparisons) {
    for (const auto& r : c.results()) {
      if (r.model_tag == ModelTag::iv_first_stage) continue;
      const auto& coef = r.at(kMessages);
      out << to_string(c.occasion) << ',' << to_string(r.model_tag) << ','
          << csv::format_double(coef.estimate) << ',' << csv::format_double(coef.std_error) << ','
          << csv::format_double(coef.estimate - 1.959963984540054 * coef.std_error) << ','
          << csv::format_double(coef.estimate + 1.959963984540054 * coef.std_error) << '\n';
    }
  }
  return out.str();
}

std::string backtest_markdown(const ErrorSummary& s) {
  std::ostringstream out;
  out << "### Backtest: network-adjusted experiment deltas\n\n"
      << "| Quantity | Value |\n|---|---|\n"
      << "| beta | " << fixed(s.beta, 4) << " |\n"
      << "| mode | " << to_string(s.mode) << " |\n"
      << "| experiments | " << s.n_records << " |\n"
      << "| kept by message impact | " << s.n_ranked << " |\n"
      << "| significant pageview movers | " << s.n_significant << " |\n"
      << "| excluded (zero delta) | " << s.n_zero_delta << " |\n"
      << "| mean error | " << fixed(100.0 * s.mean_error, 1) << "% |\n"
      << "| median error | " << fixed(100.0 * s.median_error, 1) << "% |\n"
      << "| signed-error skewness | " << fixed(s.signed_error_skewness) << " |\n";
  return out.str();
}

std::string backtest_summary_csv(const ErrorSummary& s) {
  std::ostringstream out;
  out << "beta,mode,n_records,n_ranked,n_significant,n_zero_delta,n_used,mean_error,median_error,"
         "signed_error_skewness\n"
      << csv::format_double(s.beta) << ',' << to_string(s.mode) << ',' << s.n_records << ','
      << s.n_ranked << ',' << s.n_significant << ',' << s.n_zero_delta << ',' << s.selected.size()
      << ',' << csv::format_double(s.mean_error) << ',' << csv::format_double(s.median_error) << ','
      << csv::format_double(s.signed_error_skewness) << '\n';
  return out.str();
}

ReportOutputs run_report(const RunConfig& config, std::uint64_t seed,
                         const std::filesystem::path& out_dir) {
  ReportOutputs out;
  out.artifacts = run_simulation(config, seed);
  write_simulation(out.artifacts, config, seed, out_dir);
  const auto inputs = inputs_from(out.artifacts);

  std::string markdown = "# Peer-effect estimation report\n\nseed = " + std::to_string(seed) + "\n\n";
  for (const Occasion occasion : {Occasion::birthday, Occasion::anniversary}) {
    out.comparisons.push_back(estimate_models(inputs, config, occasion, {}, true));
    const auto& c = out.comparisons.back();
    markdown += comparison_markdown(c, config.window) + "\n";
    csv::write_file(out_dir / ("estimates_" + std::string(to_string(occasion)) + ".csv"),
                    csv::write_estimates(c.results()));
  }
  markdown += first_stage_markdown(out.comparisons) + "\n";
  csv::write_file(out_dir / "coefficients.csv", coefficient_csv(out.comparisons));

  const auto& primary = config.estimator.occasion == Occasion::birthday ? out.comparisons[0]
                                                                         : out.comparisons[1];
  out.backtest_beta = config.backtest_beta.value_or(primary.iv->second_stage.at(kMessages).estimate);
  out.corpus = simulate_experiment_corpus(config.corpus, seed);
  out.backtest = aggregate_error(out.corpus, out.backtest_beta, config.backtest);
  csv::write_file(out_dir / "experiments.csv", csv::write_experiments(out.corpus));
  csv::write_file(out_dir / "backtest_adjusted.csv", csv::write_adjusted(out.backtest.selected));
  csv::write_file(out_dir / "backtest_summary.csv", backtest_summary_csv(out.backtest));
  csv::write_file(out_dir / "backtest_histogram.csv", csv::write_histogram(out.backtest.histogram));
  markdown += backtest_markdown(out.backtest);
  csv::write_file(out_dir / "report.md", markdown);
  return out;
}

}  // namespace peerfx
