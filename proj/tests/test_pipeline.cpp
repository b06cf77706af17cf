#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "peerfx/csv.hpp"
#include "peerfx/error.hpp"
#include "peerfx/pipeline.hpp"

using namespace peerfx;
namespace fs = std::filesystem;

namespace {

RunConfig small_config() {
  RunConfig c;
  c.population.n_members = 2000;
  c.corpus.count = 300;
  return c;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("peerfx_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("simulation writes six csv files and a manifest, deterministically") {
  const auto config = small_config();
  const auto a = scratch("sim_a"), b = scratch("sim_b");
  write_simulation(run_simulation(config, 42), config, 42, a);
  write_simulation(run_simulation(config, 42), config, 42, b);
  int csv_files = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    const auto name = entry.path().filename();
    csv_files += entry.path().extension() == ".csv";
    CHECK(csv::read_file(entry.path()) == csv::read_file(b / name));
  }
  CHECK(csv_files == 6);
  const auto manifest = csv::read_file(a / kManifestFile);
  CHECK(manifest.find("seed = 42") != std::string::npos);
  CHECK(manifest.find("config_hash = fnv1a64:") != std::string::npos);
  CHECK(manifest.find("panel.csv = fnv1a64:") != std::string::npos);
}

TEST_CASE("files written by the simulation reload into identical inputs") {
  const auto config = small_config();
  const auto dir = scratch("reload");
  const auto art = run_simulation(config, 7);
  write_simulation(art, config, 7, dir);
  EstimationInputs in;
  in.panel = csv::read_panel(csv::read_file(dir / kPanelFile));
  in.assignments = csv::read_assignments(csv::read_file(dir / kAssignmentsFile));
  in.schedules = csv::read_schedules(csv::read_file(dir / kSchedulesFile));
  in.members = csv::read_members(csv::read_file(dir / kPopulationFile));
  const auto direct = estimate_models(inputs_from(art), config, Occasion::anniversary);
  const auto reloaded = estimate_models(in, config, Occasion::anniversary);
  CHECK(csv::write_estimates(direct.results()) == csv::write_estimates(reloaded.results()));
}

TEST_CASE("samples respect the windows") {
  const auto config = small_config();
  const auto art = run_simulation(config, 9);
  const auto in = inputs_from(art);
  for (const auto& row : observational_sample(in, config.window, 0.0)) {
    CHECK(row.week >= 5);
    CHECK(row.week <= 12);
  }
  const auto iv = instrument_sample(in, Occasion::anniversary, config.window, 0.0);
  CHECK(iv.pageviews.size() == static_cast<Eigen::Index>(iv.member_ids.size()));
  CHECK((iv.treated.array() == 0 || iv.treated.array() == 1).all());
  std::int64_t expected = 0;
  for (const auto& a : art.assignments) {
    expected += a.occasion == Occasion::anniversary && a.group != Group::excluded;
  }
  CHECK(iv.pageviews.size() == expected);
  const auto [t, c] = pre_period_samples(in, Occasion::anniversary, config.window, 0.0);
  CHECK(static_cast<std::int64_t>(t.size() + c.size()) == expected);
}

TEST_CASE("model comparison produces all four models and a readable table") {
  const auto config = small_config();
  const auto art = run_simulation(config, 11);
  const auto cmp = estimate_models(inputs_from(art), config, Occasion::anniversary, {}, true);
  REQUIRE(cmp.ols);
  REQUIRE(cmp.ols_controls);
  REQUIRE(cmp.fixed_effects);
  REQUIRE(cmp.iv);
  REQUIRE(cmp.aa_test);
  CHECK(cmp.results().size() == 5);
  const auto md = comparison_markdown(cmp, config.window);
  CHECK(md.find("Messages Received") != std::string::npos);
  CHECK(md.find("Note: *p<0.05; **p<0.01; ***p<0.001") != std::string::npos);
  CHECK(md.find("A/A pre-period test") != std::string::npos);
  const auto coef = coefficient_csv({&cmp, 1});
  CHECK(coef.rfind("occasion,model,estimate,std_error,ci_low,ci_high\n", 0) == 0);
  CHECK(std::count(coef.begin(), coef.end(), '\n') == 5);
}

TEST_CASE("ols_controls without a population is a usage error") {
  const auto config = small_config();
  auto in = inputs_from(run_simulation(config, 12));
  in.members.reset();
  const Model models[] = {Model::ols_controls};
  try {
    estimate_models(in, config, Occasion::anniversary, models);
    FAIL("expected InvalidArgument");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidArgument);
  }
}

TEST_CASE("report is byte-identical across runs") {
  auto config = small_config();
  const auto a = scratch("report_a"), b = scratch("report_b");
  const auto ra = run_report(config, 5, a);
  run_report(config, 5, b);
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    ++files;
    CHECK(csv::read_file(entry.path()) == csv::read_file(b / entry.path().filename()));
  }
  CHECK(files >= 13);
  CHECK(ra.comparisons.size() == 2);
  CHECK(ra.backtest_beta == ra.comparisons[1].iv->second_stage.at(kMessages).estimate);
}

TEST_CASE("model names parse") {
  for (auto m : {Model::ols, Model::ols_controls, Model::fe, Model::iv}) {
    CHECK(parse_model(to_string(m)) == m);
  }
  CHECK_THROWS_AS(parse_model("lasso"), Error);
}

TEST_CASE("controls pull OLS only slightly toward the truth") {
  const auto config = small_config();
  const auto art = run_simulation(config, 13);
  const auto sample = observational_sample(inputs_from(art), config.window, 0.01);
  Eigen::VectorXd y(sample.size()), x(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) {
    y(i) = static_cast<double>(sample[i].pageviews);
    x(i) = static_cast<double>(sample[i].messages_received);
  }
  const auto plain = ols(y, NamedDesign{x, {std::string(kMessages)}}, true);
  const auto cov = member_covariates(sample, art.members);
  const auto controlled = ols_with_controls(y, x, cov, ControlSpec::standard());
  const double b0 = plain.at(kMessages).estimate, b1 = controlled.at(kMessages).estimate;
  CHECK(b1 < b0);
  CHECK(b1 > config.dgp.true_beta);

  // A control unrelated to anything moves the slope by less than one SE.
  std::mt19937_64 rng(99);
  std::normal_distribution<double> n01;
  CovariateTable noise;
  noise.numeric["noise"].resize(sample.size());
  for (auto& v : noise.numeric["noise"]) v = n01(rng);
  const auto with_noise = ols_with_controls(y, x, noise, ControlSpec{{}, {"noise"}});
  CHECK(std::fabs(with_noise.at(kMessages).estimate - b0) < plain.at(kMessages).std_error);
}
