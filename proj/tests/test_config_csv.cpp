#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "peerfx/config.hpp"
#include "peerfx/csv.hpp"
#include "peerfx/error.hpp"
#include "peerfx/pipeline.hpp"

using namespace peerfx;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::InvalidArgument;
}

std::string message_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("default config text parses to the defaults") {
  const auto text = default_config_text();
  const auto parsed = parse_run_config(text);
  CHECK(serialize_run_config(parsed) == serialize_run_config(RunConfig{}));
  parsed.validate();
}

TEST_CASE("config values override defaults and round-trip") {
  const auto c = parse_run_config(
      "# comment\n"
      "population.n_members = 500   # trailing comment\n"
      "dgp.true_beta = 1.5\n"
      "window.observational_weeks = 6,7,8\n"
      "estimator.occasion = birthday\n"
      "backtest.beta = 2.25\n"
      "backtest.mode = literal\n");
  CHECK(c.population.n_members == 500);
  CHECK(c.dgp.true_beta == 1.5);
  CHECK(c.window.observational_weeks == std::vector<int>{6, 7, 8});
  CHECK(c.estimator.occasion == Occasion::birthday);
  REQUIRE(c.backtest_beta.has_value());
  CHECK(*c.backtest_beta == 2.25);
  CHECK(c.backtest.mode == DeltaMode::literal);
  CHECK(serialize_run_config(parse_run_config(serialize_run_config(c))) == serialize_run_config(c));
}

TEST_CASE("config errors name the line") {
  CHECK(kind_of([] { parse_run_config("dgp.true_beta = 2\nbogus.key = 1\n"); }) ==
        ErrorKind::ConfigError);
  CHECK(message_of([] { parse_run_config("dgp.true_beta = 2\nbogus.key = 1\n"); })
            .find("line 2") != std::string::npos);
  CHECK(message_of([] { parse_run_config("dgp.true_beta = x\n"); }).find("line 1") !=
        std::string::npos);
  CHECK(kind_of([] { parse_run_config("dgp.true_beta = 1\ndgp.true_beta = 2\n"); }) ==
        ErrorKind::ConfigError);
  CHECK(kind_of([] { parse_run_config("no equals sign\n"); }) == ErrorKind::ConfigError);
}

TEST_CASE("n_members = 1 is rejected naming the constraint") {
  const auto load = [] { parse_run_config("population.n_members = 1\n").validate(); };
  CHECK(kind_of(load) == ErrorKind::ConfigError);
  CHECK(message_of(load).find("n_members") != std::string::npos);
}

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("format_double is the shortest round-tripping text") {
  CHECK(csv::format_double(0.1) == "0.1");
  CHECK(csv::format_double(2.0) == "2");
  CHECK(csv::format_double(-1.5e-20) == "-1.5e-20");
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) / (1 + i);
    CHECK(std::stod(csv::format_double(v)) == v);
  }
  CHECK(csv::format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(csv::format_double(std::numeric_limits<double>::infinity()) == "inf");
}

TEST_CASE("every simulation file round-trips byte for byte") {
  RunConfig config;
  config.population.n_members = 400;
  const auto art = run_simulation(config, 3);

  const auto members = csv::write_members(art.members);
  CHECK(csv::write_members(csv::read_members(members)) == members);
  CHECK(csv::read_members(members) == art.members);

  const auto edges = csv::write_edges(art.edges);
  CHECK(csv::write_edges(csv::read_edges(edges)) == edges);

  const auto schedules = csv::write_schedules(art.schedules);
  CHECK(csv::write_schedules(csv::read_schedules(schedules)) == schedules);

  const auto assignments = csv::write_assignments(art.assignments);
  CHECK(csv::write_assignments(csv::read_assignments(assignments)) == assignments);

  const auto panel = csv::write_panel(art.simulation.panel);
  CHECK(csv::write_panel(csv::read_panel(panel)) == panel);
  CHECK(csv::read_panel(panel) == art.simulation.panel);

  const auto truth = csv::write_ground_truth(art.simulation.truth);
  const auto back = csv::read_ground_truth(truth);
  CHECK(csv::write_ground_truth(back) == truth);
  CHECK(back.alpha == art.simulation.truth.alpha);
  CHECK(back.seed == 3);

  const auto corpus = simulate_experiment_corpus(CorpusConfig{}, 3);
  const auto experiments = csv::write_experiments(corpus);
  CHECK(csv::write_experiments(csv::read_experiments(experiments)) == experiments);
  CHECK(csv::read_experiments(experiments) == corpus);
}

TEST_CASE("malformed rows name their line") {
  const std::string text = "member_id,week,messages_received,pageviews\n1,1,2,3\n1,2,x,3\n";
  CHECK(kind_of([&] { csv::read_panel(text); }) == ErrorKind::DataError);
  CHECK(message_of([&] { csv::read_panel(text); }).find("line 3") != std::string::npos);
  CHECK(kind_of([] { csv::read_panel("member_id,week,messages_received,pageviews\n1,1,2\n"); }) ==
        ErrorKind::DataError);
  CHECK(kind_of([] { csv::read_panel("wrong,header\n"); }) == ErrorKind::DataError);
  CHECK(kind_of([] { csv::read_panel(""); }) == ErrorKind::InsufficientData);
  CHECK(csv::read_panel("member_id,week,messages_received,pageviews\n").empty());
}

TEST_CASE("estimates csv has one row per coefficient") {
  EstimationResult r;
  r.coefficients = {{"(Intercept)", 1, 0.5, 2, 0.05}, {"messages_received", 2, 0.1, 20, 0}};
  r.n_observations = 10;
  const auto text = csv::write_estimates(std::span<const EstimationResult>(&r, 1));
  CHECK(text.rfind("model,term,estimate,std_error,t_stat,p_value,r_squared,adj_r_squared,"
                   "f_statistic,n_observations\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}
