#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "peerfx/behavior.hpp"
#include "peerfx/error.hpp"
#include "peerfx/estimators.hpp"
#include "peerfx/notifqueue.hpp"
#include "peerfx/pipeline.hpp"

using namespace peerfx;

namespace {

struct Small {
  std::vector<MemberRecord> members;
  EdgeList edges;
  std::vector<NotificationSchedule> schedules;
};

Small small_world(std::int64_t n, std::uint64_t seed) {
  PopulationConfig pc;
  pc.n_members = n;
  Small s;
  s.members = generate_population(pc, seed);
  GraphConfig gc;
  gc.target_mean_degree = std::min<double>(20.0, n / 4.0);
  s.edges = generate_graph(s.members, gc, seed);
  s.schedules = schedule_birthdays(s.members, WindowConfig{});
  const auto ann = schedule_all_anniversaries(s.members, seed);
  s.schedules.insert(s.schedules.end(), ann.begin(), ann.end());
  return s;
}

}  // namespace

TEST_CASE("no sending means no messages") {
  const auto s = small_world(300, 2);
  DGPConfig cfg;
  cfg.response_prob = 0;
  cfg.spontaneous_rate = 0;
  const WindowConfig w;
  const auto m = simulate_messages(s.members, Adjacency(300, s.edges), s.schedules, w, cfg, 2);
  CHECK(m.first_week == w.first_week());
  CHECK(m.last_week() == w.last_week());
  CHECK(m.counts.rows() == 300);
  CHECK((m.counts == 0).all());
}

TEST_CASE("encouraged messages are binomial in the notified week") {
  // Ego 0 with k peers; ego's birthday falls in week 2.
  const int k = 6;
  const double p = 0.4;
  std::vector<MemberRecord> members(k + 1);
  EdgeList edges;
  for (int i = 0; i <= k; ++i) {
    members[i].member_id = i;
    members[i].birth_week = 40;
    if (i) edges.edges.push_back({0, i});
  }
  members[0].birth_week = 2;
  const Adjacency adj(k + 1, edges);
  const auto schedules = schedule_birthdays(members, WindowConfig{});
  DGPConfig cfg;
  cfg.response_prob = p;
  cfg.spontaneous_rate = 0;
  std::vector<double> counts;
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
    const auto m = simulate_messages(members, adj, schedules, WindowConfig{}, cfg, seed);
    counts.push_back(static_cast<double>(m.counts(0, 2 - m.first_week)));
    CHECK(m.counts(0, 3 - m.first_week) == 0);
  }
  const double se = std::sqrt(k * p * (1 - p) / counts.size());
  CHECK(std::fabs(oracle::mean(counts) - k * p) < 3 * se);
}

TEST_CASE("first-stage contrast matches degree times response probability") {
  const std::int64_t n = 6000;
  const auto s = small_world(n, 17);
  const Adjacency adj(n, s.edges);
  const WindowConfig w;
  const DGPConfig cfg;
  const auto m = simulate_messages(s.members, adj, s.schedules, w, cfg, 17);
  const auto groups = assign_groups(s.schedules, w);
  std::vector<double> treat, control, degree_t;
  for (const auto& g : groups) {
    if (g.occasion != Occasion::anniversary || g.group == Group::excluded) continue;
    const double c = static_cast<double>(m.counts(g.member_id, w.treatment_week - m.first_week));
    if (g.group == Group::treatment) {
      treat.push_back(c);
      degree_t.push_back(static_cast<double>(adj.degree(g.member_id)));
    } else {
      control.push_back(c);
    }
  }
  const double contrast = oracle::mean(treat) - oracle::mean(control);
  const double expected = oracle::mean(degree_t) * cfg.response_prob;
  const double se =
      std::sqrt(oracle::variance(treat) / treat.size() + oracle::variance(control) / control.size());
  CHECK(std::fabs(contrast - expected) < 3 * se);
}

TEST_CASE("pageviews reduce to alpha plus tau without other terms") {
  const auto s = small_world(200, 4);
  DGPConfig cfg;
  cfg.true_beta = 0;
  cfg.confound_strength = 0;
  cfg.shock_strength = 0;
  cfg.noise_sd = 0;
  const WindowConfig w;
  const auto m = simulate_messages(s.members, Adjacency(200, s.edges), s.schedules, w, cfg, 4);
  const auto sim = simulate_pageviews(s.members, m, cfg, 4);
  CHECK(sim.panel.size() == 200u * m.n_weeks());
  for (const auto& row : sim.panel) {
    const double alpha = sim.truth.alpha[row.member_id];
    const double tau = sim.truth.tau[row.week - sim.truth.first_week];
    CHECK(row.pageviews == std::max<std::int64_t>(0, std::llround(alpha + tau)));
  }
}

TEST_CASE("one more message raises expected pageviews by beta") {
  const auto s = small_world(100, 6);
  const DGPConfig cfg;
  const auto m = simulate_messages(s.members, Adjacency(100, s.edges), s.schedules, WindowConfig{}, cfg, 6);
  const auto sim = simulate_pageviews(s.members, m, cfg, 6);
  for (int week = 1; week <= 12; ++week) {
    const double a = expected_pageviews(cfg, sim.truth, 0.3, week, 4);
    const double b = expected_pageviews(cfg, sim.truth, 0.3, week, 5);
    CHECK(b - a == doctest::Approx(cfg.true_beta).epsilon(1e-12));
  }
}

TEST_CASE("simulation is deterministic in the seed") {
  const auto s = small_world(300, 8);
  const Adjacency adj(300, s.edges);
  const DGPConfig cfg;
  const WindowConfig w;
  const auto a = simulate_pageviews(s.members, simulate_messages(s.members, adj, s.schedules, w, cfg, 8), cfg, 8);
  const auto b = simulate_pageviews(s.members, simulate_messages(s.members, adj, s.schedules, w, cfg, 8), cfg, 8);
  CHECK(a.panel == b.panel);
  CHECK(a.truth.alpha == b.truth.alpha);
  CHECK(weekly_shocks(8, 1, 12) == weekly_shocks(8, 1, 12));
  CHECK(weekly_shocks(8, 1, 12).size() == 12);
}

TEST_CASE("plain OLS is biased upward under confounding") {
  RunConfig config;
  config.population.n_members = 3000;
  const auto art = run_simulation(config, 5);
  const auto sample = observational_sample(inputs_from(art), config.window, 0.0);
  Eigen::VectorXd y(sample.size()), x(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) {
    y(i) = static_cast<double>(sample[i].pageviews);
    x(i) = static_cast<double>(sample[i].messages_received);
  }
  const auto r = ols(y, NamedDesign{x, {std::string(kMessages)}}, true);
  CHECK(r.at(kMessages).estimate > config.dgp.true_beta);
}

TEST_CASE("dgp config is validated") {
  DGPConfig cfg;
  cfg.response_prob = 1.5;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = DGPConfig{};
  cfg.noise_sd = -1;
  CHECK_THROWS_AS(cfg.validate(), Error);
}
