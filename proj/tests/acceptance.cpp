// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "peerfx/csv.hpp"
#include "peerfx/error.hpp"
#include "peerfx/pipeline.hpp"

using namespace peerfx;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(bool pass, const std::string& name, const std::string& detail) {
  std::printf("%s  %-22s %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += !pass;
}

std::string fmt(const char* f, auto... args) {
  char buffer[512];
  std::snprintf(buffer, sizeof buffer, f, args...);
  return buffer;
}

double mean(const std::vector<double>& v) { return oracle::mean(v); }

struct SeedRun {
  double ols = 0, fe = 0, iv = 0, iv_se = 0, first_stage_f = 0;
};

constexpr int kSeeds = 20;

std::vector<SeedRun> default_runs(double& max_seconds) {
  const RunConfig config;
  const Model models[] = {Model::ols, Model::fe, Model::iv};
  std::vector<SeedRun> runs;
  max_seconds = 0;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const auto start = std::chrono::steady_clock::now();
    const auto art = run_simulation(config, static_cast<std::uint64_t>(seed));
    const auto c = estimate_models(inputs_from(art), config, config.estimator.occasion, models);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    max_seconds = std::max(max_seconds, seconds);
    const auto& b = c.iv->second_stage.at(kMessages);
    runs.push_back({c.ols->at(kMessages).estimate, c.fixed_effects->at(kMessages).estimate,
                    b.estimate, b.std_error, c.iv->first_stage_f});
  }
  return runs;
}

void iv_recovery(const std::vector<SeedRun>& runs, double max_seconds) {
  const double beta = RunConfig{}.dgp.true_beta;
  int hits = 0;
  for (const auto& r : runs) hits += std::fabs(r.iv - beta) <= 3 * r.iv_se;
  report(hits >= 18 && max_seconds <= 120, "iv_recovery",
         fmt("%d/%d seeds within 3 SE of %.1f; slowest seed %.1fs (n=%lld)", hits, kSeeds, beta,
             max_seconds, static_cast<long long>(RunConfig{}.population.n_members)));
}

void bias_ordering(const std::vector<SeedRun>& runs) {
  std::vector<double> o, f, i;
  for (const auto& r : runs) {
    o.push_back(r.ols);
    f.push_back(r.fe);
    i.push_back(r.iv);
  }
  const double beta = RunConfig{}.dgp.true_beta;
  const bool pass = mean(o) >= 1.5 * beta && mean(f) > mean(i) && mean(f) < mean(o);
  report(pass, "bias_ordering",
         fmt("mean OLS %.3f (>= %.1f), FE %.3f, IV %.3f", mean(o), 1.5 * beta, mean(f), mean(i)));
}

void wald_identity() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> size(8, 60);
  std::normal_distribution<double> n01;
  double worst = 0;
  int ok = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const int n = size(rng);
    Eigen::VectorXd y(n), m(n), z(n);
    for (int k = 0; k < n; ++k) {
      z(k) = k % 2 == 0 ? 1.0 : (k % 3 == 0 ? 1.0 : 0.0);
      m(k) = std::round(3 + 2 * z(k) + 2 * n01(rng));
      y(k) = 10 + 1.7 * m(k) + 3 * n01(rng);
    }
    double yt = 0, yc = 0, mt = 0, mc = 0, nt = 0, nc = 0;
    for (int k = 0; k < n; ++k) {
      if (z(k) > 0) {
        yt += y(k); mt += m(k); ++nt;
      } else {
        yc += y(k); mc += m(k); ++nc;
      }
    }
    const double dm = mt / nt - mc / nc;
    if (std::fabs(dm) < 1e-9) {
      ++ok;  // degenerate draw: nothing to compare
      continue;
    }
    const double wald = (yt / nt - yc / nc) / dm;
    try {
      const auto r = two_stage_least_squares(y, m, z);
      const double rel = std::fabs(r.second_stage.at(kMessages).estimate - wald) / std::fabs(wald);
      worst = std::max(worst, rel);
      ok += rel <= 1e-10;
    } catch (const Error&) {
    }
  }
  report(ok == 1000, "wald_identity", fmt("%d/1000 panels, worst relative gap %.2e", ok, worst));
}

void fe_oracle() {
  std::mt19937_64 rng(77);
  double worst = 0;
  int ok = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const auto panel = oracle::usable_panel(rng, 50, 10);
    const auto fe = fixed_effects(panel);
    const auto dv = oracle::dummy_variable_fe(panel);
    const auto& b = fe.at(kMessages);
    const double rel = std::max(std::fabs(b.estimate - dv.beta) / std::fabs(dv.beta),
                                std::fabs(b.std_error - dv.std_error) / dv.std_error);
    worst = std::max(worst, rel);
    ok += rel <= 1e-8 && fe.df_residual == dv.df_residual;
  }
  report(ok == 200, "fe_oracle", fmt("%d/200 panels, worst relative gap %.2e", ok, worst));
}

void aa_calibration() {
  RunConfig config;
  config.population.n_members = 2000;
  int rejections = 0;
  for (int seed = 1; seed <= 200; ++seed) {
    const auto art = run_simulation(config, static_cast<std::uint64_t>(1000 + seed));
    const auto t = aa_test(inputs_from(art), config.estimator.occasion, config);
    rejections += t.p_value < 0.05;
  }
  const double rate = rejections / 200.0;
  report(rate >= 0.03 && rate <= 0.07, "aa_calibration",
         fmt("%d/200 rejections at 0.05 (rate %.3f, n=2000 per seed)", rejections, rate));
}

void first_stage(const std::vector<SeedRun>& runs) {
  double min_f = INFINITY;
  int strong = 0;
  for (const auto& r : runs) {
    strong += r.first_stage_f > 10;
    min_f = std::min(min_f, r.first_stage_f);
  }
  RunConfig null_config;
  null_config.dgp.response_prob = 0.0;
  const Model iv[] = {Model::iv};
  int flagged = 0;
  double max_null_f = 0;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const auto art = run_simulation(null_config, static_cast<std::uint64_t>(seed));
    try {
      const auto c = estimate_models(inputs_from(art), null_config, null_config.estimator.occasion, iv);
      flagged += c.iv->weak_instrument;
      max_null_f = std::max(max_null_f, c.iv->first_stage_f);
    } catch (const Error&) {
      // A first stage that is exactly zero cannot be inverted; count it as weak.
      ++flagged;
    }
  }
  report(strong == kSeeds && flagged == kSeeds, "first_stage",
         fmt("F > 10 on %d/%d seeds (min %.1f); weak flag on %d/%d null seeds (max F %.2f)", strong,
             kSeeds, min_f, flagged, kSeeds, max_null_f));
}

void backtest_arithmetic() {
  ExperimentRecord r{"worked", 0.5, 110, 100, 5, 4, 1000, 1000, 0.001};
  const double abs_delta = adjust_delta(r, 2.0, DeltaMode::absolute).adjusted_delta;
  const double lit_delta = adjust_delta(r, 2.0, DeltaMode::literal).adjusted_delta;
  // Error fractions 0.10 and 0.30: message terms of 1 and 3 against |PV_T - PV_C| = 10.
  ExperimentRecord a = r, b = r;
  a.experiment_id = "a";
  b.experiment_id = "b";
  b.mean_messages_sent_t = 7;
  const std::vector<ExperimentRecord> corpus = {a, b};
  const auto s = aggregate_error(corpus, 2.0);
  const bool pass = std::fabs(abs_delta - 0.11) <= 1e-15 && std::fabs(lit_delta - 0.1025) <= 1e-15 &&
                    s.mean_error == 0.20;
  report(pass, "backtest_arithmetic",
         fmt("absolute %.17g, literal %.17g, epsilon %.17g", abs_delta, lit_delta, s.mean_error));
}

void histogram_skew() {
  const CorpusConfig corpus;
  const auto records = simulate_experiment_corpus(corpus, 42);
  const auto s = aggregate_error(records, RunConfig{}.dgp.true_beta, RunConfig{}.backtest);
  // Context only: how often the sign holds across other corpus seeds.
  int negative = 0;
  for (int seed = 1; seed <= 50; ++seed) {
    const auto other = simulate_experiment_corpus(corpus, static_cast<std::uint64_t>(seed));
    negative += aggregate_error(other, RunConfig{}.dgp.true_beta, RunConfig{}.backtest)
                    .signed_error_skewness < 0;
  }
  report(s.signed_error_skewness < 0, "histogram_skew",
         fmt("skewness %.3f over %zu experiments (%.0f%% positive lifts, seed 42); epsilon %.3f, "
             "median %.3f; negative on %d/50 other seeds",
             s.signed_error_skewness, s.selected.size(), 100 * corpus.positive_lift_share,
             s.mean_error, s.median_error, negative));
}

void determinism() {
  const RunConfig config;
  const fs::path base = fs::temp_directory_path() / "peerfx_acceptance";
  fs::remove_all(base);
  run_report(config, 42, base / "a");
  run_report(config, 42, base / "b");
  int files = 0, same = 0;
  for (const auto& entry : fs::directory_iterator(base / "a")) {
    ++files;
    same += csv::read_file(entry.path()) == csv::read_file(base / "b" / entry.path().filename());
  }
  report(files > 0 && same == files, "determinism",
         fmt("%d/%d report files byte-identical across two runs", same, files));
  fs::remove_all(base);
}

}  // namespace

int main() {
  double max_seconds = 0;
  const auto runs = default_runs(max_seconds);
  iv_recovery(runs, max_seconds);
  bias_ordering(runs);
  wald_identity();
  fe_oracle();
  aa_calibration();
  first_stage(runs);
  backtest_arithmetic();
  histogram_skew();
  determinism();
  std::printf("%s: %d criterion(s) failed\n", failures ? "FAILED" : "OK", failures);
  return failures ? 1 : 0;
}
