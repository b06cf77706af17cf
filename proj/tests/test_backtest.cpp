#include <doctest.h>

#include <cmath>
#include <vector>

#include "peerfx/backtest.hpp"
#include "peerfx/error.hpp"

using namespace peerfx;

namespace {

ExperimentRecord worked(std::string id = "worked") {
  ExperimentRecord r;
  r.experiment_id = std::move(id);
  r.p_treatment = 0.5;
  r.mean_pageviews_t = 110;
  r.mean_pageviews_c = 100;
  r.mean_messages_sent_t = 5;
  r.mean_messages_sent_c = 4;
  r.n_t = r.n_c = 1000;
  r.pageview_p_value = 0.001;
  return r;
}

/// Record whose absolute-mode error fraction is exactly `e`: with PV 110/100,
/// R = 0.5 and beta = 2, the message term is (MS_T - MS_C) = 10 e.
ExperimentRecord with_error(std::string id, double e) {
  auto r = worked(std::move(id));
  r.mean_messages_sent_c = 4;
  r.mean_messages_sent_t = 4 + 10 * e;
  return r;
}

}  // namespace

TEST_CASE("raw delta") {
  auto r = worked();
  CHECK(raw_delta(r) == doctest::Approx(0.10));
  r.mean_pageviews_t = 100;
  CHECK(raw_delta(r) == 0.0);
  r.mean_pageviews_c = 0;
  try {
    raw_delta(r);
    FAIL("expected DivisionDegenerate");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DivisionDegenerate);
  }
}

TEST_CASE("worked example in both modes") {
  const auto a = adjust_delta(worked(), 2.0, DeltaMode::absolute);
  CHECK(a.discount == 0.5);
  CHECK(a.adjusted_delta == doctest::Approx(0.11).epsilon(1e-15));
  CHECK(a.error_fraction == doctest::Approx(0.10).epsilon(1e-15));
  CHECK(a.signed_error == doctest::Approx(0.10).epsilon(1e-15));
  const auto l = adjust_delta(worked(), 2.0, DeltaMode::literal);
  CHECK(l.messages_delta == 0.25);
  CHECK(l.adjusted_delta == doctest::Approx(0.1025).epsilon(1e-15));
}

TEST_CASE("zero message lift leaves the delta unchanged") {
  auto r = worked();
  r.mean_messages_sent_t = r.mean_messages_sent_c;
  for (auto mode : {DeltaMode::absolute, DeltaMode::literal}) {
    const auto a = adjust_delta(r, 2.0, mode);
    CHECK(a.adjusted_delta == a.raw_delta);
    CHECK(a.error_fraction == 0.0);
  }
  const std::vector<ExperimentRecord> corpus = {r};
  CHECK(aggregate_error(corpus, 2.0).mean_error == 0.0);
}

TEST_CASE("two-experiment corpus averages to 0.20") {
  const std::vector<ExperimentRecord> corpus = {with_error("a", 0.10), with_error("b", 0.30)};
  const auto s = aggregate_error(corpus, 2.0);
  CHECK(s.selected.size() == 2);
  CHECK(s.mean_error == 0.20);
  CHECK(s.median_error == 0.20);
}

TEST_CASE("aggregate_error filters, dedupes and orders") {
  std::vector<ExperimentRecord> corpus = {with_error("c", 0.2), with_error("a", 0.1),
                                          with_error("b", 0.3)};
  corpus[2].pageview_p_value = 0.5;  // not significant
  corpus.push_back(corpus[0]);       // identical duplicate
  const auto s = aggregate_error(corpus, 2.0);
  CHECK(s.n_records == 3);
  CHECK(s.n_significant == 2);
  REQUIRE(s.selected.size() == 2);
  CHECK(s.selected[0].experiment_id == "a");
  CHECK(s.selected[1].experiment_id == "c");

  auto conflict = corpus;
  conflict.back().mean_pageviews_t = 999;
  CHECK_THROWS_AS(aggregate_error(conflict, 2.0), Error);

  // Message lifts: b 0.75, c 0.5, a 0.25. The top two are b and c; b is
  // then dropped as insignificant.
  BacktestOptions top2;
  top2.top_n = 2;
  const auto t = aggregate_error(corpus, 2.0, top2);
  CHECK(t.n_ranked == 2);
  REQUIRE(t.selected.size() == 1);
  CHECK(t.selected[0].experiment_id == "c");
}

TEST_CASE("empty selection is reported") {
  auto r = worked();
  r.pageview_p_value = 0.9;
  const std::vector<ExperimentRecord> corpus = {r};
  try {
    aggregate_error(corpus, 2.0);
    FAIL("expected EmptySelection");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptySelection);
  }
}

TEST_CASE("histogram bins are floor aligned and sum to the count") {
  const std::vector<double> v = {-0.12, -0.05, -0.01, 0.0, 0.04, 0.049, 0.11};
  const auto h = histogram(v, 0.05);
  std::int64_t total = 0;
  for (const auto& b : h) {
    total += b.count;
    CHECK(b.high - b.low == doctest::Approx(0.05));
  }
  CHECK(total == 7);
  CHECK(h.front().low == doctest::Approx(-0.15));
  CHECK(h.back().high == doctest::Approx(0.15));
}

TEST_CASE("sample skewness") {
  const std::vector<double> sym = {-2, -1, 0, 1, 2};
  CHECK(sample_skewness(sym) == doctest::Approx(0.0));
  const std::vector<double> left = {-10, 0, 0.5, 1, 1};
  // m2, m3 by hand from the mean -1.5.
  double m2 = 0, m3 = 0;
  for (double x : left) {
    m2 += (x + 1.5) * (x + 1.5) / 5;
    m3 += (x + 1.5) * (x + 1.5) * (x + 1.5) / 5;
  }
  CHECK(sample_skewness(left) == doctest::Approx(m3 / std::pow(m2, 1.5)));
  CHECK(sample_skewness(left) < 0);
}

TEST_CASE("synthetic corpus") {
  CorpusConfig cfg;
  cfg.count = 1;
  const auto one = simulate_experiment_corpus(cfg, 5);
  REQUIRE(one.size() == 1);
  CHECK(one[0].mean_pageviews_c > 0);
  CHECK(one[0].p_treatment >= cfg.p_treatment_min);
  CHECK(one[0].p_treatment <= cfg.p_treatment_max);

  const CorpusConfig def;
  const auto a = simulate_experiment_corpus(def, 9);
  CHECK(a == simulate_experiment_corpus(def, 9));
  std::vector<double> lifts;
  for (const auto& r : a) {
    lifts.push_back(std::fabs(r.mean_messages_sent_t / r.mean_messages_sent_c - 1.0));
  }
  double m = 0, v = 0;
  for (double x : lifts) m += x / lifts.size();
  for (double x : lifts) v += (x - m) * (x - m) / (lifts.size() - 1);
  CHECK(std::fabs(m - def.mean_abs_message_lift) < 3 * std::sqrt(v / lifts.size()));
}
