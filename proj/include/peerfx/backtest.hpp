#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace peerfx {

struct ExperimentRecord {
  std::string experiment_id;
  double p_treatment = 0.5;
  double mean_pageviews_t = 0.0;
  double mean_pageviews_c = 0.0;
  double mean_messages_sent_t = 0.0;
  double mean_messages_sent_c = 0.0;
  std::int64_t n_t = 0;
  std::int64_t n_c = 0;
  double pageview_p_value = 1.0;

  friend bool operator==(const ExperimentRecord&, const ExperimentRecord&) = default;
};

/// absolute: the message term is the difference MS_T - MS_C, so beta keeps
/// its pageviews-per-message units. literal: the relative lift
/// (MS_T - MS_C) / MS_C, exactly as the adjustment is usually printed.
enum class DeltaMode { absolute, literal };

std::string_view to_string(DeltaMode mode) noexcept;
DeltaMode parse_delta_mode(std::string_view text);

struct AdjustedDelta {
  std::string experiment_id;
  double raw_delta = 0.0;
  double adjusted_delta = 0.0;
  double messages_delta = 0.0;  // relative lift; NaN when MS_C = 0
  double discount = 0.0;        // R = 1 - p_treatment
  double error_fraction = 0.0;  // |raw - adjusted| / |raw|
  double signed_error = 0.0;    // (adjusted - raw) / |raw|; > 0 when raw understates
};

/// (PV_T - PV_C) / PV_C
double raw_delta(const ExperimentRecord& record);

AdjustedDelta adjust_delta(const ExperimentRecord& record, double beta,
                           DeltaMode mode = DeltaMode::absolute);

struct HistogramBin {
  double low = 0.0;
  double high = 0.0;
  std::int64_t count = 0;
};

struct BacktestOptions {
  DeltaMode mode = DeltaMode::absolute;
  double significance_alpha = 0.05;
  std::int64_t top_n = 100;
  double bin_width = 0.05;
};

struct ErrorSummary {
  double beta = 0.0;
  DeltaMode mode = DeltaMode::absolute;
  std::int64_t n_records = 0;
  std::int64_t n_ranked = 0;       // kept by the top-n message-impact rule
  std::int64_t n_significant = 0;  // of those, pageview p <= alpha
  std::int64_t n_zero_delta = 0;   // excluded because |raw delta| < 1e-12
  double mean_error = 0.0;         // epsilon
  double median_error = 0.0;
  double signed_error_skewness = 0.0;
  std::vector<AdjustedDelta> selected;  // ordered by experiment_id
  std::vector<HistogramBin> histogram;  // of signed errors
};

/// Ranks by |relative message lift|, keeps top_n, keeps pageview
/// p <= alpha, then averages |raw - adjusted| / |raw|. Identical duplicate
/// records are collapsed; conflicting records sharing an id are rejected.
ErrorSummary aggregate_error(std::span<const ExperimentRecord> records, double beta,
                             const BacktestOptions& options = {});

std::vector<HistogramBin> histogram(std::span<const double> values, double bin_width);

/// Sample skewness m3 / m2^(3/2).
double sample_skewness(std::span<const double> values);

/// Synthetic stand-in for a year of A/B tests. Message-lift magnitudes are
/// lognormal with the given median and mean; the sign is positive with
/// probability positive_lift_share.
struct CorpusConfig {
  std::int64_t count = 1000;
  double p_treatment_min = 0.05;
  double p_treatment_max = 0.5;
  double baseline_pageviews = 50.0;
  double baseline_messages = 2.0;
  double baseline_spread = 0.2;  // log-sd of the baselines across experiments
  double median_abs_message_lift = 0.046;
  double mean_abs_message_lift = 0.083;
  double positive_lift_share = 0.8;
  /// Direct pageview lift per unit of relative message lift; features that
  /// drive messaging tend to drive engagement too.
  double pageview_message_coupling = 0.4;
  double pageview_lift_sd = 0.02;
  double pageview_cv = 1.5;  // per-member sd / mean of pageviews
  std::int64_t min_sample = 10000;
  std::int64_t max_sample = 1000000;

  void validate() const;
};

std::vector<ExperimentRecord> simulate_experiment_corpus(const CorpusConfig& config,
                                                         std::uint64_t seed);

}  // namespace peerfx
