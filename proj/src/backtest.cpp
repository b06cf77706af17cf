#include "peerfx/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include <boost/math/distributions/normal.hpp>

#include "peerfx/error.hpp"
#include "peerfx/random.hpp"

namespace peerfx {

namespace {

constexpr double kZeroDelta = 1e-12;

double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  return n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

double message_impact(const ExperimentRecord& r) {
  const double diff = r.mean_messages_sent_t - r.mean_messages_sent_c;
  if (r.mean_messages_sent_c == 0.0) {
    return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return std::abs(diff / r.mean_messages_sent_c);
}

}  // namespace

std::string_view to_string(DeltaMode mode) noexcept {
  return mode == DeltaMode::absolute ? "absolute" : "literal";
}

DeltaMode parse_delta_mode(std::string_view text) {
  if (text == "absolute") return DeltaMode::absolute;
  if (text == "literal") return DeltaMode::literal;
  fail(ErrorKind::InvalidArgument, "unknown delta mode '" + std::string(text) + "'");
}

double raw_delta(const ExperimentRecord& record) {
  if (record.mean_pageviews_c == 0.0) {
    fail(ErrorKind::DivisionDegenerate,
         "experiment " + record.experiment_id + ": control mean pageviews is zero");
  }
  return (record.mean_pageviews_t - record.mean_pageviews_c) / record.mean_pageviews_c;
}

AdjustedDelta adjust_delta(const ExperimentRecord& record, double beta, DeltaMode mode) {
  if (!(record.p_treatment > 0.0 && record.p_treatment < 1.0)) {
    fail(ErrorKind::InvalidArgument,
         "experiment " + record.experiment_id + ": p_treatment must lie in (0, 1)");
  }
  AdjustedDelta out;
  out.experiment_id = record.experiment_id;
  out.raw_delta = raw_delta(record);
  out.discount = 1.0 - record.p_treatment;

  const double ms_t = record.mean_messages_sent_t;
  const double ms_c = record.mean_messages_sent_c;
  out.messages_delta =
      ms_c != 0.0 ? (ms_t - ms_c) / ms_c : std::numeric_limits<double>::quiet_NaN();
  double lift = ms_t - ms_c;
  if (mode == DeltaMode::literal) {
    if (ms_c == 0.0) {
      fail(ErrorKind::DivisionDegenerate,
           "experiment " + record.experiment_id + ": literal mode needs control messages > 0");
    }
    lift = out.messages_delta;
  }
  const double term = beta * lift * out.discount;
  const double pv_t = record.mean_pageviews_t;
  const double pv_c = record.mean_pageviews_c;
  out.adjusted_delta = (pv_t + term - pv_c) / pv_c;

  // |raw - adjusted| / |raw| simplifies to |term| / |PV_T - PV_C|; this form
  // avoids the cancellation in raw - adjusted.
  const double gap = std::abs(pv_t - pv_c);
  if (gap > 0.0) {
    out.error_fraction = std::abs(term) / gap;
    out.signed_error = term / gap;
  } else {
    out.error_fraction = term == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    out.signed_error = term == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), term);
  }
  return out;
}

std::vector<HistogramBin> histogram(std::span<const double> values, double bin_width) {
  require(bin_width > 0.0, "histogram: bin_width must be positive");
  std::vector<HistogramBin> bins;
  if (values.empty()) return bins;
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double start = std::floor(*lo_it / bin_width);
  auto n_bins = static_cast<std::int64_t>(std::floor(*hi_it / bin_width) - start) + 1;
  n_bins = std::max<std::int64_t>(n_bins, 1);
  bins.resize(static_cast<std::size_t>(n_bins));
  for (std::int64_t b = 0; b < n_bins; ++b) {
    bins[static_cast<std::size_t>(b)].low = (start + static_cast<double>(b)) * bin_width;
    bins[static_cast<std::size_t>(b)].high = (start + static_cast<double>(b + 1)) * bin_width;
  }
  for (double v : values) {
    auto b = static_cast<std::int64_t>(std::floor(v / bin_width) - start);
    b = std::clamp<std::int64_t>(b, 0, n_bins - 1);
    ++bins[static_cast<std::size_t>(b)].count;
  }
  return bins;
}

double sample_skewness(std::span<const double> values) {
  if (values.size() < 3) return 0.0;
  const auto n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double m2 = 0.0, m3 = 0.0;
  for (double v : values) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= n;
  m3 /= n;
  return m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
}

ErrorSummary aggregate_error(std::span<const ExperimentRecord> records, double beta,
                             const BacktestOptions& options) {
  require(std::isfinite(beta), "aggregate_error: beta must be finite");
  require(options.top_n >= 1, "aggregate_error: top_n must be >= 1");
  std::map<std::string, ExperimentRecord> unique;
  for (const auto& r : records) {
    const auto [it, inserted] = unique.emplace(r.experiment_id, r);
    if (!inserted && !(it->second == r)) {
      fail(ErrorKind::DataError, "conflicting records for experiment " + r.experiment_id);
    }
  }

  std::vector<const ExperimentRecord*> ranked;
  ranked.reserve(unique.size());
  for (const auto& [id, r] : unique) ranked.push_back(&r);
  // Ties keep experiment_id order (map order + stable sort).
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto* a, const auto* b) {
    return message_impact(*a) > message_impact(*b);
  });
  if (static_cast<std::int64_t>(ranked.size()) > options.top_n) {
    ranked.resize(static_cast<std::size_t>(options.top_n));
  }

  ErrorSummary summary;
  summary.beta = beta;
  summary.mode = options.mode;
  summary.n_records = static_cast<std::int64_t>(unique.size());
  summary.n_ranked = static_cast<std::int64_t>(ranked.size());
  for (const auto* r : ranked) {
    if (!(r->pageview_p_value <= options.significance_alpha)) continue;
    ++summary.n_significant;
    auto adjusted = adjust_delta(*r, beta, options.mode);
    if (std::abs(adjusted.raw_delta) < kZeroDelta) {
      ++summary.n_zero_delta;
      continue;
    }
    summary.selected.push_back(std::move(adjusted));
  }
  if (summary.selected.empty()) {
    fail(ErrorKind::EmptySelection, "aggregate_error: no experiments left after filtering");
  }
  std::sort(summary.selected.begin(), summary.selected.end(),
            [](const auto& a, const auto& b) { return a.experiment_id < b.experiment_id; });

  std::vector<double> errors, signed_errors;
  for (const auto& a : summary.selected) {
    errors.push_back(a.error_fraction);
    signed_errors.push_back(a.signed_error);
  }
  double total = 0.0;
  for (double e : errors) total += e;
  summary.mean_error = total / static_cast<double>(errors.size());
  summary.median_error = median_of(errors);
  summary.signed_error_skewness = sample_skewness(signed_errors);
  summary.histogram = histogram(signed_errors, options.bin_width);
  return summary;
}

void CorpusConfig::validate() const {
  if (count < 1) fail(ErrorKind::ConfigError, "corpus count must be >= 1");
  if (!(p_treatment_min > 0.0 && p_treatment_min <= p_treatment_max && p_treatment_max < 1.0)) {
    fail(ErrorKind::ConfigError, "p_treatment range must satisfy 0 < min <= max < 1");
  }
  if (!(baseline_pageviews > 0.0) || !(baseline_messages > 0.0) || !(baseline_spread >= 0.0)) {
    fail(ErrorKind::ConfigError, "corpus baselines must be positive");
  }
  if (!(median_abs_message_lift > 0.0) || !(mean_abs_message_lift >= median_abs_message_lift)) {
    fail(ErrorKind::ConfigError, "message lift needs 0 < median <= mean");
  }
  if (!(positive_lift_share >= 0.0 && positive_lift_share <= 1.0)) {
    fail(ErrorKind::ConfigError, "positive_lift_share must lie in [0, 1]");
  }
  if (!(pageview_lift_sd >= 0.0) || !(pageview_cv > 0.0) || !std::isfinite(pageview_message_coupling)) {
    fail(ErrorKind::ConfigError, "pageview lift sd must be >= 0, cv > 0 and the coupling finite");
  }
  if (min_sample < 4 || max_sample < min_sample) {
    fail(ErrorKind::ConfigError, "sample size range must satisfy 4 <= min <= max");
  }
}

std::vector<ExperimentRecord> simulate_experiment_corpus(const CorpusConfig& config,
                                                         std::uint64_t seed) {
  config.validate();
  // Lognormal with median m and mean u: mu = ln m, sigma^2 = 2 ln(u / m).
  const double lift_mu = std::log(config.median_abs_message_lift);
  const double lift_sigma =
      std::sqrt(2.0 * std::log(config.mean_abs_message_lift / config.median_abs_message_lift));
  const int width = static_cast<int>(std::to_string(config.count).size());
  const boost::math::normal_distribution<> standard_normal;

  std::vector<ExperimentRecord> out;
  out.reserve(static_cast<std::size_t>(config.count));
  for (std::int64_t i = 0; i < config.count; ++i) {
    Engine engine = make_engine(seed, Stream::Corpus, static_cast<std::uint64_t>(i));
    std::normal_distribution<double> standard(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::int64_t> size(config.min_sample, config.max_sample);

    ExperimentRecord r;
    char id[32];
    std::snprintf(id, sizeof id, "exp-%0*lld", width, static_cast<long long>(i));
    r.experiment_id = id;
    r.p_treatment = config.p_treatment_min +
                    (config.p_treatment_max - config.p_treatment_min) * unit(engine);
    const std::int64_t total = size(engine);
    r.n_t = std::clamp<std::int64_t>(std::llround(static_cast<double>(total) * r.p_treatment), 2,
                                     total - 2);
    r.n_c = total - r.n_t;

    r.mean_pageviews_c = config.baseline_pageviews * std::exp(config.baseline_spread * standard(engine));
    r.mean_messages_sent_c = config.baseline_messages * std::exp(config.baseline_spread * standard(engine));
    const double magnitude = std::exp(lift_mu + lift_sigma * standard(engine));
    const double sign = unit(engine) < config.positive_lift_share ? 1.0 : -1.0;
    r.mean_messages_sent_t = r.mean_messages_sent_c * (1.0 + sign * magnitude);
    if (r.mean_messages_sent_t < 0.0) r.mean_messages_sent_t = 0.0;
    const double pageview_lift = config.pageview_message_coupling * sign * magnitude +
                                 config.pageview_lift_sd * standard(engine);
    r.mean_pageviews_t = r.mean_pageviews_c * (1.0 + pageview_lift);
    if (r.mean_pageviews_t < 0.0) r.mean_pageviews_t = 0.0;

    const double sd = config.pageview_cv * r.mean_pageviews_c;
    const double se = sd * std::sqrt(1.0 / static_cast<double>(r.n_t) + 1.0 / static_cast<double>(r.n_c));
    const double z = std::abs(r.mean_pageviews_t - r.mean_pageviews_c) / se;
    r.pageview_p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(standard_normal, z)));
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace peerfx
