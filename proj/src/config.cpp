#include "peerfx/config.hpp"

#include <charconv>
#include <functional>
#include <set>
#include <sstream>
#include <vector>

#include "peerfx/csv.hpp"
#include "peerfx/error.hpp"

namespace peerfx {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double to_double(std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw std::invalid_argument("expected a number, got '" + std::string(v) + "'");
  }
  return out;
}

std::int64_t to_int(std::string_view v) {
  std::int64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw std::invalid_argument("expected an integer, got '" + std::string(v) + "'");
  }
  return out;
}

bool to_bool(std::string_view v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw std::invalid_argument("expected true or false, got '" + std::string(v) + "'");
}

template <typename T, typename Parse>
std::vector<T> to_list(std::string_view v, Parse parse) {
  std::vector<T> out;
  if (trim(v).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = v.find(',', start);
    out.push_back(static_cast<T>(parse(trim(v.substr(start, comma - start)))));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T, typename Format>
std::string from_list(const std::vector<T>& values, Format format) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format(values[i]);
  }
  return out;
}

std::string num(double v) { return csv::format_double(v); }
std::string num(std::int64_t v) { return std::to_string(v); }

struct Key {
  std::string name;
  std::string doc;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define PEERFX_DOUBLE(key, field, doc)                                               \
  Key {                                                                               \
    key, doc, [](RunConfig& c, std::string_view v) { c.field = to_double(v); },       \
        [](const RunConfig& c) { return num(static_cast<double>(c.field)); }          \
  }
#define PEERFX_INT(key, field, doc)                                                          \
  Key {                                                                                       \
    key, doc,                                                                                 \
        [](RunConfig& c, std::string_view v) { c.field = static_cast<decltype(c.field)>(to_int(v)); }, \
        [](const RunConfig& c) { return num(static_cast<std::int64_t>(c.field)); }            \
  }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      PEERFX_INT("population.n_members", population.n_members, "number of synthetic members (>= 2)"),
      PEERFX_DOUBLE("population.activity_mean", population.activity_mean, "mean of latent activity"),
      PEERFX_DOUBLE("population.activity_sd", population.activity_sd, "sd of latent activity (> 0)"),
      PEERFX_DOUBLE("population.sociability_mean", population.sociability_mean, "mean of latent sociability"),
      PEERFX_DOUBLE("population.sociability_sd", population.sociability_sd, "sd of latent sociability (> 0)"),
      PEERFX_INT("population.n_countries", population.n_countries, "country levels"),
      PEERFX_INT("population.n_industries", population.n_industries, "industry levels"),
      PEERFX_DOUBLE("population.covariate_activity_loading", population.covariate_activity_loading,
                    "dependence of country/industry/tenure on activity, in [0, 1]"),
      PEERFX_DOUBLE("population.tenure_mean", population.tenure_mean, "mean years in workforce"),
      PEERFX_DOUBLE("population.tenure_sd", population.tenure_sd, "sd of years in workforce (> 0)"),
      PEERFX_INT("population.tenure_max", population.tenure_max, "cap on years in workforce"),
      PEERFX_DOUBLE("graph.target_mean_degree", graph.target_mean_degree, "expected mean degree (>= 1, < n_members)"),
      PEERFX_DOUBLE("graph.homophily_strength", graph.homophily_strength, "logit slope on activity similarity (>= 0)"),
      PEERFX_DOUBLE("graph.base_logit", graph.base_logit, "logit intercept before rescaling"),
      PEERFX_DOUBLE("dgp.true_beta", dgp.true_beta, "pageviews per received message"),
      PEERFX_DOUBLE("dgp.response_prob", dgp.response_prob, "chance a notified peer sends a message"),
      PEERFX_DOUBLE("dgp.spontaneous_rate", dgp.spontaneous_rate, "baseline spontaneous messages per member-week"),
      PEERFX_DOUBLE("dgp.confound_strength", dgp.confound_strength, "weight of latent activity in the engagement index"),
      PEERFX_DOUBLE("dgp.shock_strength", dgp.shock_strength, "weight of weekly shock x activity in the engagement index"),
      PEERFX_DOUBLE("dgp.pageview_loading", dgp.pageview_loading, "pageviews per unit of engagement index"),
      PEERFX_DOUBLE("dgp.noise_sd", dgp.noise_sd, "pageview noise sd"),
      PEERFX_DOUBLE("dgp.alpha_mean", dgp.alpha_mean, "mean member effect"),
      PEERFX_DOUBLE("dgp.alpha_sd", dgp.alpha_sd, "sd of member effects"),
      PEERFX_DOUBLE("dgp.tau_sd", dgp.tau_sd, "sd of drawn week effects"),
      Key{"dgp.week_effects", "explicit week effects, one per panel week (empty: draw)",
          [](RunConfig& c, std::string_view v) { c.dgp.week_effects = to_list<double>(v, to_double); },
          [](const RunConfig& c) {
            return from_list(c.dgp.week_effects, [](double d) { return num(d); });
          }},
      PEERFX_INT("window.treatment_week", window.treatment_week, "week whose notifications form the treatment group"),
      PEERFX_INT("window.control_week", window.control_week, "week whose notifications form the control group"),
      Key{"window.observation_weeks", "weeks aggregated for the IV comparison",
          [](RunConfig& c, std::string_view v) { c.window.observation_weeks = to_list<int>(v, to_int); },
          [](const RunConfig& c) {
            return from_list(c.window.observation_weeks, [](int w) { return std::to_string(w); });
          }},
      PEERFX_INT("window.pre_period_week", window.pre_period_week, "week used for the A/A balance test"),
      Key{"window.observational_weeks", "weeks used by OLS and fixed effects",
          [](RunConfig& c, std::string_view v) { c.window.observational_weeks = to_list<int>(v, to_int); },
          [](const RunConfig& c) {
            return from_list(c.window.observational_weeks, [](int w) { return std::to_string(w); });
          }},
      Key{"estimator.occasion", "birthday or anniversary",
          [](RunConfig& c, std::string_view v) { c.estimator.occasion = parse_occasion(v); },
          [](const RunConfig& c) { return std::string(to_string(c.estimator.occasion)); }},
      PEERFX_DOUBLE("estimator.trim_top_fraction", estimator.trim_top_fraction, "share of top pageviews removed"),
      PEERFX_DOUBLE("estimator.weak_instrument_threshold", estimator.weak_instrument_threshold,
                    "first-stage F below which the IV result is flagged"),
      Key{"estimator.iv_controls", "include member controls in both IV stages",
          [](RunConfig& c, std::string_view v) { c.estimator.iv_controls = to_bool(v); },
          [](const RunConfig& c) { return std::string(c.estimator.iv_controls ? "true" : "false"); }},
      Key{"estimator.covariance", "classical or hc1 (OLS models)",
          [](RunConfig& c, std::string_view v) {
            if (v == "classical") c.estimator.covariance = CovarianceType::classical;
            else if (v == "hc1") c.estimator.covariance = CovarianceType::hc1;
            else throw std::invalid_argument("expected classical or hc1");
          },
          [](const RunConfig& c) {
            return std::string(c.estimator.covariance == CovarianceType::classical ? "classical" : "hc1");
          }},
      Key{"backtest.beta", "network-effect coefficient, or auto for the IV estimate",
          [](RunConfig& c, std::string_view v) {
            if (v == "auto") c.backtest_beta.reset();
            else c.backtest_beta = to_double(v);
          },
          [](const RunConfig& c) { return c.backtest_beta ? num(*c.backtest_beta) : std::string("auto"); }},
      Key{"backtest.mode", "absolute or literal message delta",
          [](RunConfig& c, std::string_view v) { c.backtest.mode = parse_delta_mode(v); },
          [](const RunConfig& c) { return std::string(to_string(c.backtest.mode)); }},
      PEERFX_DOUBLE("backtest.significance_alpha", backtest.significance_alpha, "pageview p-value cutoff"),
      PEERFX_INT("backtest.top_n", backtest.top_n, "experiments kept by message impact"),
      PEERFX_DOUBLE("backtest.bin_width", backtest.bin_width, "signed-error histogram bin width"),
      PEERFX_INT("corpus.count", corpus.count, "synthetic experiments"),
      PEERFX_DOUBLE("corpus.p_treatment_min", corpus.p_treatment_min, "smallest treatment share"),
      PEERFX_DOUBLE("corpus.p_treatment_max", corpus.p_treatment_max, "largest treatment share"),
      PEERFX_DOUBLE("corpus.baseline_pageviews", corpus.baseline_pageviews, "typical control pageviews"),
      PEERFX_DOUBLE("corpus.baseline_messages", corpus.baseline_messages, "typical control messages sent"),
      PEERFX_DOUBLE("corpus.baseline_spread", corpus.baseline_spread, "log-sd of baselines"),
      PEERFX_DOUBLE("corpus.median_abs_message_lift", corpus.median_abs_message_lift, "median |message lift|"),
      PEERFX_DOUBLE("corpus.mean_abs_message_lift", corpus.mean_abs_message_lift, "mean |message lift|"),
      PEERFX_DOUBLE("corpus.positive_lift_share", corpus.positive_lift_share, "share of positive message lifts"),
      PEERFX_DOUBLE("corpus.pageview_message_coupling", corpus.pageview_message_coupling, "pageview lift per unit relative message lift"),
      PEERFX_DOUBLE("corpus.pageview_lift_sd", corpus.pageview_lift_sd, "sd of relative pageview lift"),
      PEERFX_DOUBLE("corpus.pageview_cv", corpus.pageview_cv, "per-member pageview sd / mean"),
      PEERFX_INT("corpus.min_sample", corpus.min_sample, "smallest experiment size"),
      PEERFX_INT("corpus.max_sample", corpus.max_sample, "largest experiment size"),
  };
  return table;
}

#undef PEERFX_DOUBLE
#undef PEERFX_INT

}  // namespace

void RunConfig::validate() const {
  population.validate();
  graph.validate();
  if (graph.target_mean_degree >= static_cast<double>(population.n_members)) {
    fail(ErrorKind::ConfigError, "graph.target_mean_degree must be < population.n_members");
  }
  dgp.validate();
  window.validate();
  if (!(estimator.trim_top_fraction >= 0.0 && estimator.trim_top_fraction < 1.0)) {
    fail(ErrorKind::ConfigError, "estimator.trim_top_fraction must lie in [0, 1)");
  }
  if (!(estimator.weak_instrument_threshold >= 0.0)) {
    fail(ErrorKind::ConfigError, "estimator.weak_instrument_threshold must be >= 0");
  }
  if (backtest.top_n < 1) fail(ErrorKind::ConfigError, "backtest.top_n must be >= 1");
  if (!(backtest.significance_alpha >= 0.0 && backtest.significance_alpha <= 1.0)) {
    fail(ErrorKind::ConfigError, "backtest.significance_alpha must lie in [0, 1]");
  }
  if (!(backtest.bin_width > 0.0)) fail(ErrorKind::ConfigError, "backtest.bin_width must be > 0");
  if (backtest_beta && !std::isfinite(*backtest_beta)) {
    fail(ErrorKind::ConfigError, "backtest.beta must be finite");
  }
  corpus.validate();
}

RunConfig parse_run_config(std::string_view text) {
  RunConfig config;
  std::set<std::string> seen;
  std::size_t line_number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    std::string_view line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    start = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_number;
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const std::string where = "config line " + std::to_string(line_number) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(ErrorKind::ConfigError, where + "expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const auto value = trim(line.substr(eq + 1));
    const auto& table = keys();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Key& k) { return k.name == key; });
    if (it == table.end()) fail(ErrorKind::ConfigError, where + "unknown key '" + key + "'");
    if (!seen.insert(key).second) fail(ErrorKind::ConfigError, where + "repeated key '" + key + "'");
    try {
      it->set(config, value);
    } catch (const Error& e) {
      fail(ErrorKind::ConfigError, where + key + ": " + e.what());
    } catch (const std::exception& e) {
      fail(ErrorKind::ConfigError, where + key + ": " + e.what());
    }
  }
  config.validate();
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(csv::read_file(path));
}

std::string serialize_run_config(const RunConfig& config) {
  std::string out;
  for (const auto& k : keys()) out += k.name + " = " + k.get(config) + "\n";
  return out;
}

std::string default_config_text() {
  const RunConfig defaults;
  std::string out = "# peerfx run configuration (defaults)\n";
  for (const auto& k : keys()) {
    out += "\n# " + k.doc + "\n" + k.name + " = " + k.get(defaults) + "\n";
  }
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace peerfx
