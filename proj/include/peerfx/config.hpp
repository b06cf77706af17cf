#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "peerfx/backtest.hpp"
#include "peerfx/behavior.hpp"
#include "peerfx/estimators.hpp"
#include "peerfx/notifqueue.hpp"
#include "peerfx/synthnet.hpp"

namespace peerfx {

struct EstimatorConfig {
  Occasion occasion = Occasion::anniversary;
  double trim_top_fraction = 0.01;
  double weak_instrument_threshold = 10.0;
  bool iv_controls = true;
  CovarianceType covariance = CovarianceType::classical;
};

/// Everything a pipeline run needs besides the seed. Text form is one
/// `key = value` per line with `#` comments; see default_config_text().
struct RunConfig {
  PopulationConfig population;
  GraphConfig graph;
  DGPConfig dgp;
  WindowConfig window;
  EstimatorConfig estimator;
  BacktestOptions backtest;
  std::optional<double> backtest_beta;  // unset: use the IV estimate
  CorpusConfig corpus;

  void validate() const;
};

/// Parses config text on top of the defaults. Unknown keys, repeated keys and
/// malformed values raise ConfigError naming the line.
RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Canonical text of every key with its value, one per line, in a fixed
/// order. Parsing it reproduces the config.
std::string serialize_run_config(const RunConfig& config);

/// serialize_run_config(RunConfig{}) with a documentation comment per key.
std::string default_config_text();

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

}  // namespace peerfx
