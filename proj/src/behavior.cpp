#include "peerfx/behavior.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "peerfx/error.hpp"
#include "peerfx/random.hpp"

namespace peerfx {

namespace {

double draw_normal(Engine& engine, double mean, double sd) {
  if (sd == 0.0) return mean;
  std::normal_distribution<double> dist(mean, sd);
  return dist(engine);
}

std::vector<double> standardize(std::span<const double> values) {
  const auto n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = sd > 0.0 ? (values[i] - mean) / sd : 0.0;
  }
  return out;
}

std::vector<double> week_effects(const DGPConfig& config, std::uint64_t seed, int first_week,
                                 int last_week) {
  const auto n_weeks = static_cast<std::size_t>(last_week - first_week + 1);
  if (!config.week_effects.empty()) {
    if (config.week_effects.size() != n_weeks) {
      fail(ErrorKind::ConfigError, "week_effects has " +
                                       std::to_string(config.week_effects.size()) +
                                       " entries, panel spans " + std::to_string(n_weeks) +
                                       " weeks");
    }
    return config.week_effects;
  }
  Engine engine = make_engine(seed, Stream::Weekly, 1);
  std::vector<double> tau(n_weeks);
  for (auto& t : tau) t = draw_normal(engine, 0.0, config.tau_sd);
  return tau;
}

}  // namespace

void DGPConfig::validate() const {
  if (!(response_prob >= 0.0 && response_prob <= 1.0)) {
    fail(ErrorKind::ConfigError, "response_prob must lie in [0, 1]");
  }
  if (!(spontaneous_rate >= 0.0) || !(noise_sd >= 0.0) || !(alpha_sd >= 0.0) ||
      !(tau_sd >= 0.0) || !(confound_strength >= 0.0) || !(shock_strength >= 0.0) ||
      !(pageview_loading >= 0.0)) {
    fail(ErrorKind::ConfigError, "DGP rates and scales must be >= 0");
  }
  if (!std::isfinite(true_beta) || !std::isfinite(alpha_mean)) {
    fail(ErrorKind::ConfigError, "true_beta and alpha_mean must be finite");
  }
}

std::vector<double> weekly_shocks(std::uint64_t seed, int first_week, int last_week) {
  Engine engine = make_engine(seed, Stream::Weekly, 0);
  std::normal_distribution<double> standard(0.0, 1.0);
  std::vector<double> shocks(static_cast<std::size_t>(last_week - first_week + 1));
  for (auto& s : shocks) s = standard(engine);
  return shocks;
}

std::vector<double> standardized_activity(std::span<const MemberRecord> members) {
  std::vector<double> raw(members.size());
  for (std::size_t i = 0; i < members.size(); ++i) raw[i] = members[i].latent_activity;
  return standardize(raw);
}

MessageCounts simulate_messages(std::span<const MemberRecord> members, const Adjacency& graph,
                                std::span<const NotificationSchedule> schedules,
                                const WindowConfig& window, const DGPConfig& config,
                                std::uint64_t seed) {
  config.validate();
  window.validate();
  const auto n = static_cast<std::int64_t>(members.size());
  require(graph.size() == n, "simulate_messages: graph and population sizes differ");

  MessageCounts out;
  out.first_week = window.first_week();
  const int n_weeks = window.last_week() - out.first_week + 1;
  out.counts.setZero(n, n_weeks);

  // Notifications per (member, week offset); occasions are counted separately
  // because each one triggers its own round of peer responses.
  std::vector<std::vector<int>> notified(static_cast<std::size_t>(n));
  for (const auto& s : schedules) {
    if (s.member_id < 0 || s.member_id >= n) {
      fail(ErrorKind::DataError,
           "schedule references unknown member " + std::to_string(s.member_id));
    }
    const int offset = s.scheduled_week - out.first_week;
    if (offset >= 0 && offset < n_weeks) notified[static_cast<std::size_t>(s.member_id)].push_back(offset);
  }

  const auto activity = standardized_activity(members);
  std::vector<double> sociability_raw(members.size());
  for (std::size_t i = 0; i < members.size(); ++i) sociability_raw[i] = members[i].latent_sociability;
  const auto sociability = standardize(sociability_raw);
  const auto shocks = weekly_shocks(seed, out.first_week, window.last_week());

  for (std::int64_t i = 0; i < n; ++i) {
    const auto peers = graph.neighbours(i);
    double peer_factor = 0.0;
    for (const MemberId j : peers) {
      peer_factor += std::exp(sociability[static_cast<std::size_t>(j)] - 0.5);
    }
    if (!peers.empty()) peer_factor /= static_cast<double>(peers.size());

    Engine engine = make_engine(seed, Stream::Messages, static_cast<std::uint64_t>(i));
    const double a = activity[static_cast<std::size_t>(i)];
    auto& mine = notified[static_cast<std::size_t>(i)];
    std::sort(mine.begin(), mine.end());
    for (int t = 0; t < n_weeks; ++t) {
      const double index =
          config.confound_strength * a + config.shock_strength * shocks[static_cast<std::size_t>(t)] * a;
      const double rate = config.spontaneous_rate * peer_factor * std::exp(index);
      std::int64_t count = 0;
      if (rate > 0.0) {
        std::poisson_distribution<std::int64_t> spontaneous(rate);
        count += spontaneous(engine);
      }
      for (const int offset : mine) {
        if (offset != t || peers.empty() || config.response_prob == 0.0) continue;
        std::binomial_distribution<std::int64_t> encouraged(
            static_cast<std::int64_t>(peers.size()), config.response_prob);
        count += encouraged(engine);
      }
      out.counts(i, t) = count;
    }
  }
  return out;
}

double expected_pageviews(const DGPConfig& config, const GroundTruth& truth, double activity_z,
                          int week, double messages) {
  const auto t = static_cast<std::size_t>(week - truth.first_week);
  const double index = config.confound_strength * activity_z +
                       config.shock_strength * truth.shock.at(t) * activity_z;
  return truth.tau.at(t) + truth.true_beta * messages + config.pageview_loading * index;
}

PanelSimulation simulate_pageviews(std::span<const MemberRecord> members,
                                   const MessageCounts& messages, const DGPConfig& config,
                                   std::uint64_t seed) {
  config.validate();
  const auto n = static_cast<std::int64_t>(members.size());
  if (messages.counts.rows() != n) {
    fail(ErrorKind::DataError, "simulate_pageviews: message counts do not cover the population");
  }
  PanelSimulation out;
  GroundTruth& truth = out.truth;
  truth.true_beta = config.true_beta;
  truth.first_week = messages.first_week;
  truth.seed = seed;
  truth.shock = weekly_shocks(seed, messages.first_week, messages.last_week());
  truth.tau = week_effects(config, seed, messages.first_week, messages.last_week());
  truth.alpha.resize(static_cast<std::size_t>(n));

  const auto activity = standardized_activity(members);
  out.panel.reserve(static_cast<std::size_t>(n * messages.n_weeks()));
  for (std::int64_t i = 0; i < n; ++i) {
    Engine engine = make_engine(seed, Stream::Pageviews, static_cast<std::uint64_t>(i));
    const double alpha = draw_normal(engine, config.alpha_mean, config.alpha_sd);
    truth.alpha[static_cast<std::size_t>(i)] = alpha;
    for (int t = 0; t < messages.n_weeks(); ++t) {
      const int week = messages.first_week + t;
      const auto m = messages.counts(i, t);
      const double mean = alpha + expected_pageviews(config, truth,
                                                     activity[static_cast<std::size_t>(i)], week,
                                                     static_cast<double>(m));
      const double value = std::round(draw_normal(engine, mean, config.noise_sd));
      out.panel.push_back({members[static_cast<std::size_t>(i)].member_id, week, m,
                           static_cast<std::int64_t>(std::max(0.0, value))});
    }
  }
  return out;
}

}  // namespace peerfx
