#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "peerfx/notifqueue.hpp"
#include "peerfx/synthnet.hpp"

namespace peerfx {

/// Data-generating process. Every member carries a weekly engagement index
///
///   e_it = confound_strength * a_i + shock_strength * s_t * a_i
///
/// (a_i = standardized latent activity, s_t = common weekly shock). The index
/// raises the log rate of spontaneous messages and, scaled by
/// pageview_loading, raises pageviews: the confounded path. Encouraged
/// messages from notified peers are the exogenous path.
struct DGPConfig {
  double true_beta = 2.0;
  double response_prob = 0.4;
  double spontaneous_rate = 3.0;
  double confound_strength = 0.5;
  double shock_strength = 0.3;
  double pageview_loading = 20.0;
  double noise_sd = 5.0;
  double alpha_mean = 40.0;
  double alpha_sd = 5.0;
  /// Standard deviation of drawn week effects; ignored when week_effects is
  /// set explicitly.
  double tau_sd = 2.0;
  /// Explicit tau_t, one per panel week (first_week..last_week of the window).
  std::vector<double> week_effects;

  void validate() const;
};

/// Rows are members (by id), columns are consecutive weeks from first_week.
struct MessageCounts {
  int first_week = 1;
  Eigen::Array<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> counts;

  int n_weeks() const { return static_cast<int>(counts.cols()); }
  int last_week() const { return first_week + n_weeks() - 1; }
};

struct PanelObservation {
  MemberId member_id = 0;
  int week = 0;
  std::int64_t messages_received = 0;
  std::int64_t pageviews = 0;

  friend bool operator==(const PanelObservation&, const PanelObservation&) = default;
};

struct GroundTruth {
  double true_beta = 0.0;
  std::vector<double> alpha;  // indexed by member id
  int first_week = 1;
  std::vector<double> tau;    // indexed by week - first_week
  std::vector<double> shock;  // indexed by week - first_week
  std::uint64_t seed = 0;
};

struct PanelSimulation {
  std::vector<PanelObservation> panel;  // sorted by (member_id, week)
  GroundTruth truth;
};

/// Common weekly shocks s_t for weeks first_week..last_week. Shared by the
/// message and pageview channels.
std::vector<double> weekly_shocks(std::uint64_t seed, int first_week, int last_week);

MessageCounts simulate_messages(std::span<const MemberRecord> members, const Adjacency& graph,
                                std::span<const NotificationSchedule> schedules,
                                const WindowConfig& window, const DGPConfig& config,
                                std::uint64_t seed);

PanelSimulation simulate_pageviews(std::span<const MemberRecord> members,
                                   const MessageCounts& messages, const DGPConfig& config,
                                   std::uint64_t seed);

/// Pre-rounding conditional mean of pageviews for one member-week; exposed so
/// tests can check the structural equation directly.
double expected_pageviews(const DGPConfig& config, const GroundTruth& truth, double activity_z,
                          int week, double messages);

/// Standardized latent activity (a - mean) / sd over the population.
std::vector<double> standardized_activity(std::span<const MemberRecord> members);

}  // namespace peerfx
