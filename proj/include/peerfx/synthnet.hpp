#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace peerfx {

using MemberId = std::int64_t;

/// Synthetic population parameters. Defaults are illustrative, not fitted to
/// any real network.
struct PopulationConfig {
  std::int64_t n_members = 10000;
  double activity_mean = 0.0;
  double activity_sd = 1.0;
  double sociability_mean = 0.0;
  double sociability_sd = 1.0;
  int n_countries = 10;
  int n_industries = 15;
  /// Strength of the (mild) dependence of country, industry and tenure on
  /// latent activity. Zero makes the covariates pure noise.
  double covariate_activity_loading = 0.3;
  double tenure_mean = 12.0;
  double tenure_sd = 6.0;
  int tenure_max = 45;

  void validate() const;
};

struct MemberRecord {
  MemberId member_id = 0;
  double latent_activity = 0.0;
  double latent_sociability = 0.0;
  int birth_week = 1;         // 1..52
  int anniversary_month = 1;  // 1..12
  int country = 0;
  int industry = 0;
  int connections_decile = 1;  // 1..10, filled in by generate_graph
  int tenure_years = 0;

  friend bool operator==(const MemberRecord&, const MemberRecord&) = default;
};

struct GraphConfig {
  double target_mean_degree = 20.0;
  /// Slope of the logistic link on trait similarity -|a_i - a_j| / sd.
  double homophily_strength = 2.0;
  double base_logit = 0.0;

  void validate() const;
};

/// Undirected simple graph; each edge stored once with first < second,
/// sorted lexicographically.
struct EdgeList {
  std::vector<std::pair<MemberId, MemberId>> edges;

  friend bool operator==(const EdgeList&, const EdgeList&) = default;
};

/// Compressed adjacency for neighbour scans.
class Adjacency {
 public:
  Adjacency(std::int64_t n_members, const EdgeList& edges);

  std::int64_t size() const noexcept {
    return static_cast<std::int64_t>(offsets_.size()) - 1;
  }
  std::int64_t degree(MemberId id) const {
    return offsets_[static_cast<std::size_t>(id) + 1] -
           offsets_[static_cast<std::size_t>(id)];
  }
  std::span<const MemberId> neighbours(MemberId id) const;

 private:
  std::vector<std::int64_t> offsets_;
  std::vector<MemberId> targets_;
};

std::vector<MemberRecord> generate_population(const PopulationConfig& config,
                                              std::uint64_t seed);

/// Samples the homophilous graph and writes the realized degree decile back
/// into each member's connections_decile.
EdgeList generate_graph(std::vector<MemberRecord>& members,
                        const GraphConfig& config, std::uint64_t seed);

/// Decile (1..10) of each degree in the empirical degree distribution; ties
/// share a decile.
std::vector<int> degree_deciles(std::span<const std::int64_t> degrees);

}  // namespace peerfx
