#include "peerfx/synthnet.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "peerfx/error.hpp"
#include "peerfx/random.hpp"

namespace peerfx {

namespace {

// Draws a level in [0, n_levels) with log-weights tilted by z; the tilt runs
// linearly from -loading*z to +loading*z across the levels.
int tilted_categorical(Engine& engine, int n_levels, double loading, double z) {
  std::vector<double> weights(static_cast<std::size_t>(n_levels));
  for (int k = 0; k < n_levels; ++k) {
    const double position =
        n_levels > 1 ? -1.0 + 2.0 * k / static_cast<double>(n_levels - 1) : 0.0;
    weights[static_cast<std::size_t>(k)] = std::exp(loading * z * position);
  }
  std::discrete_distribution<int> pick(weights.begin(), weights.end());
  return pick(engine);
}

double link_weight(const GraphConfig& config, double distance) {
  return 1.0 / (1.0 + std::exp(-(config.base_logit -
                                 config.homophily_strength * distance)));
}

}  // namespace

void PopulationConfig::validate() const {
  if (n_members < 2) {
    fail(ErrorKind::ConfigError,
         "n_members must be >= 2 (got " + std::to_string(n_members) + ")");
  }
  if (!(activity_sd > 0.0) || !(sociability_sd > 0.0) || !(tenure_sd > 0.0)) {
    fail(ErrorKind::ConfigError, "distribution scale parameters must be positive");
  }
  if (n_countries < 1 || n_industries < 1) {
    fail(ErrorKind::ConfigError, "n_countries and n_industries must be >= 1");
  }
  if (!(covariate_activity_loading >= 0.0 && covariate_activity_loading <= 1.0)) {
    fail(ErrorKind::ConfigError, "covariate_activity_loading must lie in [0, 1]");
  }
  if (tenure_max < 0) fail(ErrorKind::ConfigError, "tenure_max must be >= 0");
}

void GraphConfig::validate() const {
  if (!(target_mean_degree >= 1.0)) {
    fail(ErrorKind::ConfigError, "target_mean_degree must be >= 1");
  }
  if (!(homophily_strength >= 0.0)) {
    fail(ErrorKind::ConfigError, "homophily_strength must be >= 0");
  }
  if (!std::isfinite(base_logit)) fail(ErrorKind::ConfigError, "base_logit must be finite");
}

std::vector<MemberRecord> generate_population(const PopulationConfig& config,
                                              std::uint64_t seed) {
  config.validate();
  std::vector<MemberRecord> members(static_cast<std::size_t>(config.n_members));
  const double loading = config.covariate_activity_loading;
  for (std::int64_t id = 0; id < config.n_members; ++id) {
    Engine engine = make_engine(seed, Stream::Population, static_cast<std::uint64_t>(id));
    std::normal_distribution<double> standard(0.0, 1.0);
    std::uniform_int_distribution<int> week(1, 52);
    std::uniform_int_distribution<int> month(1, 12);

    MemberRecord& m = members[static_cast<std::size_t>(id)];
    m.member_id = id;
    const double z_activity = standard(engine);
    m.latent_activity = config.activity_mean + config.activity_sd * z_activity;
    m.latent_sociability = config.sociability_mean + config.sociability_sd * standard(engine);
    m.birth_week = week(engine);
    m.anniversary_month = month(engine);
    m.country = tilted_categorical(engine, config.n_countries, loading, z_activity);
    m.industry = tilted_categorical(engine, config.n_industries, loading, z_activity);
    const double tenure_z =
        loading * z_activity + std::sqrt(1.0 - loading * loading) * standard(engine);
    const double tenure = std::round(config.tenure_mean + config.tenure_sd * tenure_z);
    m.tenure_years = static_cast<int>(std::clamp(tenure, 0.0, double(config.tenure_max)));
  }
  return members;
}

EdgeList generate_graph(std::vector<MemberRecord>& members, const GraphConfig& config,
                        std::uint64_t seed) {
  config.validate();
  require(!members.empty(), "generate_graph: empty population");
  const auto n = static_cast<std::int64_t>(members.size());
  if (config.target_mean_degree >= static_cast<double>(n)) {
    fail(ErrorKind::ConfigError, "target_mean_degree must be < n_members");
  }
  for (std::int64_t i = 0; i < n; ++i) {
    require(members[static_cast<std::size_t>(i)].member_id == i,
            "generate_graph: member ids must be 0..n-1 in order");
  }

  double mean = 0.0;
  for (const auto& m : members) mean += m.latent_activity;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (const auto& m : members) var += (m.latent_activity - mean) * (m.latent_activity - mean);
  const double sd = std::sqrt(var / static_cast<double>(n));
  const double inv_sd = sd > 0.0 ? 1.0 / sd : 0.0;

  std::vector<double> scaled(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    scaled[static_cast<std::size_t>(i)] = members[static_cast<std::size_t>(i)].latent_activity * inv_sd;
  }

  // Pass 1: total link weight, to rescale onto the target mean degree.
  double total = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    double row = 0.0;
    const double ai = scaled[static_cast<std::size_t>(i)];
    for (std::int64_t j = i + 1; j < n; ++j) {
      row += link_weight(config, std::abs(ai - scaled[static_cast<std::size_t>(j)]));
    }
    total += row;
  }
  const double scale = config.target_mean_degree * static_cast<double>(n) / 2.0 / total;

  // Pass 2: one engine per member i covers the pairs (i, j > i).
  EdgeList out;
  out.edges.reserve(static_cast<std::size_t>(config.target_mean_degree * n / 2 * 1.1));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::int64_t i = 0; i < n; ++i) {
    Engine engine = make_engine(seed, Stream::Graph, static_cast<std::uint64_t>(i));
    const double ai = scaled[static_cast<std::size_t>(i)];
    for (std::int64_t j = i + 1; j < n; ++j) {
      const double p =
          scale * link_weight(config, std::abs(ai - scaled[static_cast<std::size_t>(j)]));
      if (unit(engine) < p) out.edges.emplace_back(i, j);
    }
  }

  std::vector<std::int64_t> degree(static_cast<std::size_t>(n), 0);
  for (const auto& [a, b] : out.edges) {
    ++degree[static_cast<std::size_t>(a)];
    ++degree[static_cast<std::size_t>(b)];
  }
  const auto deciles = degree_deciles(degree);
  for (std::size_t i = 0; i < members.size(); ++i) members[i].connections_decile = deciles[i];
  return out;
}

std::vector<int> degree_deciles(std::span<const std::int64_t> degrees) {
  std::vector<std::int64_t> sorted(degrees.begin(), degrees.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  std::vector<int> out;
  out.reserve(degrees.size());
  for (const auto d : degrees) {
    const auto at_or_below = std::upper_bound(sorted.begin(), sorted.end(), d) - sorted.begin();
    const int decile = static_cast<int>(std::ceil(10.0 * static_cast<double>(at_or_below) / n));
    out.push_back(std::clamp(decile, 1, 10));
  }
  return out;
}

Adjacency::Adjacency(std::int64_t n_members, const EdgeList& edges)
    : offsets_(static_cast<std::size_t>(n_members) + 1, 0) {
  for (const auto& [a, b] : edges.edges) {
    require(a >= 0 && b >= 0 && a < n_members && b < n_members && a != b,
            "Adjacency: edge endpoint out of range");
    ++offsets_[static_cast<std::size_t>(a) + 1];
    ++offsets_[static_cast<std::size_t>(b) + 1];
  }
  for (std::size_t i = 1; i < offsets_.size(); ++i) offsets_[i] += offsets_[i - 1];
  targets_.resize(static_cast<std::size_t>(offsets_.back()));
  std::vector<std::int64_t> cursor(offsets_.begin(), offsets_.end() - 1);
  for (const auto& [a, b] : edges.edges) {
    targets_[static_cast<std::size_t>(cursor[static_cast<std::size_t>(a)]++)] = b;
    targets_[static_cast<std::size_t>(cursor[static_cast<std::size_t>(b)]++)] = a;
  }
}

std::span<const MemberId> Adjacency::neighbours(MemberId id) const {
  const auto begin = static_cast<std::size_t>(offsets_[static_cast<std::size_t>(id)]);
  const auto end = static_cast<std::size_t>(offsets_[static_cast<std::size_t>(id) + 1]);
  return {targets_.data() + begin, end - begin};
}

}  // namespace peerfx
