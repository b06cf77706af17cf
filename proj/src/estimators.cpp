#include "peerfx/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>
#include <unordered_map>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "peerfx/error.hpp"
#include "peerfx/linalg.hpp"

namespace peerfx {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

CoefficientEstimate make_coefficient(std::string name, double estimate, double variance,
                                     double df) {
  CoefficientEstimate c;
  c.name = std::move(name);
  c.estimate = estimate;
  if (std::isnan(variance)) {
    c.std_error = c.t_stat = c.p_value = kNaN;
    return c;
  }
  c.std_error = std::sqrt(std::max(0.0, variance));
  if (c.std_error > 0.0) {
    c.t_stat = estimate / c.std_error;
    c.p_value = student_t_two_sided_p(c.t_stat, df);
  } else {
    c.t_stat = estimate == 0.0 ? 0.0 : std::copysign(kInf, estimate);
    c.p_value = estimate == 0.0 ? 1.0 : 0.0;
  }
  return c;
}

double clamp_unit(double v) { return std::clamp(v, 0.0, 1.0); }

// Rethrows a rank failure with the offending column's name.
[[noreturn]] void collinear(const linalg::RankDeficient& e, const std::vector<std::string>& names,
                            std::string_view context) {
  const auto j = static_cast<std::size_t>(e.column());
  const std::string name = j < names.size() ? names[j] : std::to_string(j);
  fail(ErrorKind::IllConditioned, std::string(context) + ": column '" + name +
                                      "' is collinear with the preceding design columns");
}

double sum_squares_centered(const Eigen::VectorXd& y) {
  return (y.array() - y.mean()).square().sum();
}

double wald_f(const Eigen::VectorXd& beta, const Eigen::MatrixXd& covariance, Eigen::Index first) {
  const Eigen::Index q = beta.size() - first;
  if (q <= 0) return 0.0;
  const Eigen::VectorXd b = beta.tail(q);
  const Eigen::MatrixXd v = covariance.bottomRightCorner(q, q);
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(v);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 0.0).all()) return kInf;
  return b.dot(ldlt.solve(b)) / static_cast<double>(q);
}

}  // namespace

std::string_view to_string(ModelTag tag) noexcept {
  switch (tag) {
    case ModelTag::ols: return "ols";
    case ModelTag::ols_controls: return "ols_controls";
    case ModelTag::fixed_effects: return "fixed_effects";
    case ModelTag::iv_first_stage: return "iv_first_stage";
    case ModelTag::iv_second_stage: return "iv_second_stage";
  }
  return "ols";
}

NamedDesign& NamedDesign::append(const NamedDesign& other) {
  if (other.cols() == 0) return *this;
  if (cols() == 0) {
    *this = other;
    return *this;
  }
  require(other.rows() == rows(), "NamedDesign::append: row count mismatch");
  Eigen::MatrixXd joined(rows(), cols() + other.cols());
  joined << columns, other.columns;
  columns = std::move(joined);
  names.insert(names.end(), other.names.begin(), other.names.end());
  return *this;
}

const CoefficientEstimate& EstimationResult::at(std::string_view name) const {
  for (const auto& c : coefficients) {
    if (c.name == name) return c;
  }
  fail(ErrorKind::InvalidArgument, "no coefficient named '" + std::string(name) + "'");
}

bool EstimationResult::contains(std::string_view name) const {
  return std::any_of(coefficients.begin(), coefficients.end(),
                     [&](const auto& c) { return c.name == name; });
}

std::string format_ttest(const TTestResult& result, int digits) {
  char buffer[96];
  std::snprintf(buffer, sizeof buffer, "t = %.*f, p = %.*f", digits, result.t_stat, digits,
                result.p_value);
  return buffer;
}

std::string_view significance_stars(double p_value) noexcept {
  if (p_value < 0.001) return "***";
  if (p_value < 0.01) return "**";
  if (p_value < 0.05) return "*";
  return "";
}

double student_t_two_sided_p(double t_stat, double degrees_of_freedom) {
  if (std::isnan(t_stat)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t_stat)) return 0.0;
  const double x = std::abs(t_stat);
  double tail = 0.0;
  if (!std::isfinite(degrees_of_freedom) || degrees_of_freedom > 1e10) {
    tail = boost::math::cdf(boost::math::complement(boost::math::normal_distribution<>(), x));
  } else {
    tail = boost::math::cdf(
        boost::math::complement(boost::math::students_t_distribution<>(degrees_of_freedom), x));
  }
  return std::min(1.0, 2.0 * tail);
}

double f_upper_tail_p(double f_stat, double df1, double df2) {
  if (std::isnan(f_stat)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(f_stat)) return 0.0;
  if (f_stat <= 0.0) return 1.0;
  return boost::math::cdf(
      boost::math::complement(boost::math::fisher_f_distribution<>(df1, df2), f_stat));
}

EstimationResult ols(const Eigen::VectorXd& outcome, const NamedDesign& design,
                     bool include_intercept, CovarianceType covariance, ModelTag tag) {
  const Eigen::Index n = outcome.size();
  require(design.rows() == n, "ols: outcome and design row counts differ");
  require(static_cast<Eigen::Index>(design.names.size()) == design.cols(),
          "ols: one name per design column required");

  Eigen::MatrixXd x(n, design.cols() + (include_intercept ? 1 : 0));
  std::vector<std::string> names;
  if (include_intercept) {
    x.col(0).setOnes();
    names.emplace_back(kIntercept);
  }
  x.rightCols(design.cols()) = design.columns;
  names.insert(names.end(), design.names.begin(), design.names.end());
  const Eigen::Index k = x.cols();
  if (k == 0) fail(ErrorKind::InvalidArgument, "ols: empty design");

  linalg::LeastSquaresFit<double> fit;
  try {
    fit = linalg::least_squares(x, outcome);
  } catch (const linalg::RankDeficient& e) {
    collinear(e, names, "ols");
  }

  EstimationResult result;
  result.model_tag = tag;
  result.n_observations = n;
  result.df_residual = n - k;
  const double df = static_cast<double>(n - k);
  const double rss = fit.residuals.squaredNorm();
  const double sigma2 = rss / df;

  Eigen::MatrixXd vcov;
  if (covariance == CovarianceType::classical) {
    vcov = sigma2 * fit.xtx_inverse;
  } else {
    const Eigen::MatrixXd meat = x.transpose() * fit.residuals.array().square().matrix().asDiagonal() * x;
    vcov = (static_cast<double>(n) / df) * fit.xtx_inverse * meat * fit.xtx_inverse;
  }
  for (Eigen::Index j = 0; j < k; ++j) {
    result.coefficients.push_back(
        make_coefficient(names[static_cast<std::size_t>(j)], fit.coefficients(j), vcov(j, j), df));
  }

  const double tss = include_intercept ? sum_squares_centered(outcome) : outcome.squaredNorm();
  result.r_squared = tss > 0.0 ? clamp_unit(1.0 - rss / tss) : 0.0;
  const double intercept_df = include_intercept ? 1.0 : 0.0;
  result.adj_r_squared =
      1.0 - (1.0 - result.r_squared) * (static_cast<double>(n) - intercept_df) / df;
  const auto q = static_cast<double>(k) - intercept_df;
  if (q > 0) {
    if (covariance == CovarianceType::classical) {
      result.f_statistic = result.r_squared >= 1.0
                               ? kInf
                               : (result.r_squared / q) / ((1.0 - result.r_squared) / df);
    } else {
      result.f_statistic = wald_f(fit.coefficients, vcov, include_intercept ? 1 : 0);
    }
    result.f_p_value = f_upper_tail_p(result.f_statistic, q, df);
  }
  return result;
}

ControlSpec ControlSpec::standard() {
  return ControlSpec{{"connections_decile", "country", "industry"}, {"tenure_years"}};
}

NamedDesign encode_controls(const CovariateTable& covariates, const ControlSpec& spec,
                            std::vector<std::string>& warnings) {
  NamedDesign out;
  std::vector<Eigen::VectorXd> columns;
  std::optional<std::size_t> rows;
  const auto check_rows = [&](std::size_t r, const std::string& name) {
    if (rows && *rows != r) {
      fail(ErrorKind::InvalidArgument, "control '" + name + "' has a different row count");
    }
    rows = r;
  };

  for (const auto& name : spec.categorical) {
    const auto it = covariates.categorical.find(name);
    if (it == covariates.categorical.end()) {
      fail(ErrorKind::InvalidArgument, "unknown categorical control '" + name + "'");
    }
    const auto& values = it->second;
    check_rows(values.size(), name);
    const std::set<std::int64_t> levels(values.begin(), values.end());
    if (levels.size() < 2) {
      warnings.push_back("categorical control '" + name +
                         "' has a single observed level and was dropped");
      continue;
    }
    for (auto level = std::next(levels.begin()); level != levels.end(); ++level) {
      Eigen::VectorXd dummy(static_cast<Eigen::Index>(values.size()));
      for (std::size_t r = 0; r < values.size(); ++r) {
        dummy(static_cast<Eigen::Index>(r)) = values[r] == *level ? 1.0 : 0.0;
      }
      columns.push_back(std::move(dummy));
      out.names.push_back(name + "=" + std::to_string(*level));
    }
  }
  for (const auto& name : spec.numeric) {
    const auto it = covariates.numeric.find(name);
    if (it == covariates.numeric.end()) {
      fail(ErrorKind::InvalidArgument, "unknown numeric control '" + name + "'");
    }
    check_rows(it->second.size(), name);
    columns.push_back(Eigen::Map<const Eigen::VectorXd>(it->second.data(),
                                                        static_cast<Eigen::Index>(it->second.size())));
    out.names.push_back(name);
  }
  out.columns.resize(static_cast<Eigen::Index>(rows.value_or(0)),
                     static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    out.columns.col(static_cast<Eigen::Index>(c)) = columns[c];
  }
  return out;
}

EstimationResult ols_with_controls(const Eigen::VectorXd& outcome,
                                   const Eigen::VectorXd& messages,
                                   const CovariateTable& covariates, const ControlSpec& spec,
                                   CovarianceType covariance) {
  std::vector<std::string> warnings;
  NamedDesign design{messages, {std::string(kMessages)}};
  NamedDesign controls = encode_controls(covariates, spec, warnings);
  if (controls.cols() > 0 && controls.rows() != messages.size()) {
    fail(ErrorKind::InvalidArgument, "ols_with_controls: control rows differ from outcome rows");
  }
  design.append(controls);
  auto result = ols(outcome, design, true, covariance, ModelTag::ols_controls);
  result.warnings = std::move(warnings);
  return result;
}

CovariateTable member_covariates(std::span<const PanelObservation> panel,
                                 std::span<const MemberRecord> members) {
  std::unordered_map<MemberId, std::size_t> index;
  index.reserve(members.size());
  for (std::size_t i = 0; i < members.size(); ++i) index.emplace(members[i].member_id, i);

  CovariateTable table;
  auto& decile = table.categorical["connections_decile"];
  auto& country = table.categorical["country"];
  auto& industry = table.categorical["industry"];
  auto& tenure = table.numeric["tenure_years"];
  for (const auto& row : panel) {
    const auto it = index.find(row.member_id);
    if (it == index.end()) {
      fail(ErrorKind::DataError, "panel member " + std::to_string(row.member_id) +
                                     " missing from population");
    }
    const auto& m = members[it->second];
    decile.push_back(m.connections_decile);
    country.push_back(m.country);
    industry.push_back(m.industry);
    tenure.push_back(m.tenure_years);
  }
  return table;
}

EstimationResult ols_with_controls(std::span<const PanelObservation> panel,
                                   std::span<const MemberRecord> members, const ControlSpec& spec) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(panel.size()));
  Eigen::VectorXd m(static_cast<Eigen::Index>(panel.size()));
  for (std::size_t r = 0; r < panel.size(); ++r) {
    y(static_cast<Eigen::Index>(r)) = static_cast<double>(panel[r].pageviews);
    m(static_cast<Eigen::Index>(r)) = static_cast<double>(panel[r].messages_received);
  }
  return ols_with_controls(y, m, member_covariates(panel, members), spec);
}

EstimationResult fixed_effects(std::span<const PanelObservation> panel,
                               const FixedEffectsOptions& options) {
  const auto n = static_cast<Eigen::Index>(panel.size());
  std::unordered_map<MemberId, Eigen::Index> member_index;
  std::map<int, Eigen::Index> week_index;
  for (const auto& row : panel) {
    member_index.try_emplace(row.member_id, static_cast<Eigen::Index>(member_index.size()));
    week_index.emplace(row.week, 0);
  }
  {
    Eigen::Index w = 0;
    for (auto& [week, idx] : week_index) idx = w++;
  }
  const auto n_members = static_cast<Eigen::Index>(member_index.size());
  const auto n_weeks = static_cast<Eigen::Index>(week_index.size());

  std::vector<Eigen::Index> member_of(static_cast<std::size_t>(n));
  std::vector<Eigen::Index> week_of(static_cast<std::size_t>(n));
  std::vector<int> rows_per_member(static_cast<std::size_t>(n_members), 0);
  std::set<std::pair<Eigen::Index, Eigen::Index>> cells;
  Eigen::MatrixXd data(n, 2);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = panel[static_cast<std::size_t>(r)];
    member_of[static_cast<std::size_t>(r)] = member_index.at(row.member_id);
    week_of[static_cast<std::size_t>(r)] = week_index.at(row.week);
    if (!cells.emplace(member_of[static_cast<std::size_t>(r)], week_of[static_cast<std::size_t>(r)]).second) {
      fail(ErrorKind::DataError, "fixed_effects: duplicate (member, week) row for member " +
                                     std::to_string(row.member_id));
    }
    ++rows_per_member[static_cast<std::size_t>(member_of[static_cast<std::size_t>(r)])];
    data(r, 0) = static_cast<double>(row.pageviews);
    data(r, 1) = static_cast<double>(row.messages_received);
  }
  if (std::none_of(rows_per_member.begin(), rows_per_member.end(), [](int c) { return c >= 2; })) {
    fail(ErrorKind::InsufficientData, "fixed_effects: no member is observed in two or more weeks");
  }

  // Connected components of the member-week bipartite graph fix the number
  // of identified effects: members + weeks - components.
  std::vector<Eigen::Index> parent(static_cast<std::size_t>(n_members + n_weeks));
  std::iota(parent.begin(), parent.end(), Eigen::Index{0});
  const auto find = [&](Eigen::Index v) {
    while (parent[static_cast<std::size_t>(v)] != v) {
      parent[static_cast<std::size_t>(v)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
      v = parent[static_cast<std::size_t>(v)];
    }
    return v;
  };
  Eigen::Index components = n_members + n_weeks;
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto a = find(member_of[static_cast<std::size_t>(r)]);
    const auto b = find(n_members + week_of[static_cast<std::size_t>(r)]);
    if (a != b) {
      parent[static_cast<std::size_t>(a)] = b;
      --components;
    }
  }
  const Eigen::Index absorbed = n_members + n_weeks - components;
  const Eigen::Index df = n - absorbed - 1;

  const Eigen::VectorXd y_raw = data.col(0);
  const double x_scale = std::max(1.0, data.col(1).cwiseAbs().maxCoeff());
  linalg::demean_two_way(data, member_of, n_members, week_of, n_weeks, options.tolerance,
                         options.max_iterations);
  const Eigen::VectorXd y = data.col(0);
  const Eigen::VectorXd x = data.col(1);
  const double sxx = x.squaredNorm();
  if (std::sqrt(sxx / static_cast<double>(n)) <= 1e-9 * x_scale) {
    fail(ErrorKind::NoWithinVariation,
         "fixed_effects: messages_received has no variation within members and weeks");
  }

  const double beta = x.dot(y) / sxx;
  const Eigen::VectorXd residuals = y - beta * x;
  const double rss = residuals.squaredNorm();
  // An exactly identified panel still has a slope, but no error variance.
  const double sigma2 = df > 0 ? rss / static_cast<double>(df) : kNaN;

  EstimationResult result;
  result.model_tag = ModelTag::fixed_effects;
  if (df == 0) result.warnings.push_back("no residual degrees of freedom; standard errors undefined");
  result.n_observations = n;
  result.df_residual = df;
  result.coefficients.push_back(
      make_coefficient(std::string(kMessages), beta, sigma2 / sxx, static_cast<double>(df)));

  const double tss = sum_squares_centered(y_raw);
  const auto model_df = static_cast<double>(absorbed);
  result.r_squared = tss > 0.0 ? clamp_unit(1.0 - rss / tss) : 0.0;
  if (df == 0) {
    result.adj_r_squared = result.f_statistic = result.f_p_value = kNaN;
    return result;
  }
  result.adj_r_squared = 1.0 - (1.0 - result.r_squared) * static_cast<double>(n - 1) /
                                   static_cast<double>(df);
  result.f_statistic = rss > 0.0 ? ((tss - rss) / model_df) / sigma2 : kInf;
  result.f_p_value = f_upper_tail_p(result.f_statistic, model_df, static_cast<double>(df));
  return result;
}

TwoStageResult two_stage_least_squares(const Eigen::VectorXd& outcome,
                                       const Eigen::VectorXd& endogenous,
                                       const Eigen::VectorXd& instrument,
                                       const std::optional<NamedDesign>& controls,
                                       const TwoStageOptions& options) {
  const Eigen::Index n = outcome.size();
  require(endogenous.size() == n && instrument.size() == n,
          "two_stage_least_squares: input lengths differ");
  if (controls) require(controls->rows() == n, "two_stage_least_squares: control rows differ");
  const bool has_controls = controls && controls->cols() > 0;

  TwoStageResult result;
  NamedDesign stage1{instrument, {"instrument"}};
  if (has_controls) stage1.append(*controls);
  result.first_stage = ols(endogenous, stage1, true, CovarianceType::classical,
                           ModelTag::iv_first_stage);
  const auto& gamma = result.first_stage.at("instrument");
  if (gamma.estimate == 0.0) {
    fail(ErrorKind::DivisionDegenerate, "two_stage_least_squares: zero first-stage contrast");
  }
  result.first_stage_f = gamma.t_stat * gamma.t_stat;
  result.weak_instrument = !(result.first_stage_f >= options.weak_instrument_threshold);

  // Fitted regressor from stage 1.
  Eigen::MatrixXd z(n, stage1.cols() + 1);
  z.col(0).setOnes();
  z.rightCols(stage1.cols()) = stage1.columns;
  Eigen::VectorXd stage1_coef(z.cols());
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    stage1_coef(j) = result.first_stage.coefficients[static_cast<std::size_t>(j)].estimate;
  }
  const Eigen::VectorXd fitted = z * stage1_coef;

  const Eigen::Index k = 2 + (has_controls ? controls->cols() : 0);
  Eigen::MatrixXd x_hat(n, k);
  Eigen::MatrixXd x_structural(n, k);
  x_hat.col(0).setOnes();
  x_hat.col(1) = fitted;
  x_structural.col(0).setOnes();
  x_structural.col(1) = endogenous;
  std::vector<std::string> names{std::string(kIntercept), std::string(kMessages)};
  if (has_controls) {
    x_hat.rightCols(controls->cols()) = controls->columns;
    x_structural.rightCols(controls->cols()) = controls->columns;
    names.insert(names.end(), controls->names.begin(), controls->names.end());
  }

  linalg::LeastSquaresFit<double> fit;
  try {
    fit = linalg::least_squares(x_hat, outcome);
  } catch (const linalg::RankDeficient& e) {
    if (e.column() == 1) {
      fail(ErrorKind::DivisionDegenerate,
           "two_stage_least_squares: fitted regressor is collinear with the exogenous columns");
    }
    collinear(e, names, "two_stage_least_squares");
  }

  // Structural residuals use the observed regressor, not the fitted one.
  const Eigen::VectorXd structural = outcome - x_structural * fit.coefficients;
  const double df = static_cast<double>(n - k);
  const double sigma2 = structural.squaredNorm() / df;
  const Eigen::MatrixXd vcov = sigma2 * fit.xtx_inverse;

  EstimationResult& second = result.second_stage;
  second.model_tag = ModelTag::iv_second_stage;
  second.n_observations = n;
  second.df_residual = n - k;
  for (Eigen::Index j = 0; j < k; ++j) {
    second.coefficients.push_back(make_coefficient(names[static_cast<std::size_t>(j)],
                                                   fit.coefficients(j), vcov(j, j), df));
  }
  // Fit statistics of the second-stage regression on the fitted regressor.
  const double tss = sum_squares_centered(outcome);
  second.r_squared = tss > 0.0 ? clamp_unit(1.0 - fit.residuals.squaredNorm() / tss) : 0.0;
  second.adj_r_squared = 1.0 - (1.0 - second.r_squared) * static_cast<double>(n - 1) / df;
  second.f_statistic = wald_f(fit.coefficients, vcov, 1);
  second.f_p_value = f_upper_tail_p(second.f_statistic, static_cast<double>(k - 1), df);
  if (result.weak_instrument) {
    char buffer[128];
    std::snprintf(buffer, sizeof buffer, "weak instrument: first-stage F = %.3f < %.3g",
                  result.first_stage_f, options.weak_instrument_threshold);
    second.warnings.emplace_back(buffer);
  }

  const bool binary = (instrument.array() == 0.0 || instrument.array() == 1.0).all();
  if (!has_controls && binary) {
    double y1 = 0, y0 = 0, m1 = 0, m0 = 0, n1 = 0, n0 = 0;
    for (Eigen::Index r = 0; r < n; ++r) {
      if (instrument(r) == 1.0) {
        y1 += outcome(r);
        m1 += endogenous(r);
        n1 += 1;
      } else {
        y0 += outcome(r);
        m0 += endogenous(r);
        n0 += 1;
      }
    }
    const double contrast = m1 / n1 - m0 / n0;
    if (contrast == 0.0) {
      fail(ErrorKind::DivisionDegenerate, "two_stage_least_squares: zero first-stage contrast");
    }
    result.wald_estimate = (y1 / n1 - y0 / n0) / contrast;
  }
  return result;
}

TTestResult welch_t_test(std::span<const double> sample_a, std::span<const double> sample_b) {
  if (sample_a.size() < 2 || sample_b.size() < 2) {
    fail(ErrorKind::InsufficientData, "welch_t_test: each sample needs at least 2 observations");
  }
  const auto moments = [](std::span<const double> s) {
    const auto n = static_cast<double>(s.size());
    const double mean = std::accumulate(s.begin(), s.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : s) ss += (v - mean) * (v - mean);
    return std::pair{mean, ss / (n - 1.0)};
  };
  const auto [mean_a, var_a] = moments(sample_a);
  const auto [mean_b, var_b] = moments(sample_b);
  const auto na = static_cast<double>(sample_a.size());
  const auto nb = static_cast<double>(sample_b.size());

  TTestResult r;
  r.mean_a = mean_a;
  r.mean_b = mean_b;
  const double va = var_a / na;
  const double vb = var_b / nb;
  const double se2 = va + vb;
  if (se2 == 0.0) {
    r.degrees_of_freedom = na + nb - 2.0;
    r.t_stat = mean_a == mean_b ? 0.0 : std::copysign(kInf, mean_a - mean_b);
    r.p_value = mean_a == mean_b ? 1.0 : 0.0;
    return r;
  }
  r.t_stat = (mean_a - mean_b) / std::sqrt(se2);
  r.degrees_of_freedom = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  r.p_value = student_t_two_sided_p(r.t_stat, r.degrees_of_freedom);
  return r;
}

double nearest_rank_quantile(std::span<const double> values, double q) {
  require(!values.empty(), "nearest_rank_quantile: empty input");
  require(q > 0.0 && q <= 1.0, "nearest_rank_quantile: q must lie in (0, 1]");
  std::vector<double> sorted(values.begin(), values.end());
  const auto n = sorted.size();
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n) - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank - 1),
                   sorted.end());
  return sorted[rank - 1];
}

std::vector<bool> trim_mask(std::span<const double> values, double top_fraction) {
  require(top_fraction >= 0.0 && top_fraction < 1.0, "trim: top_fraction must lie in [0, 1)");
  std::vector<bool> keep(values.size(), true);
  if (values.empty() || top_fraction == 0.0) return keep;
  const double cutoff = nearest_rank_quantile(values, 1.0 - top_fraction);
  for (std::size_t i = 0; i < values.size(); ++i) keep[i] = values[i] <= cutoff;
  return keep;
}

std::vector<PanelObservation> trim_outliers(std::span<const PanelObservation> panel,
                                            double top_fraction, PanelColumn on) {
  std::vector<double> values(panel.size());
  for (std::size_t i = 0; i < panel.size(); ++i) {
    values[i] = static_cast<double>(on == PanelColumn::pageviews ? panel[i].pageviews
                                                                  : panel[i].messages_received);
  }
  const auto keep = trim_mask(values, top_fraction);
  std::vector<PanelObservation> out;
  out.reserve(panel.size());
  for (std::size_t i = 0; i < panel.size(); ++i) {
    if (keep[i]) out.push_back(panel[i]);
  }
  return out;
}

}  // namespace peerfx
