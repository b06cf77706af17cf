#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "peerfx/behavior.hpp"

namespace peerfx {

enum class ModelTag { ols, ols_controls, fixed_effects, iv_first_stage, iv_second_stage };
enum class CovarianceType { classical, hc1 };

std::string_view to_string(ModelTag tag) noexcept;

/// Design matrix with one name per column.
struct NamedDesign {
  Eigen::MatrixXd columns;
  std::vector<std::string> names;

  Eigen::Index rows() const { return columns.rows(); }
  Eigen::Index cols() const { return columns.cols(); }
  /// Appends `other` column-wise; row counts must match.
  NamedDesign& append(const NamedDesign& other);
};

struct CoefficientEstimate {
  std::string name;
  double estimate = 0.0;
  double std_error = 0.0;
  double t_stat = 0.0;
  double p_value = 1.0;
};

struct EstimationResult {
  ModelTag model_tag = ModelTag::ols;
  std::vector<CoefficientEstimate> coefficients;  // design order
  double r_squared = 0.0;
  double adj_r_squared = 0.0;
  double f_statistic = 0.0;
  double f_p_value = 1.0;
  std::int64_t n_observations = 0;
  std::int64_t df_residual = 0;
  std::vector<std::string> warnings;

  /// Throws InvalidArgument for an unknown name.
  const CoefficientEstimate& at(std::string_view name) const;
  bool contains(std::string_view name) const;
};

struct TwoStageResult {
  EstimationResult first_stage;   // endogenous regressor on instrument (+ controls)
  EstimationResult second_stage;  // outcome on fitted regressor (+ controls)
  double first_stage_f = 0.0;
  std::optional<double> wald_estimate;  // single binary instrument, no controls
  bool weak_instrument = false;
};

struct TTestResult {
  double t_stat = 0.0;
  double p_value = 1.0;
  double degrees_of_freedom = 0.0;
  double mean_a = 0.0;
  double mean_b = 0.0;
};

/// "t = 1.15, p = 0.25"
std::string format_ttest(const TTestResult& result, int digits = 2);

inline constexpr std::string_view kIntercept = "(Intercept)";
inline constexpr std::string_view kMessages = "messages_received";

/// Least squares through a Householder QR. A dependent column raises
/// IllConditioned naming that column.
EstimationResult ols(const Eigen::VectorXd& outcome, const NamedDesign& design,
                     bool include_intercept, CovarianceType covariance = CovarianceType::classical,
                     ModelTag tag = ModelTag::ols);

/// Per-row covariates; every vector must have one entry per row.
struct CovariateTable {
  std::map<std::string, std::vector<std::int64_t>> categorical;
  std::map<std::string, std::vector<double>> numeric;
};

struct ControlSpec {
  std::vector<std::string> categorical;
  std::vector<std::string> numeric;

  /// connections decile, country, industry (categorical); tenure (numeric).
  static ControlSpec standard();
};

/// One-hot encodes categorical controls, dropping the smallest level as the
/// reference. A categorical with a single observed level is dropped and a
/// warning is appended.
NamedDesign encode_controls(const CovariateTable& covariates, const ControlSpec& spec,
                            std::vector<std::string>& warnings);

EstimationResult ols_with_controls(const Eigen::VectorXd& outcome,
                                   const Eigen::VectorXd& messages,
                                   const CovariateTable& covariates, const ControlSpec& spec,
                                   CovarianceType covariance = CovarianceType::classical);

/// Covariates of each panel row's member, for ols_with_controls on a panel.
CovariateTable member_covariates(std::span<const PanelObservation> panel,
                                 std::span<const MemberRecord> members);

EstimationResult ols_with_controls(std::span<const PanelObservation> panel,
                                   std::span<const MemberRecord> members,
                                   const ControlSpec& spec = ControlSpec::standard());

struct FixedEffectsOptions {
  double tolerance = 1e-10;
  int max_iterations = 100000;
};

/// Two-way (member and week) fixed effects via the within transformation.
/// Fit statistics are those of the equivalent dummy-variable regression.
EstimationResult fixed_effects(std::span<const PanelObservation> panel,
                               const FixedEffectsOptions& options = {});

struct TwoStageOptions {
  double weak_instrument_threshold = 10.0;
};

TwoStageResult two_stage_least_squares(const Eigen::VectorXd& outcome,
                                       const Eigen::VectorXd& endogenous,
                                       const Eigen::VectorXd& instrument,
                                       const std::optional<NamedDesign>& controls = std::nullopt,
                                       const TwoStageOptions& options = {});

TTestResult welch_t_test(std::span<const double> sample_a, std::span<const double> sample_b);

enum class PanelColumn { pageviews, messages_received };

/// Nearest-rank quantile: the ceil(q * n)-th smallest value (1-based).
double nearest_rank_quantile(std::span<const double> values, double q);

/// Mask of rows kept after dropping values strictly above the
/// (1 - top_fraction) nearest-rank quantile.
std::vector<bool> trim_mask(std::span<const double> values, double top_fraction);

std::vector<PanelObservation> trim_outliers(std::span<const PanelObservation> panel,
                                            double top_fraction = 0.01,
                                            PanelColumn on = PanelColumn::pageviews);

/// Significance stars: * p<0.05, ** p<0.01, *** p<0.001.
std::string_view significance_stars(double p_value) noexcept;

double student_t_two_sided_p(double t_stat, double degrees_of_freedom);
double f_upper_tail_p(double f_stat, double df1, double df2);

}  // namespace peerfx
