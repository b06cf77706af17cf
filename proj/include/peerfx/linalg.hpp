#pragma once

// Dense least-squares kernels shared by the estimators. Templated on the
// Eigen expression type so callers can pass blocks, maps or plain matrices.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "peerfx/error.hpp"

namespace peerfx::linalg {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Raised when a design column lies (numerically) in the span of the columns
/// before it. `column()` is the position in design order.
class RankDeficient : public Error {
 public:
  explicit RankDeficient(Eigen::Index column)
      : Error(ErrorKind::IllConditioned,
              "design column " + std::to_string(column) + " is linearly dependent"),
        column_(column) {}
  Eigen::Index column() const noexcept { return column_; }

 private:
  Eigen::Index column_;
};

template <typename Scalar>
struct LeastSquaresFit {
  Vector<Scalar> coefficients;
  Vector<Scalar> residuals;
  Matrix<Scalar> xtx_inverse;  // (X'X)^-1
};

/// Default relative tolerance for the rank test |R_jj| <= tol * ||x_j||.
inline constexpr double kRankTolerance = 1e-10;

/// Unpivoted Householder QR keeps the design order, so the first column whose
/// diagonal entry of R collapses is the first dependent one.
template <typename DerivedX, typename DerivedY>
LeastSquaresFit<typename DerivedX::Scalar> least_squares(
    const Eigen::MatrixBase<DerivedX>& design, const Eigen::MatrixBase<DerivedY>& outcome,
    double rank_tolerance = kRankTolerance) {
  using Scalar = typename DerivedX::Scalar;
  const Eigen::Index n = design.rows();
  const Eigen::Index k = design.cols();
  if (outcome.rows() != n) fail(ErrorKind::InvalidArgument, "least_squares: row mismatch");
  if (n < k + 1) {
    fail(ErrorKind::InsufficientData, "least_squares: need more rows (" + std::to_string(n) +
                                          ") than columns (" + std::to_string(k) + ")");
  }

  Eigen::HouseholderQR<Matrix<Scalar>> qr(design);
  const auto& packed = qr.matrixQR();
  for (Eigen::Index j = 0; j < k; ++j) {
    const Scalar norm = design.col(j).norm();
    if (!(norm > Scalar(0)) || std::abs(packed(j, j)) <= Scalar(rank_tolerance) * norm) {
      throw RankDeficient(j);
    }
  }

  LeastSquaresFit<Scalar> fit;
  fit.coefficients = qr.solve(outcome.derived());
  fit.residuals = outcome - design * fit.coefficients;
  const Matrix<Scalar> r = packed.topLeftCorner(k, k).template triangularView<Eigen::Upper>();
  const Matrix<Scalar> r_inv = r.template triangularView<Eigen::Upper>().solve(
      Matrix<Scalar>::Identity(k, k));
  fit.xtx_inverse = r_inv * r_inv.transpose();
  return fit;
}

/// Sweeps out two crossed sets of group means (member and week effects) by
/// alternating projections until every group mean is below tolerance * scale.
/// Works column by column on `values` in place; returns the iteration count.
template <typename Derived>
int demean_two_way(Eigen::MatrixBase<Derived>& values, std::span<const Eigen::Index> first,
                   Eigen::Index n_first, std::span<const Eigen::Index> second,
                   Eigen::Index n_second, double tolerance = 1e-10, int max_iterations = 100000) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = values.rows();
  if (static_cast<Eigen::Index>(first.size()) != n ||
      static_cast<Eigen::Index>(second.size()) != n) {
    fail(ErrorKind::InvalidArgument, "demean_two_way: group index length mismatch");
  }
  Vector<Scalar> count_first = Vector<Scalar>::Zero(n_first);
  Vector<Scalar> count_second = Vector<Scalar>::Zero(n_second);
  for (Eigen::Index r = 0; r < n; ++r) {
    count_first(first[static_cast<std::size_t>(r)]) += Scalar(1);
    count_second(second[static_cast<std::size_t>(r)]) += Scalar(1);
  }

  // Subtracts group means; returns the largest absolute mean removed.
  const auto sweep = [n](auto&& column, std::span<const Eigen::Index> group,
                         const Vector<Scalar>& counts) {
    Vector<Scalar> sums = Vector<Scalar>::Zero(counts.size());
    for (Eigen::Index r = 0; r < n; ++r) sums(group[static_cast<std::size_t>(r)]) += column(r);
    Scalar largest(0);
    for (Eigen::Index g = 0; g < counts.size(); ++g) {
      if (counts(g) > Scalar(0)) {
        sums(g) /= counts(g);
        largest = std::max<Scalar>(largest, std::abs(sums(g)));
      }
    }
    for (Eigen::Index r = 0; r < n; ++r) column(r) -= sums(group[static_cast<std::size_t>(r)]);
    return largest;
  };

  int worst = 0;
  for (Eigen::Index c = 0; c < values.cols(); ++c) {
    auto column = values.col(c);
    const Scalar scale = std::max<Scalar>(Scalar(1), column.cwiseAbs().maxCoeff());
    int iteration = 0;
    for (; iteration < max_iterations; ++iteration) {
      const Scalar a = sweep(column, first, count_first);
      const Scalar b = sweep(column, second, count_second);
      if (iteration > 0 && std::max(a, b) <= Scalar(tolerance) * scale) break;
    }
    if (iteration == max_iterations) {
      fail(ErrorKind::IllConditioned, "demean_two_way: alternating projections did not converge");
    }
    worst = std::max(worst, iteration + 1);
  }
  return worst;
}

}  // namespace peerfx::linalg
