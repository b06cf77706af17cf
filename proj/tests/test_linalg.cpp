#include <doctest.h>

#include <vector>

#include <Eigen/Dense>

#include "peerfx/linalg.hpp"

using namespace peerfx;

TEST_CASE("least_squares solves an exact system") {
  Eigen::MatrixXd X(4, 2);
  X << 1, 1, 1, 2, 1, 3, 1, 4;
  const Eigen::VectorXd y = X * Eigen::Vector2d(0.5, 3.0);
  const auto fit = linalg::least_squares(X, y);
  CHECK(fit.coefficients(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(fit.coefficients(1) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(fit.residuals.norm() < 1e-12);
  const Eigen::MatrixXd expected = (X.transpose() * X).inverse();
  CHECK((fit.xtx_inverse - expected).norm() < 1e-12);
}

TEST_CASE("least_squares accepts blocks and float scalars") {
  Eigen::MatrixXf X(5, 3);
  X << 1, 0, 2, 1, 1, 1, 1, 2, 7, 1, 3, 2, 1, 4, 5;
  Eigen::VectorXf y(5);
  y << 1, 2, 4, 3, 6;
  const auto fit = linalg::least_squares(X.leftCols(2), y);
  static_assert(std::is_same_v<decltype(fit.coefficients)::Scalar, float>);
  const Eigen::VectorXf normal =
      (X.leftCols(2).transpose() * X.leftCols(2)).ldlt().solve(X.leftCols(2).transpose() * y);
  CHECK((fit.coefficients - normal).norm() < 1e-4f);
}

TEST_CASE("least_squares names the first dependent column") {
  Eigen::MatrixXd X(5, 3);
  X << 1, 2, 4, 1, 3, 6, 1, 5, 10, 1, 7, 14, 1, 1, 2;
  const Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(5, 1, 5);
  try {
    linalg::least_squares(X, y);
    FAIL("expected RankDeficient");
  } catch (const linalg::RankDeficient& e) {
    CHECK(e.column() == 2);
    CHECK(e.kind() == ErrorKind::IllConditioned);
  }
}

TEST_CASE("least_squares needs more rows than columns") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(linalg::least_squares(X, Eigen::VectorXd::Ones(2)), Error);
}

TEST_CASE("demean_two_way leaves zero member and week means") {
  // 3 members x 3 weeks, one cell missing.
  const std::vector<Eigen::Index> member = {0, 0, 0, 1, 1, 2, 2, 2};
  const std::vector<Eigen::Index> week = {0, 1, 2, 0, 2, 0, 1, 2};
  Eigen::MatrixXd v(8, 1);
  v << 3, 1, 4, 1, 5, 9, 2, 6;
  linalg::demean_two_way(v, member, 3, week, 3);
  for (Eigen::Index g = 0; g < 3; ++g) {
    double sm = 0.0, sw = 0.0;
    for (Eigen::Index r = 0; r < 8; ++r) {
      if (member[static_cast<std::size_t>(r)] == g) sm += v(r, 0);
      if (week[static_cast<std::size_t>(r)] == g) sw += v(r, 0);
    }
    CHECK(std::abs(sm) < 1e-9);
    CHECK(std::abs(sw) < 1e-9);
  }
}
