#include "shapeforge/qp.hpp"
#include "qp_oracle.hpp"

#include <doctest.h>

#include <random>

using namespace shapeforge;

namespace {

QpProblem rows(std::initializer_list<std::initializer_list<double>> g) {
  QpProblem p;
  const auto n = static_cast<Eigen::Index>(g.size());
  const auto d = static_cast<Eigen::Index>(g.begin()->size());
  p.gradients.resize(n, d);
  Eigen::Index i = 0;
  for (const auto& r : g) {
    Eigen::Index j = 0;
    for (double x : r) p.gradients(i, j++) = x;
    ++i;
  }
  return p;
}

double objective(const QpSolution& s) { return s.rho + 0.5 * s.w.squaredNorm(); }

}  // namespace

TEST_CASE("coincident gradients give steepest descent") {
  const auto s = solve_bi_descent_qp(rows({{3, -4}, {3, -4}}));
  CHECK((s.w - Eigen::Vector2d(-3, 4)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(std::abs(s.rho + 25.0) <= 1e-12);
  CHECK(s.kkt_residual <= 1e-12);
}

TEST_CASE("orthogonal unit gradients meet halfway") {
  const auto s = solve_bi_descent_qp(rows({{1, 0}, {0, 1}}));
  CHECK((s.w - Eigen::Vector2d(-0.5, -0.5)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(std::abs(s.rho + 0.5) <= 1e-12);
  CHECK((s.lambda - Eigen::Vector2d(0.5, 0.5)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("opposing gradients are Pareto critical") {
  const auto s = solve_bi_descent_qp(rows({{2, -1, 0.5}, {-2, 1, -0.5}}));
  CHECK(s.w.cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(std::abs(s.rho) <= 1e-12);
}

TEST_CASE("a single gradient is plain steepest descent") {
  const auto s = solve_bi_descent_qp(rows({{1, 2, 2}}));
  CHECK((s.w + Eigen::Vector3d(1, 2, 2)).norm() <= 1e-14);
  CHECK(s.rho == doctest::Approx(-9.0));
}

TEST_CASE("equalities remove the constrained direction") {
  QpProblem p = rows({{1, 1}, {1, -1}});
  p.equalities = Eigen::RowVector2d(0, 1);
  const auto s = solve_bi_descent_qp(p);
  CHECK(std::abs(s.w[1]) <= 1e-14);
  CHECK(s.w[0] == doctest::Approx(-1.0));
  CHECK(s.rho == doctest::Approx(-1.0));
}

TEST_CASE("bad input is rejected") {
  CHECK_THROWS_AS(solve_bi_descent_qp(QpProblem{}), std::invalid_argument);
  QpProblem p = rows({{1, 0, 0}});
  p.equalities = Eigen::MatrixXd::Zero(1, 2);
  CHECK_THROWS_AS(solve_bi_descent_qp(p), std::invalid_argument);
  p.equalities = Eigen::MatrixXd(2, 3);
  p.equalities << 1, 0, 0, 2, 0, 0;
  CHECK_THROWS_AS(solve_bi_descent_qp(p), std::invalid_argument);
  p.equalities = Eigen::MatrixXd::Identity(4, 3);
  CHECK_THROWS_AS(solve_bi_descent_qp(p), std::invalid_argument);
}

TEST_CASE("random instances agree with the dual projected-gradient oracle") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> count(2, 5), dim(2, 60);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = count(rng), d = dim(rng);
    const int m = trial % 2 == 0 ? 0 : std::uniform_int_distribution<int>(1, std::max(1, d / 4))(rng);
    QpProblem p;
    p.gradients = Eigen::MatrixXd::NullaryExpr(n, d, [&] { return normal(rng); });
    p.equalities = Eigen::MatrixXd::NullaryExpr(m, d, [&] { return normal(rng); });
    const auto s = solve_bi_descent_qp(p);
    const auto oracle = testing::dual_projected_gradient(p.gradients, p.equalities);
    CAPTURE(trial);
    CHECK(s.kkt_residual <= 1e-9);
    CHECK(s.rho <= 0.0);
    CHECK((p.gradients * s.w).maxCoeff() <= s.rho + 1e-9);
    CHECK(std::abs(objective(s) - oracle.value) <= 1e-8 * std::max(1.0, std::abs(oracle.value)));
    if (m > 0) CHECK((p.equalities * s.w).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("zero lies in the hull exactly when w vanishes") {
  // Three gradients surrounding the origin in the plane.
  const auto s = solve_bi_descent_qp(rows({{1, 0}, {-0.5, 0.8}, {-0.5, -0.8}}));
  CHECK(s.w.norm() <= 1e-12);
  const auto t = solve_bi_descent_qp(rows({{1, 0.2}, {0.9, 0.8}, {1.2, -0.4}}));
  CHECK(t.w.norm() > 0.1);
  CHECK(t.rho < 0.0);
}
