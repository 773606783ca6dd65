#pragma once

#include <Eigen/Core>

namespace shapeforge {

/// min_{rho, w} rho + 1/2 |w|^2  s.t.  g_i . w <= rho  for every row g_i of
/// `gradients`, and `equalities` * w = 0.
struct QpProblem {
  Eigen::MatrixXd gradients;   ///< N x d
  Eigen::MatrixXd equalities;  ///< m x d, possibly empty
};

struct QpSolution {
  double rho = 0.0;
  Eigen::VectorXd w;
  Eigen::VectorXd lambda;     ///< dual weights on the simplex
  double kkt_residual = 0.0;  ///< max of stationarity, feasibility and complementarity violations
};

/// Solves the multiple-gradient descent QP through its dual, the minimum-norm
/// point of the convex hull of the projected gradients. Two objectives use the
/// closed form; more use Wolfe's algorithm. Throws std::invalid_argument on
/// empty input or rank-deficient equality rows.
QpSolution solve_bi_descent_qp(const QpProblem& problem);

}  // namespace shapeforge
