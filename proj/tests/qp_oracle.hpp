#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <functional>
#include <numeric>
#include <vector>

namespace shapeforge::testing {

/// Euclidean projection onto the probability simplex (sort-based).
inline Eigen::VectorXd project_simplex(const Eigen::VectorXd& y) {
  std::vector<double> s(y.data(), y.data() + y.size());
  std::sort(s.begin(), s.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    cum += s[k];
    const double t = (cum - 1.0) / static_cast<double>(k + 1);
    if (s[k] - t > 0.0) theta = t;
  }
  return (y.array() - theta).cwiseMax(0.0);
}

/// Null-space projector I - A^T (A A^T)^-1 A built from an SVD.
inline Eigen::MatrixXd null_projector(const Eigen::MatrixXd& a, int d) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Identity(d, d);
  if (a.rows() == 0) return p;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinV);
  const Eigen::MatrixXd v = svd.matrixV();
  return p - v * v.transpose();
}

struct DualOracle {
  Eigen::VectorXd lambda;
  double value;  ///< optimal value of the primal QP, -1/2 |P G^T lambda|^2
};

/// Accelerated projected gradient on the dual simplex problem
/// min 1/2 |P G^T lambda|^2, run far past what the tolerance needs.
inline DualOracle dual_projected_gradient(const Eigen::MatrixXd& g, const Eigen::MatrixXd& a, int iterations = 20000) {
  const Eigen::MatrixXd pg = g * null_projector(a, static_cast<int>(g.cols()));
  const Eigen::MatrixXd h = pg * pg.transpose();
  const int n = static_cast<int>(g.rows());
  const double lip = std::max(h.eigenvalues().real().maxCoeff(), 1e-300);
  Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / n), y = x;
  double t = 1.0;
  for (int k = 0; k < iterations; ++k) {
    const Eigen::VectorXd next = project_simplex(y - h * y / lip);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = next + (t - 1.0) / t_next * (next - x);
    x = next;
    t = t_next;
  }
  return {x, -0.5 * x.dot(h * x)};
}

}  // namespace shapeforge::testing
