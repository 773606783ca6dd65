#include "shapeforge/qp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace shapeforge {

namespace {

// Minimum-norm point of the affine hull of the points in `support`, given
// their Gram matrix H; returns the affine weights.
Eigen::VectorXd affine_min_norm(const Eigen::MatrixXd& h, const std::vector<int>& support) {
  const int k = static_cast<int>(support.size());
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(k + 1, k + 1);
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) kkt(a, b) = h(support[a], support[b]);
    kkt(a, k) = kkt(k, a) = 1.0;
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
  rhs[k] = 1.0;
  return kkt.completeOrthogonalDecomposition().solve(rhs).head(k);
}

// Wolfe's algorithm on the Gram matrix of the points.
Eigen::VectorXd wolfe_min_norm(const Eigen::MatrixXd& h) {
  const int n = static_cast<int>(h.rows());
  const double scale = std::max(h.diagonal().maxCoeff(), 1e-300);
  const double tol = 1e-14 * scale;
  Eigen::Index first = 0;
  h.diagonal().minCoeff(&first);
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(n);
  lambda[first] = 1.0;
  std::vector<int> support{static_cast<int>(first)};

  for (int major = 0; major < 50 * n; ++major) {
    const Eigen::VectorXd hl = h * lambda;
    const double xx = lambda.dot(hl);
    Eigen::Index j = 0;
    hl.minCoeff(&j);
    if (xx - hl[j] <= tol) break;
    if (std::find(support.begin(), support.end(), j) != support.end()) break;
    support.push_back(static_cast<int>(j));

    for (int minor = 0; minor <= n; ++minor) {
      const Eigen::VectorXd alpha = affine_min_norm(h, support);
      if (alpha.minCoeff() > 0.0) {
        for (std::size_t a = 0; a < support.size(); ++a) lambda[support[a]] = alpha[a];
        break;
      }
      double theta = 1.0;
      for (std::size_t a = 0; a < support.size(); ++a) {
        const double l = lambda[support[a]];
        if (alpha[a] <= 0.0 && l - alpha[a] > 0.0) theta = std::min(theta, l / (l - alpha[a]));
      }
      for (std::size_t a = 0; a < support.size(); ++a) {
        lambda[support[a]] += theta * (alpha[a] - lambda[support[a]]);
      }
      std::vector<int> kept;
      for (int i : support) {
        if (lambda[i] > 1e-15) {
          kept.push_back(i);
        } else {
          lambda[i] = 0.0;
        }
      }
      support = std::move(kept);
      if (support.size() <= 1) {
        if (support.empty()) support.push_back(static_cast<int>(j));
        lambda.setZero();
        lambda[support.front()] = 1.0;
        break;
      }
    }
  }
  lambda = lambda.cwiseMax(0.0);
  return lambda / lambda.sum();
}

Eigen::VectorXd two_point_min_norm(const Eigen::MatrixXd& h) {
  const double denom = h(0, 0) - 2.0 * h(0, 1) + h(1, 1);
  double l = 0.5;
  if (denom > 1e-300) l = std::clamp((h(1, 1) - h(0, 1)) / denom, 0.0, 1.0);
  return Eigen::Vector2d(l, 1.0 - l);
}

}  // namespace

QpSolution solve_bi_descent_qp(const QpProblem& problem) {
  const Eigen::MatrixXd& g = problem.gradients;
  const int n = static_cast<int>(g.rows());
  const int d = static_cast<int>(g.cols());
  if (n == 0 || d == 0) throw std::invalid_argument("descent QP needs at least one gradient of positive dimension");
  const Eigen::MatrixXd& a = problem.equalities;
  const int m = static_cast<int>(a.rows());
  if (m > 0 && a.cols() != d) throw std::invalid_argument("equality rows do not match the gradient dimension");
  if (m > d) throw std::invalid_argument("more equality rows than unknowns");

  // Orthonormal basis of the constrained directions; projecting it out leaves
  // the null space of the equalities.
  Eigen::MatrixXd projected = g;
  Eigen::MatrixXd q;
  if (m > 0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a.transpose());
    qr.setThreshold(1e-10);
    if (qr.rank() < m) throw std::invalid_argument("equality rows are rank deficient");
    q = qr.householderQ() * Eigen::MatrixXd::Identity(d, m);
    projected -= (g * q) * q.transpose();
  }

  const Eigen::MatrixXd h = projected * projected.transpose();
  QpSolution s;
  if (n == 1) {
    s.lambda = Eigen::VectorXd::Ones(1);
  } else if (n == 2) {
    s.lambda = two_point_min_norm(h);
  } else {
    s.lambda = wolfe_min_norm(h);
  }
  s.w = -(projected.transpose() * s.lambda);
  const Eigen::VectorXd slopes = g * s.w;
  s.rho = slopes.maxCoeff();

  const double wsq = s.w.squaredNorm();
  double kkt = std::abs(s.rho + wsq);
  kkt = std::max(kkt, std::abs(s.lambda.sum() - 1.0));
  kkt = std::max(kkt, std::max(0.0, -s.lambda.minCoeff()));
  for (int i = 0; i < n; ++i) kkt = std::max(kkt, s.lambda[i] * std::abs(slopes[i] - s.rho));
  if (m > 0) kkt = std::max(kkt, (a * s.w).cwiseAbs().maxCoeff());
  Eigen::VectorXd stationarity = s.w + g.transpose() * s.lambda;
  if (m > 0) stationarity -= q * (q.transpose() * stationarity);
  kkt = std::max(kkt, stationarity.cwiseAbs().maxCoeff());
  s.kkt_residual = kkt;
  return s;
}

}  // namespace shapeforge
