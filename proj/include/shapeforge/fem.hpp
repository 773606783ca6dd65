#pragma once

#include "shapeforge/material.hpp"
#include "shapeforge/mesh.hpp"

#include <Eigen/Sparse>

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace shapeforge {

/// Gradients of the three P1 basis functions (columns) on triangle (a, b, c).
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 3> p1_gradients(const Eigen::Matrix<Scalar, 2, 1>& a, const Eigen::Matrix<Scalar, 2, 1>& b,
                                          const Eigen::Matrix<Scalar, 2, 1>& c) {
  const Scalar twice_area = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
  Eigen::Matrix<Scalar, 2, 3> g;
  g << b.y() - c.y(), c.y() - a.y(), a.y() - b.y(),  //
      c.x() - b.x(), a.x() - c.x(), b.x() - a.x();
  return g / twice_area;
}

/// Points in barycentric coordinates, weights summing to the reference area 1/2.
struct QuadratureRule {
  std::vector<Eigen::Vector3d> points;
  std::vector<double> weights;
  int degree = 0;

  static const QuadratureRule& degree2();
  static const QuadratureRule& degree4();
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, std::vector<double> residuals)
      : std::runtime_error(what), residuals_(std::move(residuals)) {}
  const std::vector<double>& residuals() const { return residuals_; }

 private:
  std::vector<double> residuals_;
};

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Nodal Dirichlet constraints.
struct Dirichlet {
  std::vector<int> nodes;
  Eigen::VectorXd values;  ///< empty means homogeneous

  static Dirichlet homogeneous(std::vector<int> nodes) { return {std::move(nodes), {}}; }
};

/// Symmetric system with Dirichlet rows/columns replaced by identity.
struct SparseSystem {
  SparseMatrix matrix;
  Eigen::VectorXd rhs;
  std::vector<char> fixed;
  Eigen::VectorXd fixed_values;

  int size() const { return static_cast<int>(rhs.size()); }
};

/// Symmetric elimination of the constraints in place.
void apply_dirichlet(SparseMatrix& matrix, Eigen::VectorXd& rhs, const Dirichlet& dirichlet, SparseSystem& out);

/// Nodes of all boundary edges whose marker is in `markers` (all markers if empty).
std::vector<int> boundary_nodes(const Mesh& mesh, const std::set<int>& markers = {});

using TensorCoefficient = std::function<Mat2(int triangle, const Vec2& x)>;
using ScalarSource = std::function<double(int triangle, const Vec2& x)>;

/// Galerkin P1 system for -div(K grad v) = f. K is sampled with the degree-2
/// rule, f with the degree-4 rule. Throws SolverError naming the triangle when
/// K is not symmetric positive definite at a quadrature point.
SparseSystem assemble_scalar_elliptic(const Mesh& mesh, const TensorCoefficient& coefficient,
                                      const ScalarSource& source, const Dirichlet& dirichlet);

enum class LinearSolverKind { Cg, Direct };

struct LinearSolverOptions {
  LinearSolverKind kind = LinearSolverKind::Direct;
  double rtol = 1e-10;
  int max_iterations = 0;  ///< 0 selects 20 sqrt(n)
};

ScalarField solve_spd(const SparseSystem& system, const LinearSolverOptions& options = {});
/// Dense LU reference solve, used for small systems in verification code.
ScalarField solve_dense(const SparseSystem& system);

struct NewtonOptions {
  double tol = 1e-10;  ///< relative residual ||R(u)|| / ||f||
  int max_iterations = 30;
  LinearSolverOptions linear;
};

struct NewtonResult {
  ScalarField u;
  std::vector<double> residuals;  ///< relative residual before each step and at exit
  int iterations = 0;
};

/// Nonlinear state problem -div(nu(x, |grad u|) grad u) = J, u = 0 on the
/// outer boundary, solved with Newton steps on the A_Omega(u) Jacobian and a
/// residual-halving line search.
NewtonResult newton_solve(const Mesh& mesh, const RegionMap& regions, const Reluctivity& material,
                          const CurrentExcitation& excitation, const ScalarField& initial,
                          const NewtonOptions& options = {});

/// Nonlinear residual R(u) = a(u; v_i) - f(v_i) over all nodes (constraints not applied).
Eigen::VectorXd nonlinear_residual(const Mesh& mesh, const RegionMap& regions, const Reluctivity& material,
                                   const CurrentExcitation& excitation, const ScalarField& u);

/// Load vector of the impressed currents.
Eigen::VectorXd current_load(const Mesh& mesh, const CurrentExcitation& excitation);

/// Assembled A_Omega(u) stiffness matrix (no constraints).
SparseMatrix jacobian_matrix(const Mesh& mesh, const RegionMap& regions, const Reluctivity& material,
                             const ScalarField& u);

/// Piecewise-constant gradient of a P1 field on triangle t.
Vec2 gradient(const Mesh& mesh, const ScalarField& u, int t);

}  // namespace shapeforge
