#include "shapeforge/fem.hpp"

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <sstream>

namespace shapeforge {

const QuadratureRule& QuadratureRule::degree2() {
  static const QuadratureRule rule = [] {
    QuadratureRule r;
    r.degree = 2;
    r.points = {{2.0 / 3, 1.0 / 6, 1.0 / 6}, {1.0 / 6, 2.0 / 3, 1.0 / 6}, {1.0 / 6, 1.0 / 6, 2.0 / 3}};
    r.weights = {1.0 / 6, 1.0 / 6, 1.0 / 6};
    return r;
  }();
  return rule;
}

const QuadratureRule& QuadratureRule::degree4() {
  static const QuadratureRule rule = [] {
    QuadratureRule r;
    r.degree = 4;
    const double a = 0.445948490915965, wa = 0.223381589678011;
    const double b = 0.091576213509771, wb = 0.109951743655322;
    r.points = {{a, a, 1 - 2 * a}, {a, 1 - 2 * a, a}, {1 - 2 * a, a, a},
                {b, b, 1 - 2 * b}, {b, 1 - 2 * b, b}, {1 - 2 * b, b, b}};
    r.weights = {wa / 2, wa / 2, wa / 2, wb / 2, wb / 2, wb / 2};
    return r;
  }();
  return rule;
}

namespace {

struct Element {
  std::array<int, 3> v;
  Eigen::Matrix<double, 2, 3> grads;
  double area;
  Vec2 corners[3];

  Element(const Mesh& mesh, int t) : v(mesh.triangle(t)) {
    for (int k = 0; k < 3; ++k) corners[k] = mesh.node(v[k]);
    grads = p1_gradients<double>(corners[0], corners[1], corners[2]);
    area = signed_area<double>(corners[0], corners[1], corners[2]);
  }

  Vec2 at(const Eigen::Vector3d& bary) const {
    return bary[0] * corners[0] + bary[1] * corners[1] + bary[2] * corners[2];
  }
};

void scatter(std::vector<Eigen::Triplet<double>>& triplets, const std::array<int, 3>& v,
             const Eigen::Matrix3d& ke) {
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) triplets.emplace_back(v[i], v[j], ke(i, j));
  }
}

double free_norm(const Eigen::VectorXd& r, const std::vector<char>& fixed) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    if (!fixed[i]) s += r[i] * r[i];
  }
  return std::sqrt(s);
}

}  // namespace

std::vector<int> boundary_nodes(const Mesh& mesh, const std::set<int>& markers) {
  std::set<int> out;
  for (const auto& e : mesh.boundary_edges()) {
    if (markers.empty() || markers.count(e.marker)) {
      out.insert(e.a);
      out.insert(e.b);
    }
  }
  return {out.begin(), out.end()};
}

void apply_dirichlet(SparseMatrix& matrix, Eigen::VectorXd& rhs, const Dirichlet& dirichlet, SparseSystem& out) {
  const int n = static_cast<int>(rhs.size());
  out.fixed.assign(n, 0);
  out.fixed_values = Eigen::VectorXd::Zero(n);
  for (std::size_t k = 0; k < dirichlet.nodes.size(); ++k) {
    const int i = dirichlet.nodes[k];
    out.fixed[i] = 1;
    if (dirichlet.values.size() > 0) out.fixed_values[i] = dirichlet.values[static_cast<Eigen::Index>(k)];
  }
  if (dirichlet.values.size() > 0) rhs -= matrix * out.fixed_values;
  for (int col = 0; col < matrix.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(matrix, col); it; ++it) {
      if (out.fixed[it.row()] || out.fixed[it.col()]) it.valueRef() = (it.row() == it.col()) ? 1.0 : 0.0;
    }
  }
  for (int i = 0; i < n; ++i) {
    if (out.fixed[i]) rhs[i] = out.fixed_values[i];
  }
  out.matrix = std::move(matrix);
  out.rhs = std::move(rhs);
}

SparseSystem assemble_scalar_elliptic(const Mesh& mesh, const TensorCoefficient& coefficient,
                                      const ScalarSource& source, const Dirichlet& dirichlet) {
  const int n = mesh.num_nodes();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(9 * static_cast<std::size_t>(mesh.num_triangles()));
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  const auto& q2 = QuadratureRule::degree2();
  const auto& q4 = QuadratureRule::degree4();
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const Element el(mesh, t);
    Mat2 k_avg = Mat2::Zero();
    for (std::size_t q = 0; q < q2.points.size(); ++q) {
      const Mat2 k = coefficient(t, el.at(q2.points[q]));
      const double sym = std::abs(k(0, 1) - k(1, 0));
      if (!(sym <= 1e-12 * k.norm()) || !(k(0, 0) > 0.0) || !(k.determinant() > 0.0)) {
        std::ostringstream os;
        os << "coefficient is not symmetric positive definite in triangle " << t;
        throw SolverError(os.str(), {});
      }
      k_avg += 2.0 * q2.weights[q] * k;
    }
    scatter(triplets, el.v, el.area * el.grads.transpose() * k_avg * el.grads);
    if (source) {
      for (std::size_t q = 0; q < q4.points.size(); ++q) {
        const double f = source(t, el.at(q4.points[q]));
        for (int i = 0; i < 3; ++i) rhs[el.v[i]] += 2.0 * q4.weights[q] * el.area * f * q4.points[q][i];
      }
    }
  }
  SparseMatrix a(n, n);
  a.setFromTriplets(triplets.begin(), triplets.end());
  SparseSystem sys;
  apply_dirichlet(a, rhs, dirichlet, sys);
  return sys;
}

ScalarField solve_spd(const SparseSystem& system, const LinearSolverOptions& options) {
  const double bnorm = system.rhs.norm();
  if (bnorm == 0.0) return ScalarField(Eigen::VectorXd::Zero(system.size()));
  Eigen::VectorXd x;
  if (options.kind == LinearSolverKind::Cg) {
    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
    const int cap = options.max_iterations > 0
                        ? options.max_iterations
                        : static_cast<int>(std::ceil(20.0 * std::sqrt(static_cast<double>(system.size()))));
    cg.setMaxIterations(cap);
    cg.setTolerance(options.rtol);
    cg.compute(system.matrix);
    x = cg.solve(system.rhs);
    const double rel = (system.matrix * x - system.rhs).norm() / bnorm;
    if (cg.info() != Eigen::Success || !(rel <= options.rtol * 1.0001)) {
      std::ostringstream os;
      os << "conjugate gradients did not converge in " << cg.iterations() << " iterations (relative residual "
         << rel << ")";
      throw SolverError(os.str(), {rel});
    }
  } else {
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(system.matrix);
    if (ldlt.info() != Eigen::Success) throw SolverError("sparse factorization failed (matrix not SPD)", {});
    x = ldlt.solve(system.rhs);
    // The factorization is exact up to rounding; refinement recovers what
    // conditioning loses, and only a clearly broken solve is rejected.
    constexpr double kDirectCheck = 1e-8;
    double rel = (system.matrix * x - system.rhs).norm() / bnorm;
    for (int step = 0; step < 3 && rel > options.rtol; ++step) {
      x += ldlt.solve(system.rhs - system.matrix * x);
      rel = (system.matrix * x - system.rhs).norm() / bnorm;
    }
    if (!(rel <= std::max(options.rtol, kDirectCheck))) {
      std::ostringstream os;
      os << "direct solve residual " << rel << " above tolerance " << std::max(options.rtol, kDirectCheck);
      throw SolverError(os.str(), {rel});
    }
  }
  return ScalarField(std::move(x));
}

ScalarField solve_dense(const SparseSystem& system) {
  const Eigen::MatrixXd dense(system.matrix);
  return ScalarField(dense.partialPivLu().solve(system.rhs));
}

Vec2 gradient(const Mesh& mesh, const ScalarField& u, int t) {
  const auto v = mesh.triangle(t);
  const auto g = p1_gradients<double>(mesh.node(v[0]), mesh.node(v[1]), mesh.node(v[2]));
  return g * Eigen::Vector3d(u.values[v[0]], u.values[v[1]], u.values[v[2]]);
}

Eigen::VectorXd current_load(const Mesh& mesh, const CurrentExcitation& excitation) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(mesh.num_nodes());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double j = excitation.at(mesh.region(t));
    if (j == 0.0) continue;
    const double share = j * mesh.area(t) / 3.0;
    for (int v : mesh.triangle(t)) f[v] += share;
  }
  return f;
}

Eigen::VectorXd nonlinear_residual(const Mesh& mesh, const RegionMap& regions, const Reluctivity& material,
                                   const CurrentExcitation& excitation, const ScalarField& u) {
  Eigen::VectorXd r = -current_load(mesh, excitation);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const Element el(mesh, t);
    const Vec2 g = el.grads * Eigen::Vector3d(u.values[el.v[0]], u.values[el.v[1]], u.values[el.v[2]]);
    const double nu = material.value(regions.is_iron(mesh.region(t)), g.norm());
    const Eigen::Vector3d re = el.area * nu * el.grads.transpose() * g;
    for (int i = 0; i < 3; ++i) r[el.v[i]] += re[i];
  }
  return r;
}

SparseMatrix jacobian_matrix(const Mesh& mesh, const RegionMap& regions, const Reluctivity& material,
                             const ScalarField& u) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(9 * static_cast<std::size_t>(mesh.num_triangles()));
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const Element el(mesh, t);
    const Vec2 g = el.grads * Eigen::Vector3d(u.values[el.v[0]], u.values[el.v[1]], u.values[el.v[2]]);
    const Mat2 a = material.jacobian_tensor(regions.is_iron(mesh.region(t)), g);
    scatter(triplets, el.v, el.area * el.grads.transpose() * a * el.grads);
  }
  SparseMatrix k(mesh.num_nodes(), mesh.num_nodes());
  k.setFromTriplets(triplets.begin(), triplets.end());
  return k;
}

NewtonResult newton_solve(const Mesh& mesh, const RegionMap& regions, const Reluctivity& material,
                          const CurrentExcitation& excitation, const ScalarField& initial,
                          const NewtonOptions& options) {
  if (initial.size() != mesh.num_nodes()) throw SolverError("initial guess has wrong size", {});
  const auto outer = boundary_nodes(mesh);
  std::vector<char> fixed(mesh.num_nodes(), 0);
  for (int i : outer) fixed[i] = 1;

  NewtonResult result;
  result.u = initial;
  for (int i : outer) result.u.values[i] = 0.0;

  const double load = free_norm(current_load(mesh, excitation), fixed);
  const double scale = load > 0.0 ? load : 1.0;
  Eigen::VectorXd r = nonlinear_residual(mesh, regions, material, excitation, result.u);
  double res = free_norm(r, fixed) / scale;
  result.residuals.push_back(res);

  constexpr double kStepFloor = 1.0 / (1 << 20);
  for (int it = 0; it < options.max_iterations; ++it) {
    if (res <= options.tol) {
      result.iterations = it;
      return result;
    }
    SparseMatrix k = jacobian_matrix(mesh, regions, material, result.u);
    Eigen::VectorXd rhs = -r;
    SparseSystem sys;
    apply_dirichlet(k, rhs, Dirichlet::homogeneous(outer), sys);
    const Eigen::VectorXd du = solve_spd(sys, options.linear).values;

    double step = 1.0;
    for (;;) {
      ScalarField trial(result.u.values + step * du);
      Eigen::VectorXd r_trial = nonlinear_residual(mesh, regions, material, excitation, trial);
      const double res_trial = free_norm(r_trial, fixed) / scale;
      if (res_trial < res) {
        result.u = std::move(trial);
        r = std::move(r_trial);
        res = res_trial;
        break;
      }
      step *= 0.5;
      if (step < kStepFloor) {
        result.residuals.push_back(res);
        throw SolverError("Newton line search reached its step floor", result.residuals);
      }
    }
    result.residuals.push_back(res);
  }
  if (res <= options.tol) {
    result.iterations = options.max_iterations;
    return result;
  }
  throw SolverError("Newton iteration limit reached", result.residuals);
}

}  // namespace shapeforge
