#include "shapeforge/physics.hpp"
#include "support.hpp"

#include <doctest.h>

#include <numbers>

using namespace shapeforge;
using std::numbers::pi;

TEST_CASE("dq torque peaks at a current angle of 45 degrees") {
  DqParameters p{2, 0.12, 0.03, 10.0, 0.0};
  const int steps = 3600;
  double best = -1.0, best_beta = 0.0;
  for (int k = 0; k <= steps; ++k) {
    const double beta = 0.5 * pi * k / steps;
    const double t = torque_dq_inductance(p.pole_pairs, p.l_d, p.l_q, p.i_s, beta);
    if (t > best) best = t, best_beta = beta;
  }
  CHECK(std::abs(best_beta - pi / 4) <= 0.5 * pi / steps);
}

TEST_CASE("flux-linkage and inductance torque agree under lambda = L i") {
  for (double beta : {0.1, 0.5, pi / 4, 1.2, 2.0}) {
    for (int np : {1, 2, 4}) {
      DqParameters p{np, 0.087, 0.021, 7.5, beta};
      const double flux = torque_dq_flux(np, p.lambda_d(), p.lambda_q(), p.i_d(), p.i_q());
      const double ind = torque_dq_inductance(np, p.l_d, p.l_q, p.i_s, beta);
      CHECK(std::abs(flux - ind) <= 1e-12 * std::max(1.0, std::abs(ind)));
    }
  }
}

TEST_CASE("dq helpers work with other scalar types") {
  const float t = torque_dq_flux<float>(1, 0.5f, 0.1f, 1.0f, 2.0f);
  CHECK(t == doctest::Approx(1.5f * (0.5f * 2.0f - 0.1f * 1.0f)));
}

namespace {

struct AnnulusCase {
  Mesh mesh = testing::grid_mesh(24, 24, -1, 1, -1, 1);
  RegionMap regions;
  TorqueFunctional tf;

  AnnulusCase() {
    regions.air = {1};
    tf = TorqueFunctional::over_annulus(mesh, regions, 0.35, 0.7, 0.1);
  }
};

}  // namespace

TEST_CASE("torque annulus selection is validated") {
  AnnulusCase c;
  CHECK(c.tf.triangles.size() > 100);
  CHECK_THROWS_AS(TorqueFunctional::over_annulus(c.mesh, c.regions, 0.7, 0.3, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(TorqueFunctional::over_annulus(c.mesh, c.regions, 5.0, 6.0, 0.1), std::invalid_argument);
  RegionMap rotor = c.regions;
  rotor.rotor = {1};
  CHECK_THROWS_AS(TorqueFunctional::over_annulus(c.mesh, rotor, 0.35, 0.7, 0.1), std::invalid_argument);
}

TEST_CASE("torque is quadratic in u and its gradient is exact") {
  AnnulusCase c;
  const ScalarField u(Eigen::VectorXd::NullaryExpr(c.mesh.num_nodes(), [&](Eigen::Index i) {
    const Vec2 x = c.mesh.node(static_cast<int>(i));
    return 0.01 * (x.x() * x.y() + 0.3 * x.x() * x.x() - 0.2 * std::sin(3 * x.y()));
  }));
  const double t = torque_fem(c.mesh, u, c.tf);
  CHECK(torque_fem(c.mesh, ScalarField(-u.values), c.tf) == doctest::Approx(t).epsilon(1e-14));
  CHECK(torque_fem(c.mesh, ScalarField(2.0 * u.values), c.tf) == doctest::Approx(4.0 * t).epsilon(1e-14));

  const Eigen::VectorXd g = torque_du(c.mesh, u, c.tf);
  const Eigen::VectorXd dir = Eigen::VectorXd::NullaryExpr(c.mesh.num_nodes(), [](Eigen::Index i) {
    return std::cos(0.37 * static_cast<double>(i));
  });
  // Central differences are exact for a quadratic up to rounding.
  const double h = 1e-3;
  const double fd = (torque_fem(c.mesh, ScalarField(u.values + h * dir), c.tf) -
                     torque_fem(c.mesh, ScalarField(u.values - h * dir), c.tf)) /
                    (2 * h);
  CHECK(g.dot(dir) == doctest::Approx(fd).epsilon(1e-9));
}

TEST_CASE("adjoint gives the derivative of torque with respect to the excitation amplitude") {
  const Mesh m = testing::grid_mesh(24, 24, -1, 1, -1, 1, [](const Vec2& c) {
    const double r = c.norm();
    if (r < 0.3) return std::abs(c.x() - c.y()) < 0.2 ? 2 : 1;  // iron bar, skewed rotor
    if (r > 0.75 && r < 0.95 && c.y() > 0.0) return 3;         // coil
    if (r > 0.75 && r < 0.95 && c.y() <= 0.0) return 4;        // return coil
    return 1;
  });
  RegionMap regions;
  regions.air = {1};
  regions.iron = {2};
  regions.coil = {{3, 1.0}, {4, -1.0}};
  const auto tf = TorqueFunctional::over_annulus(m, regions, 0.4, 0.7, 0.1);
  CurrentExcitation j;
  j.density = {{3, 2e6}, {4, -2e6}};
  const auto nu = Reluctivity::brauer_default();
  NewtonOptions tight;
  tight.tol = 1e-13;

  const auto torque_at = [&](double s) {
    return torque_fem(m, newton_solve(m, regions, nu, j.scaled(s), ScalarField::zero(m), tight).u, tf);
  };
  for (double s : {0.5, 1.0, 1.5}) {
    const auto state = newton_solve(m, regions, nu, j.scaled(s), ScalarField::zero(m), tight);
    const auto p = solve_adjoint(m, regions, nu, state.u, tf);
    // dT/ds = dT/du . du/ds with A(u) du/ds = f, so dT/ds = p . f.
    const double adjoint = p.values.dot(current_load(m, j));
    const double h = 1e-4 * s;
    const double fd = (torque_at(s + h) - torque_at(s - h)) / (2 * h);
    CAPTURE(s);
    CHECK(adjoint == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("volume counts rotor iron only") {
  const Mesh m = testing::grid_mesh(10, 10, 0, 1, 0, 1, [](const Vec2& c) {
    if (c.x() < 0.3) return 1;  // rotor iron
    if (c.x() < 0.5) return 2;  // rotor air
    return 3;                   // fixed iron
  });
  RegionMap regions;
  regions.iron = {1, 3};
  regions.air = {2};
  regions.rotor = {1, 2};
  CHECK(volume(m, regions) == doctest::Approx(0.3).epsilon(1e-14));
}
