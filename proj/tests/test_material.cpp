#include "shapeforge/material.hpp"

#include <doctest.h>

using namespace shapeforge;

TEST_CASE("Brauer law against hand values") {
  const BrauerLaw<double> law{49.4, 1.46, 520.6};
  CHECK(law.value(0.0) == doctest::Approx(570.0));
  CHECK(law.value(1.0) == doctest::Approx(49.4 * std::exp(1.46) + 520.6).epsilon(1e-15));
  // d nu / ds = 2 k1 k2 s exp(k2 s^2)
  CHECK(law.derivative(1.5) == doctest::Approx(2 * 49.4 * 1.46 * 1.5 * std::exp(1.46 * 2.25)).epsilon(1e-15));
  CHECK(law.derivative_over_s(0.0) == doctest::Approx(2 * 49.4 * 1.46));
}

TEST_CASE("Brauer derivative matches central differences") {
  const auto nu = Reluctivity::brauer_default();
  for (double s : {0.1, 0.8, 1.6, 2.2}) {
    const double h = 1e-6;
    const double fd = (nu.iron(s + h) - nu.iron(s - h)) / (2 * h);
    CHECK(nu.iron_derivative(s) == doctest::Approx(fd).epsilon(1e-7));
  }
}

TEST_CASE("admissibility of the reluctivity") {
  CHECK_NOTHROW(Reluctivity::brauer_default().check_admissible(2.5));
  // The default curve crosses nu0 a little above 2.5 T.
  CHECK_THROWS_AS(Reluctivity::brauer_default().check_admissible(3.0), std::domain_error);
  CHECK_NOTHROW(Reluctivity::linear(kNu0 / 1000).check_admissible(3.0));
  CHECK_THROWS_AS(Reluctivity::linear(2 * kNu0).check_admissible(1.0), std::domain_error);
  CHECK_THROWS_AS(Reluctivity::brauer(-100.0, 1.0, 500.0).check_admissible(2.5), std::domain_error);
}

TEST_CASE("air and iron selection") {
  const auto nu = Reluctivity::linear(300.0);
  CHECK(nu.value(false, 1.0) == kNu0);
  CHECK(nu.value(true, 1.0) == 300.0);
  CHECK(nu.is_linear());
  CHECK_FALSE(Reluctivity::brauer_default().is_linear());
  // Linear Jacobian tensor is nu I.
  CHECK((nu.jacobian_tensor(true, Vec2(0.3, 0.4)) - 300.0 * Mat2::Identity()).norm() == 0.0);
}

TEST_CASE("Brauer Jacobian tensor is nu I + nu'/s g g^T") {
  const auto nu = Reluctivity::brauer_default();
  const Vec2 g(1.1, -0.7);
  const double s = g.norm();
  const Mat2 expected = nu.iron(s) * Mat2::Identity() + nu.iron_derivative_over_s(s) * g * g.transpose();
  CHECK((nu.jacobian_tensor(true, g) - expected).norm() <= 1e-12 * expected.norm());
}

TEST_CASE("scaled excitation") {
  CurrentExcitation j;
  j.density = {{101, 2.0}, {102, -3.0}};
  const auto k = j.scaled(0.5);
  CHECK(k.at(101) == 1.0);
  CHECK(k.at(102) == -1.5);
  CHECK(k.at(7) == 0.0);
}
