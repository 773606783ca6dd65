#pragma once

#include "shapeforge/mesh.hpp"

#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <variant>

namespace shapeforge {

inline constexpr double kMu0 = 4.0e-7 * std::numbers::pi;
inline constexpr double kNu0 = 1.0 / kMu0;

/// Constant iron reluctivity.
template <typename Scalar>
struct LinearLaw {
  Scalar nu;

  Scalar value(Scalar) const { return nu; }
  Scalar derivative(Scalar) const { return Scalar(0); }
  Scalar derivative_over_s(Scalar) const { return Scalar(0); }
};

/// nu(s) = k1 exp(k2 s^2) + k3 with s = |B| in tesla.
template <typename Scalar>
struct BrauerLaw {
  Scalar k1;
  Scalar k2;
  Scalar k3;

  Scalar value(Scalar s) const {
    using std::exp;
    return k1 * exp(k2 * s * s) + k3;
  }
  Scalar derivative(Scalar s) const { return derivative_over_s(s) * s; }
  // Finite at s = 0; callers never divide by |grad u| themselves.
  Scalar derivative_over_s(Scalar s) const {
    using std::exp;
    return Scalar(2) * k1 * k2 * exp(k2 * s * s);
  }
};

/// Piecewise reluctivity: nu0 outside iron, a field-dependent law inside.
class Reluctivity {
 public:
  using Law = std::variant<LinearLaw<double>, BrauerLaw<double>>;

  static Reluctivity linear(double nu_iron) { return Reluctivity(LinearLaw<double>{nu_iron}); }
  static Reluctivity brauer(double k1, double k2, double k3) { return Reluctivity(BrauerLaw<double>{k1, k2, k3}); }
  /// Default electrical steel curve.
  static Reluctivity brauer_default() { return brauer(49.4, 1.46, 520.6); }

  double air() const { return kNu0; }
  double iron(double s) const {
    return std::visit([s](const auto& law) { return law.value(s); }, law_);
  }
  double iron_derivative(double s) const {
    return std::visit([s](const auto& law) { return law.derivative(s); }, law_);
  }
  double iron_derivative_over_s(double s) const {
    return std::visit([s](const auto& law) { return law.derivative_over_s(s); }, law_);
  }
  bool is_linear() const { return std::holds_alternative<LinearLaw<double>>(law_); }
  const Law& law() const { return law_; }

  /// nu_Omega(x, s) and its d/ds divided by s for a triangle of the given class.
  double value(bool iron_region, double s) const { return iron_region ? iron(s) : air(); }
  double derivative_over_s(bool iron_region, double s) const {
    return iron_region ? iron_derivative_over_s(s) : 0.0;
  }

  /// A(g) = nu(|g|) I + (nu'(|g|)/|g|) g g^T, the linearization of g -> nu(|g|) g.
  Mat2 jacobian_tensor(bool iron_region, const Vec2& grad) const {
    const double s = grad.norm();
    return value(iron_region, s) * Mat2::Identity() + derivative_over_s(iron_region, s) * grad * grad.transpose();
  }

  /// Throws std::domain_error unless 0 < nu(s) <= nu0 and s -> nu(s) s is
  /// strictly increasing on a uniform grid over [0, s_max].
  void check_admissible(double s_max, int samples = 10000) const;

 private:
  explicit Reluctivity(Law law) : law_(law) {}
  Law law_;
};

/// Impressed current density per coil region (A/m^2).
struct CurrentExcitation {
  std::map<int, double> density;

  double at(int region) const {
    auto it = density.find(region);
    return it == density.end() ? 0.0 : it->second;
  }
  CurrentExcitation scaled(double factor) const {
    CurrentExcitation out = *this;
    for (auto& [id, j] : out.density) j *= factor;
    return out;
  }
};

/// J = sign * turns * I_phase / area for every coil region. `phase_of` maps
/// coil region ids to 0, 1, 2 (U, V, W); signs come from RegionMap::coil.
CurrentExcitation excitation_from_phases(const Mesh& mesh, const RegionMap& regions, const std::map<int, int>& phase_of,
                                         const std::array<double, 3>& phase_currents, double turns);

}  // namespace shapeforge
