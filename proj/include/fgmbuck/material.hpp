#pragma once

// Through-thickness properties of a ceramic/metal functionally graded plate:
// power-law volume fraction, Mori-Tanaka moduli, steady one-dimensional
// temperature, and the thickness-integrated plate stiffnesses.

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "fgmbuck/errors.hpp"
#include "fgmbuck/quadrature.hpp"

namespace fgmbuck {

struct PhaseProperties {
  double youngs_modulus = 0.0;     // Pa
  double poisson_ratio = 0.0;
  double thermal_expansion = 0.0;  // 1/degC
  double conductivity = 0.0;       // W/(m K)
  double density = 0.0;            // kg/m^3, carried but unused by buckling

  double bulk_modulus() const { return youngs_modulus / (3.0 * (1.0 - 2.0 * poisson_ratio)); }
  double shear_modulus() const { return youngs_modulus / (2.0 * (1.0 + poisson_ratio)); }

  void validate(const std::string& name) const {
    auto fail = [&](const std::string& field) {
      throw DomainError("material", name + "." + field + " is out of range");
    };
    if (!(youngs_modulus > 0.0)) fail("youngs_modulus");
    if (!(poisson_ratio > 0.0 && poisson_ratio < 0.5)) fail("poisson_ratio");
    if (!(thermal_expansion > 0.0)) fail("thermal_expansion");
    if (!(conductivity > 0.0)) fail("conductivity");
    if (!(density > 0.0)) fail("density");
  }
};

/// Zirconia, the ceramic phase of the built-in "Al/ZrO2" pair.
inline PhaseProperties zirconia() { return {151e9, 0.3, 10e-6, 2.09, 5700.0}; }

/// Alumina, the ceramic phase of the built-in "Al/Al2O3" pair.
inline PhaseProperties alumina() { return {380e9, 0.3, 7.4e-6, 10.4, 3800.0}; }

/// Aluminium, the metal phase of both built-in pairs.
inline PhaseProperties aluminium() { return {70e9, 0.3, 23e-6, 204.0, 2707.0}; }

/// Ceramic sits at z = +h/2, metal at z = -h/2.
struct FgmDefinition {
  PhaseProperties ceramic = zirconia();
  PhaseProperties metal = aluminium();
  double gradient_index = 0.0;
  double thickness = 0.01;

  void validate() const {
    ceramic.validate("ceramic");
    metal.validate("metal");
    if (!(gradient_index >= 0.0)) throw DomainError("material", "gradient_index must be >= 0");
    if (!(thickness > 0.0)) throw DomainError("material", "thickness must be > 0");
  }

  /// Flexural rigidity of a homogeneous plate made of one phase.
  double rigidity(const PhaseProperties& p) const {
    const double nu = p.poisson_ratio;
    return p.youngs_modulus * thickness * thickness * thickness / (12.0 * (1.0 - nu * nu));
  }
  double ceramic_rigidity() const { return rigidity(ceramic); }
  double metal_rigidity() const { return rigidity(metal); }
};

struct EffectivePointProperties {
  double bulk_modulus;
  double shear_modulus;
  double youngs_modulus;
  double poisson_ratio;
  double thermal_expansion;
  double conductivity;
  double density;
};

enum class ProfileKind { linear, nonlinear };

struct TemperatureProfile {
  double metal_surface_temp = 5.0;    // T_m at z = -h/2
  double ceramic_surface_temp = 5.0;  // T_c at z = +h/2
  double reference_temp = 0.0;        // stress-free temperature
  ProfileKind kind = ProfileKind::nonlinear;
};

struct ConstitutiveSet {
  Eigen::Matrix3d extensional = Eigen::Matrix3d::Zero();  // A
  Eigen::Matrix3d coupling = Eigen::Matrix3d::Zero();     // B
  Eigen::Matrix3d bending = Eigen::Matrix3d::Zero();      // D_b
  Eigen::Matrix2d shear = Eigen::Matrix2d::Zero();        // E_s

  ConstitutiveSet scaled(double s) const {
    return {extensional * s, coupling * s, bending * s, shear * s};
  }
};

struct ThermalResultants {
  Eigen::Vector3d membrane = Eigen::Vector3d::Zero();  // N_th
  Eigen::Vector3d moment = Eigen::Vector3d::Zero();    // M_th
};

/// Transverse shear coefficients; the products upsilon_i * upsilon_j scale E_s.
struct ShearCorrection {
  double upsilon_x = std::sqrt(5.0 / 6.0);
  double upsilon_y = std::sqrt(5.0 / 6.0);

  static ShearCorrection from_factor(double k) { return {std::sqrt(k), std::sqrt(k)}; }
};

struct ThicknessRule {
  int points = 20;
};

namespace detail {

inline double checked_thickness_coordinate(double z, double h) {
  const double tol = 1e-12 * h;
  if (z < -0.5 * h - tol || z > 0.5 * h + tol) {
    throw DomainError("material", "z = " + std::to_string(z) + " lies outside [-h/2, h/2]");
  }
  return std::clamp(z, -0.5 * h, 0.5 * h);
}

inline void check_fraction(double vc) {
  if (!(vc >= 0.0 && vc <= 1.0)) throw DomainError("material", "volume fraction outside [0, 1]");
}

}  // namespace detail

inline double volume_fraction(double z, const FgmDefinition& fgm) {
  const double h = fgm.thickness;
  z = detail::checked_thickness_coordinate(z, h);
  const double ratio = (2.0 * z + h) / (2.0 * h);
  return std::pow(ratio, fgm.gradient_index);  // pow(0, 0) == 1: n = 0 is all ceramic
}

struct Moduli {
  double bulk;
  double shear;
};

/// Mori-Tanaka estimate of the bulk and shear moduli at ceramic fraction vc.
inline Moduli mori_tanaka_moduli(double vc, const PhaseProperties& ceramic, const PhaseProperties& metal) {
  detail::check_fraction(vc);
  const double kc = ceramic.bulk_modulus(), km = metal.bulk_modulus();
  const double gc = ceramic.shear_modulus(), gm = metal.shear_modulus();
  const double f1 = gm * (9.0 * km + 8.0 * gm) / (6.0 * (km + 2.0 * gm));
  const double vm = 1.0 - vc;
  const double bulk = km + (kc - km) * vc / (1.0 + vm * 3.0 * (kc - km) / (3.0 * km + 4.0 * gm));
  const double shear = gm + (gc - gm) * vc / (1.0 + vm * (gc - gm) / (gm + f1));
  return {bulk, shear};
}

struct ElasticPair {
  double youngs_modulus;
  double poisson_ratio;
};

inline ElasticPair effective_elastic(double bulk, double shear) {
  if (!(bulk > 0.0) || !(shear > 0.0)) throw DomainError("material", "moduli must be positive");
  return {9.0 * bulk * shear / (3.0 * bulk + shear), (3.0 * bulk - 2.0 * shear) / (2.0 * (3.0 * bulk + shear))};
}

struct ThermalPair {
  double conductivity;
  double thermal_expansion;
};

inline ThermalPair effective_thermal(double vc, const PhaseProperties& ceramic, const PhaseProperties& metal,
                                     double bulk_eff) {
  detail::check_fraction(vc);
  if (!(bulk_eff > 0.0)) throw DomainError("material", "effective bulk modulus must be positive");
  const double kc = ceramic.conductivity, km = metal.conductivity;
  const double kappa = km + (kc - km) * vc / (1.0 + (1.0 - vc) * (kc - km) / (3.0 * km));

  const double bc = ceramic.bulk_modulus(), bm = metal.bulk_modulus();
  double alpha;
  if (std::abs(1.0 / bc - 1.0 / bm) < 1e-300) {
    // Equal bulk moduli leave the compliance ratio undefined; fall back to mixing.
    alpha = metal.thermal_expansion + vc * (ceramic.thermal_expansion - metal.thermal_expansion);
  } else {
    const double ratio = (1.0 / bulk_eff - 1.0 / bm) / (1.0 / bc - 1.0 / bm);
    alpha = metal.thermal_expansion + (ceramic.thermal_expansion - metal.thermal_expansion) * ratio;
  }
  return {kappa, alpha};
}

inline EffectivePointProperties effective_properties(double z, const FgmDefinition& fgm) {
  const double vc = volume_fraction(z, fgm);
  const Moduli m = mori_tanaka_moduli(vc, fgm.ceramic, fgm.metal);
  const ElasticPair e = effective_elastic(m.bulk, m.shear);
  const ThermalPair t = effective_thermal(vc, fgm.ceramic, fgm.metal, m.bulk);
  const double rho = vc * fgm.ceramic.density + (1.0 - vc) * fgm.metal.density;
  return {m.bulk, m.shear, e.youngs_modulus, e.poisson_ratio, t.thermal_expansion, t.conductivity, rho};
}

/// Normalised through-thickness temperature shape, 0 at the metal surface and
/// 1 at the ceramic surface.
inline double temperature_shape(double z, ProfileKind kind, const FgmDefinition& fgm) {
  const double h = fgm.thickness;
  z = detail::checked_thickness_coordinate(z, h);
  const double x = (2.0 * z + h) / (2.0 * h);
  if (kind == ProfileKind::linear) return x;

  const double n = fgm.gradient_index;
  const double r = (fgm.ceramic.conductivity - fgm.metal.conductivity) / fgm.metal.conductivity;
  // Six-term series solution of d/dz(kappa dT/dz) = 0.
  double series = 0.0, norm = 0.0, rk = 1.0;
  for (int k = 0; k < 6; ++k) {
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    const double p = k * n + 1.0;
    series += sign * rk / p * std::pow(x, p);
    norm += sign * rk / p;
    rk *= r;
  }
  return series / norm;
}

inline double temperature_at(double z, const TemperatureProfile& profile, const FgmDefinition& fgm) {
  const double eta = temperature_shape(z, profile.kind, fgm);
  return profile.metal_surface_temp + (profile.ceramic_surface_temp - profile.metal_surface_temp) * eta;
}

/// Reduced plane-stress stiffness Qbar(z) in Voigt order (11, 22, 12).
inline Eigen::Matrix3d plane_stiffness(double youngs_modulus, double poisson_ratio) {
  const double q = youngs_modulus / (1.0 - poisson_ratio * poisson_ratio);
  Eigen::Matrix3d qbar;
  qbar << q, poisson_ratio * q, 0.0,
          poisson_ratio * q, q, 0.0,
          0.0, 0.0, youngs_modulus / (2.0 * (1.0 + poisson_ratio));
  return qbar;
}

inline ConstitutiveSet integrate_constitutive(const FgmDefinition& fgm, const ShearCorrection& correction = {},
                                              const ThicknessRule& rule = {}) {
  const Rule1D gl = gauss_legendre(rule.points);
  const double h = fgm.thickness;
  ConstitutiveSet set;
  double shear_integral = 0.0;
  for (std::size_t i = 0; i < gl.points.size(); ++i) {
    const double z = 0.5 * h * gl.points[i];
    const double w = 0.5 * h * gl.weights[i];
    const EffectivePointProperties p = effective_properties(z, fgm);
    const Eigen::Matrix3d q = plane_stiffness(p.youngs_modulus, p.poisson_ratio);
    set.extensional += w * q;
    set.coupling += (w * z) * q;
    set.bending += (w * z * z) * q;
    shear_integral += w * p.youngs_modulus / (2.0 * (1.0 + p.poisson_ratio));
  }
  set.shear(0, 0) = shear_integral * correction.upsilon_x * correction.upsilon_x;
  set.shear(1, 1) = shear_integral * correction.upsilon_y * correction.upsilon_y;
  return set;
}

inline ThermalResultants thermal_resultants(const FgmDefinition& fgm, const TemperatureProfile& profile,
                                            const ThicknessRule& rule = {}) {
  const Rule1D gl = gauss_legendre(rule.points);
  const double h = fgm.thickness;
  ThermalResultants out;
  for (std::size_t i = 0; i < gl.points.size(); ++i) {
    const double z = 0.5 * h * gl.points[i];
    const double w = 0.5 * h * gl.weights[i];
    const EffectivePointProperties p = effective_properties(z, fgm);
    const double dt = temperature_at(z, profile, fgm) - profile.reference_temp;
    const Eigen::Vector3d load = plane_stiffness(p.youngs_modulus, p.poisson_ratio) * Eigen::Vector3d(1.0, 1.0, 0.0);
    out.membrane += (w * p.thermal_expansion * dt) * load;
    out.moment += (w * z * p.thermal_expansion * dt) * load;
  }
  return out;
}

}  // namespace fgmbuck
