#pragma once

// Load cases end to end: mesh, classify, integrate, assemble, constrain,
// solve, normalise. Also the Cartesian parameter sweep.

#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "fgmbuck/assembly.hpp"
#include "fgmbuck/buckling.hpp"
#include "fgmbuck/element.hpp"
#include "fgmbuck/errors.hpp"
#include "fgmbuck/geometry.hpp"
#include "fgmbuck/material.hpp"

namespace fgmbuck {

enum class LoadKind { uniaxial, biaxial, thermal };

inline const char* to_string(LoadKind k) {
  switch (k) {
    case LoadKind::uniaxial: return "uniaxial";
    case LoadKind::biaxial: return "biaxial";
    case LoadKind::thermal: return "thermal";
  }
  return "?";
}

struct LoadCase {
  LoadKind kind = LoadKind::uniaxial;
  ProfileKind profile = ProfileKind::nonlinear;  // thermal only
  double metal_surface_temp = 5.0;
  double reference_temp = 0.0;
  bool strict_thermal_form = false;  // drop the constant part from the left-hand side

  /// Unit reference resultant (N_xx, N_yy, N_xy) for mechanical loads.
  Resultant reference() const {
    return kind == LoadKind::biaxial ? Resultant(-1.0, -1.0, 0.0) : Resultant(-1.0, 0.0, 0.0);
  }
};

/// Phase whose homogeneous-plate rigidity divides the raw load factor.
enum class NormalizationRigidity { ceramic, metal };

using DefectSpec = std::variant<CrackSpec, CircleCutout, EllipseCutout>;

struct ProblemConfig {
  PlateGeometry plate;
  PhaseProperties ceramic = zirconia();
  PhaseProperties metal = aluminium();
  double gradient_index = 0.0;
  double shear_correction = 5.0 / 6.0;
  int nx = 40;
  int ny = 40;
  std::vector<DefectSpec> defects;  // ids count separately for cracks and cutouts
  BoundaryCondition boundary = BoundaryCondition::SSSS;
  LoadCase load;
  NormalizationRigidity normalization = NormalizationRigidity::ceramic;
  int thickness_points = 20;
  SolverOptions solver;

  FgmDefinition fgm() const { return {ceramic, metal, gradient_index, plate.h}; }

  DefectSet defect_set() const {
    DefectSet set;
    for (const DefectSpec& d : defects) {
      if (const auto* c = std::get_if<CrackSpec>(&d)) {
        set.cracks.push_back(*c);
      } else if (const auto* o = std::get_if<CircleCutout>(&d)) {
        set.cutouts.emplace_back(*o);
      } else {
        set.cutouts.emplace_back(std::get<EllipseCutout>(d));
      }
    }
    return set;
  }
};

struct MeshStatistics {
  int nx = 0, ny = 0;
  int elements = 0;
  int nodes = 0;
  std::vector<std::pair<ElementClass, int>> class_counts;
  int heaviside_nodes = 0;
  int tip_nodes = 0;
  int inactive_nodes = 0;
  int total_dofs = 0;
  int free_dofs = 0;
  int dropped_triangles = 0;
  bool perturbed = false;
};

struct AnalysisResult {
  std::string quantity;  // lambda_uni, lambda_bi or dT_cr
  double raw = 0.0;
  double normalized = 0.0;
  double residual = 0.0;
  MeshStatistics stats;
  std::vector<double> nodal_w;  // standard w component of the mode per node
};

/// Everything produced before the eigensolve. Exposed for tests and the
/// mesh dump.
struct Model {
  StructuredMesh mesh;
  EnrichmentMap map;
  ConstitutiveSet constitutive;
  GlobalSystem system;
  ReducedSystem reduced;
  MeshStatistics stats;
};

inline void validate(const ProblemConfig& cfg) {
  cfg.plate.validate();
  cfg.fgm().validate();
  if (!(cfg.shear_correction > 0.0)) throw DomainError("material", "shear_correction must be > 0");
  if (cfg.thickness_points < 2) throw ConfigError("material", "thickness_points must be >= 2");
  const auto problems = validate_defects(cfg.plate, cfg.defect_set());
  if (!problems.empty()) {
    std::string msg;
    for (const auto& p : problems) msg += (msg.empty() ? "" : "; ") + p;
    throw GeometryError("geometry", msg);
  }
}

inline MeshStatistics collect_statistics(const StructuredMesh& mesh, const EnrichmentMap& map) {
  MeshStatistics s;
  s.nx = mesh.nx;
  s.ny = mesh.ny;
  s.elements = static_cast<int>(mesh.elements.size());
  s.nodes = static_cast<int>(mesh.nodes.size());
  for (ElementClass c : {ElementClass::standard, ElementClass::split, ElementClass::tip, ElementClass::tip_blending,
                         ElementClass::split_blending, ElementClass::split_tip_blending, ElementClass::cut_by_cutout,
                         ElementClass::void_element}) {
    s.class_counts.emplace_back(c, static_cast<int>(map.count(c)));
  }
  s.heaviside_nodes = static_cast<int>(map.heaviside_node_count());
  s.tip_nodes = static_cast<int>(map.tip_node_count());
  s.inactive_nodes = static_cast<int>(map.inactive_node_count());
  s.perturbed = map.perturbed;
  return s;
}

/// Assembles K and the geometric stiffness of `reference`, then eliminates
/// the supports.
inline Model build_model(const ProblemConfig& cfg, const Resultant& reference,
                         ShearInterpolation shear_mode = ShearInterpolation::field_consistent) {
  validate(cfg);
  Model m;
  m.mesh = generate_mesh(cfg.plate, cfg.nx, cfg.ny);
  m.map = classify(m.mesh, cfg.defect_set());
  m.constitutive = integrate_constitutive(cfg.fgm(), ShearCorrection::from_factor(cfg.shear_correction),
                                          ThicknessRule{cfg.thickness_points});
  m.stats = collect_statistics(m.mesh, m.map);

  const DofMap dofs = number_dofs(m.mesh, m.map);
  std::vector<ElementContribution> contributions;
  contributions.reserve(m.mesh.elements.size());
  for (int e = 0; e < static_cast<int>(m.mesh.elements.size()); ++e) {
    const QuadraturePlan plan = build_quadrature(m.mesh, m.map, e);
    m.stats.dropped_triangles += plan.dropped_triangles;
    if (plan.points.empty()) continue;
    ElementContext ctx{m.mesh, m.map.defects, e, element_dofs(m.mesh, m.map, dofs, e)};
    ElementContribution c;
    c.stiffness = element_stiffness(ctx, m.constitutive, plan, shear_mode);
    c.geometric = element_geometric_stiffness(ctx, reference, plan, cfg.plate.h);
    c.dofs.reserve(ctx.dofs.size());
    for (const auto& d : ctx.dofs) c.dofs.push_back(d.global);
    contributions.push_back(std::move(c));
  }
  m.system = assemble(dofs.total, contributions);
  m.system.dofs = dofs;
  m.system.inactive_nodes.resize(m.mesh.nodes.size());
  for (std::size_t n = 0; n < m.mesh.nodes.size(); ++n) m.system.inactive_nodes[n] = m.map.nodes[n].inactive;
  m.reduced = apply_bcs(m.system, cfg.boundary, m.mesh);
  m.stats.total_dofs = dofs.total;
  m.stats.free_dofs = static_cast<int>(m.reduced.free.size());
  return m;
}

inline std::vector<double> nodal_deflection(const Model& m, const Eigen::VectorXd& reduced_mode) {
  const Eigen::VectorXd full = m.reduced.expand(reduced_mode);
  std::vector<double> w(m.mesh.nodes.size());
  for (std::size_t n = 0; n < w.size(); ++n) w[n] = full(m.system.dofs.standard(static_cast<int>(n), Field::w));
  return w;
}

/// b^2 / (pi^2 D): converts a raw in-plane load factor to the reported one.
/// D is the ceramic rigidity unless the config asks for the metal one.
inline double mechanical_normalization(const ProblemConfig& cfg) {
  const FgmDefinition fgm = cfg.fgm();
  const double d = cfg.normalization == NormalizationRigidity::metal ? fgm.metal_rigidity() : fgm.ceramic_rigidity();
  return cfg.plate.b * cfg.plate.b / (std::numbers::pi * std::numbers::pi * d);
}

inline AnalysisResult run_mechanical(const ProblemConfig& cfg) {
  if (cfg.load.kind == LoadKind::thermal) throw ConfigError("analysis", "run_mechanical needs a mechanical load");
  const Model m = build_model(cfg, cfg.load.reference());
  const BucklingSolution s = smallest_positive_factor(m.reduced.stiffness, m.reduced.geometric, cfg.solver);
  AnalysisResult r;
  r.quantity = cfg.load.kind == LoadKind::biaxial ? "lambda_bi" : "lambda_uni";
  r.raw = s.factor;
  r.normalized = s.factor * mechanical_normalization(cfg);
  r.residual = s.residual;
  r.stats = m.stats;
  r.nodal_w = nodal_deflection(m, s.mode);
  return r;
}

/// Membrane resultant of the fully restrained plate for the given profile.
inline double restrained_thermal_resultant(const ProblemConfig& cfg, const TemperatureProfile& profile) {
  const ThermalResultants t = thermal_resultants(cfg.fgm(), profile, ThicknessRule{cfg.thickness_points});
  const double scale = std::max(std::abs(t.membrane(0)), std::abs(t.membrane(1)));
  if (std::abs(t.membrane(2)) > 1e-12 * scale || std::abs(t.membrane(0) - t.membrane(1)) > 1e-12 * scale) {
    throw InternalError("analysis", "thermal membrane resultant is not equibiaxial");
  }
  return t.membrane(0);
}

/// Critical surface temperature difference T_c - T_m. The prebuckling state
/// is N = -N_th; its constant part comes from the uniform rise to T_m and its
/// variable part from a unit difference distributed by the profile shape.
inline AnalysisResult run_thermal(const ProblemConfig& cfg) {
  if (cfg.load.kind != LoadKind::thermal) throw ConfigError("analysis", "run_thermal needs a thermal load");
  TemperatureProfile constant{cfg.load.metal_surface_temp, cfg.load.metal_surface_temp, cfg.load.reference_temp,
                              cfg.load.profile};
  TemperatureProfile variable{0.0, 1.0, 0.0, cfg.load.profile};
  const double n_const = restrained_thermal_resultant(cfg, constant);
  const double n_var = restrained_thermal_resultant(cfg, variable);
  if (!(n_var > 0.0)) throw NoBucklingError("analysis", "temperature difference produces no compression");

  // Both parts are equibiaxial, so one geometric matrix for (-1, -1, 0) serves.
  const Model m = build_model(cfg, Resultant(-1.0, -1.0, 0.0));
  SparseMatrix left = m.reduced.stiffness;
  if (!cfg.load.strict_thermal_form) left += n_const * m.reduced.geometric;
  const SparseMatrix right = n_var * m.reduced.geometric;
  BucklingSolution s;
  try {
    s = smallest_positive_factor(left, right, cfg.solver);
  } catch (const ConstraintError&) {
    // Only the preload can make the left matrix indefinite if K itself is fine.
    const bool preloaded = !cfg.load.strict_thermal_form && n_const > 0.0;
    if (!preloaded || Eigen::SimplicialLLT<SparseMatrix>(m.reduced.stiffness).info() != Eigen::Success) throw;
    char temp[32];
    std::snprintf(temp, sizeof temp, "%g", cfg.load.metal_surface_temp);
    throw DomainError("analysis", std::string("the uniform rise to metal_surface_temp = ") + temp +
                                      " already buckles the plate; lower it or set strict_form");
  }
  AnalysisResult r;
  r.quantity = "dT_cr";
  r.raw = s.factor;
  r.normalized = s.factor;
  r.residual = s.residual;
  r.stats = m.stats;
  r.nodal_w = nodal_deflection(m, s.mode);
  return r;
}

inline AnalysisResult run(const ProblemConfig& cfg) {
  return cfg.load.kind == LoadKind::thermal ? run_thermal(cfg) : run_mechanical(cfg);
}

// ---------------------------------------------------------------------------
// Sweeps

enum class SweepAxis { gradient_index, crack_length_ratio, crack_angle_deg, cutout_radius_ratio, a_over_h, a_over_b,
                       defect_count };

inline const char* to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::gradient_index: return "gradient_index";
    case SweepAxis::crack_length_ratio: return "crack_length_ratio";
    case SweepAxis::crack_angle_deg: return "crack_angle_deg";
    case SweepAxis::cutout_radius_ratio: return "cutout_radius_ratio";
    case SweepAxis::a_over_h: return "a_over_h";
    case SweepAxis::a_over_b: return "a_over_b";
    case SweepAxis::defect_count: return "defect_count";
  }
  return "?";
}

inline std::optional<SweepAxis> sweep_axis_from_string(const std::string& s) {
  for (SweepAxis a : {SweepAxis::gradient_index, SweepAxis::crack_length_ratio, SweepAxis::crack_angle_deg,
                      SweepAxis::cutout_radius_ratio, SweepAxis::a_over_h, SweepAxis::a_over_b,
                      SweepAxis::defect_count}) {
    if (s == to_string(a)) return a;
  }
  return std::nullopt;
}

struct SweepDimension {
  SweepAxis axis;
  std::vector<double> values;
};

struct SweepPoint {
  std::vector<std::pair<SweepAxis, double>> parameters;
  ProblemConfig config;
  std::optional<AnalysisResult> result;
  std::string error;  // module-tagged message when the point failed
};

/// Applies one sweep coordinate to a copy of the base configuration.
inline void apply_axis(ProblemConfig& cfg, SweepAxis axis, double value) {
  switch (axis) {
    case SweepAxis::gradient_index:
      cfg.gradient_index = value;
      break;
    case SweepAxis::crack_length_ratio: {
      std::vector<DefectSpec> kept;
      for (DefectSpec& d : cfg.defects) {
        if (auto* c = std::get_if<CrackSpec>(&d)) {
          if (value == 0.0) continue;  // c/a = 0 is the intact plate
          c->length = value * cfg.plate.a;
        }
        kept.push_back(d);
      }
      cfg.defects = std::move(kept);
      break;
    }
    case SweepAxis::crack_angle_deg:
      for (DefectSpec& d : cfg.defects) {
        if (auto* c = std::get_if<CrackSpec>(&d)) c->angle = value * std::numbers::pi / 180.0;
      }
      break;
    case SweepAxis::cutout_radius_ratio:
      for (DefectSpec& d : cfg.defects) {
        if (auto* c = std::get_if<CircleCutout>(&d)) c->radius = value * cfg.plate.a;
      }
      break;
    case SweepAxis::a_over_h:
      if (!(value > 0.0)) throw ConfigError("analysis", "a_over_h must be > 0");
      cfg.plate.h = cfg.plate.a / value;
      break;
    case SweepAxis::a_over_b: {
      if (!(value > 0.0)) throw ConfigError("analysis", "a_over_b must be > 0");
      const double b = cfg.plate.a / value, s = b / cfg.plate.b;
      for (DefectSpec& d : cfg.defects) std::visit([&](auto& x) { x.center.y() *= s; }, d);
      cfg.plate.b = b;
      break;
    }
    case SweepAxis::defect_count: {
      const double r = std::round(value);
      if (r < 0.0 || std::abs(value - r) > 1e-12 || r > static_cast<double>(cfg.defects.size())) {
        throw ConfigError("analysis", "defect_count must be an integer in [0, " +
                                          std::to_string(cfg.defects.size()) + "]");
      }
      cfg.defects.resize(static_cast<std::size_t>(r));
      break;
    }
  }
}

/// Cartesian product of the dimensions, first dimension outermost. A failing
/// point records its error and the sweep carries on.
template <typename Runner>
std::vector<SweepPoint> sweep(const ProblemConfig& base, const std::vector<SweepDimension>& dims, Runner&& runner) {
  std::vector<SweepPoint> points;
  std::size_t total = 1;
  for (const auto& d : dims) total *= d.values.size();
  if (dims.empty()) total = 1;
  for (std::size_t flat = 0; flat < total; ++flat) {
    SweepPoint p;
    p.config = base;
    std::size_t rest = flat;
    std::vector<std::size_t> index(dims.size());
    for (std::size_t k = dims.size(); k-- > 0;) {
      index[k] = rest % dims[k].values.size();
      rest /= dims[k].values.size();
    }
    try {
      for (std::size_t k = 0; k < dims.size(); ++k) {
        const double v = dims[k].values[index[k]];
        p.parameters.emplace_back(dims[k].axis, v);
        apply_axis(p.config, dims[k].axis, v);
      }
      p.result = runner(p.config);
    } catch (const std::exception& ex) {
      p.error = ex.what();
    }
    points.push_back(std::move(p));
  }
  return points;
}

inline std::vector<SweepPoint> sweep(const ProblemConfig& base, const std::vector<SweepDimension>& dims) {
  return sweep(base, dims, [](const ProblemConfig& c) { return run(c); });
}

}  // namespace fgmbuck
