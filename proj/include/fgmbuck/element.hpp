#pragma once

// Enriched shear-flexible QUAD-4 plate element. Transverse shear uses the
// field-redistributed rotation interpolation so that the rotation terms match
// the derivatives of the bilinear w field on axis-aligned elements.

#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "fgmbuck/errors.hpp"
#include "fgmbuck/geometry.hpp"
#include "fgmbuck/material.hpp"

namespace fgmbuck {

enum class Field { u = 0, v = 1, w = 2, beta_x = 3, beta_y = 4 };

enum class DofKind { standard, heaviside, tip };

inline constexpr int kStandardDofs = 5;
inline constexpr int kHeavisideDofs = 5;
inline constexpr int kTipFunctionsG = 5;
inline constexpr int kTipFunctionsF = 4;
inline constexpr int kTipDofs = 3 * kTipFunctionsG + 2 * kTipFunctionsF;  // 23

/// One element-level unknown. For tip DOFs `function` indexes G (u, v, w) or
/// F (beta_x, beta_y).
struct DofDescriptor {
  int global = -1;
  Field field = Field::u;
  DofKind kind = DofKind::standard;
  int local_node = 0;
  int crack = -1;
  int tip = -1;
  int function = -1;
};

/// Field and function index of entry `k` (0..22) inside a tip block.
inline std::pair<Field, int> tip_block_entry(int k) {
  if (k < 15) return {static_cast<Field>(k / kTipFunctionsG), k % kTipFunctionsG};
  k -= 15;
  return {k < kTipFunctionsF ? Field::beta_x : Field::beta_y, k % kTipFunctionsF};
}

struct ShapeQ4 {
  Eigen::Vector4d values;
  Eigen::Matrix<double, 4, 2> parent_gradients;
};

inline ShapeQ4 shape_q4(double xi, double eta) {
  static constexpr double sx[4] = {-1.0, 1.0, 1.0, -1.0};
  static constexpr double sy[4] = {-1.0, -1.0, 1.0, 1.0};
  ShapeQ4 s;
  for (int i = 0; i < 4; ++i) {
    s.values(i) = 0.25 * (1.0 + sx[i] * xi) * (1.0 + sy[i] * eta);
    s.parent_gradients(i, 0) = 0.25 * sx[i] * (1.0 + sy[i] * eta);
    s.parent_gradients(i, 1) = 0.25 * sy[i] * (1.0 + sx[i] * xi);
  }
  return s;
}

struct SubstituteShear {
  Eigen::Vector4d for_beta_x;  // depends on eta only
  Eigen::Vector4d for_beta_y;  // depends on xi only
};

inline SubstituteShear substitute_shear_shapes(double xi, double eta) {
  SubstituteShear s;
  s.for_beta_x << 1.0 - eta, 1.0 - eta, 1.0 + eta, 1.0 + eta;
  s.for_beta_y << 1.0 - xi, 1.0 + xi, 1.0 + xi, 1.0 - xi;
  s.for_beta_x *= 0.25;
  s.for_beta_y *= 0.25;
  return s;
}

/// Values and gradients of a set of near-tip functions. Gradients are in the
/// tip's local Cartesian frame (x' along the extension, y' rotated +90 deg).
template <int Count>
struct TipFunctionSet {
  Eigen::Matrix<double, Count, 1> values;
  Eigen::Matrix<double, Count, 2> gradients;
};

namespace detail {

/// Chain rule from polar derivatives to local Cartesian ones.
inline Eigen::RowVector2d polar_to_cartesian(double f_r, double f_theta, double r, double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  return {f_r * c - f_theta * s / r, f_r * s + f_theta * c / r};
}

}  // namespace detail

inline TipFunctionSet<5> tip_functions_G(double r, double theta) {
  if (!(r > 0.0)) throw GeometryError("element", "tip functions evaluated at r = 0");
  const double sr = std::sqrt(r), cr = std::cbrt(r);
  const double s1 = std::sin(0.5 * theta), c1 = std::cos(0.5 * theta);
  const double s3 = std::sin(1.5 * theta), c3 = std::cos(1.5 * theta);
  TipFunctionSet<5> out;
  out.values << sr * s1, cr * s1, cr * c1, cr * s3, cr * c3;
  const double dsr = 0.5 / sr, dcr = cr / (3.0 * r);
  out.gradients.row(0) = detail::polar_to_cartesian(dsr * s1, 0.5 * sr * c1, r, theta);
  out.gradients.row(1) = detail::polar_to_cartesian(dcr * s1, 0.5 * cr * c1, r, theta);
  out.gradients.row(2) = detail::polar_to_cartesian(dcr * c1, -0.5 * cr * s1, r, theta);
  out.gradients.row(3) = detail::polar_to_cartesian(dcr * s3, 1.5 * cr * c3, r, theta);
  out.gradients.row(4) = detail::polar_to_cartesian(dcr * c3, -1.5 * cr * s3, r, theta);
  return out;
}

inline TipFunctionSet<4> tip_functions_F(double r, double theta) {
  if (!(r > 0.0)) throw GeometryError("element", "tip functions evaluated at r = 0");
  const double sr = std::sqrt(r), dsr = 0.5 / sr;
  const double s1 = std::sin(0.5 * theta), c1 = std::cos(0.5 * theta);
  const double st = std::sin(theta), ct = std::cos(theta);
  TipFunctionSet<4> out;
  out.values << sr * s1, sr * c1, sr * s1 * st, sr * c1 * st;
  out.gradients.row(0) = detail::polar_to_cartesian(dsr * s1, 0.5 * sr * c1, r, theta);
  out.gradients.row(1) = detail::polar_to_cartesian(dsr * c1, -0.5 * sr * s1, r, theta);
  out.gradients.row(2) = detail::polar_to_cartesian(dsr * s1 * st, sr * (0.5 * c1 * st + s1 * ct), r, theta);
  out.gradients.row(3) = detail::polar_to_cartesian(dsr * c1 * st, sr * (-0.5 * s1 * st + c1 * ct), r, theta);
  return out;
}

/// Everything needed to evaluate one element's basis: its mesh cell, the
/// defect geometry and the ordered list of its unknowns.
struct ElementContext {
  const StructuredMesh& mesh;
  const DefectSet& defects;
  int element;
  std::vector<DofDescriptor> dofs;

  int size() const { return static_cast<int>(dofs.size()); }
};

/// Standard-only context (20 unknowns, node-major u, v, w, beta_x, beta_y).
inline std::vector<DofDescriptor> standard_dofs() {
  std::vector<DofDescriptor> d;
  for (int n = 0; n < 4; ++n) {
    for (int f = 0; f < kStandardDofs; ++f) d.push_back({-1, static_cast<Field>(f), DofKind::standard, n});
  }
  return d;
}

enum class ShearInterpolation { field_consistent, standard };

/// Strain-displacement operators at one point. Rows of `membrane` and
/// `bending` are (xx, yy, xy engineering); `shear` rows are (xz, yz). The
/// gradient operators feed the geometric stiffness.
struct StrainOperators {
  Eigen::MatrixXd membrane;
  Eigen::MatrixXd bending;
  Eigen::MatrixXd shear;
  Eigen::MatrixXd grad_w;
  Eigen::MatrixXd grad_beta_x;
  Eigen::MatrixXd grad_beta_y;
};

inline StrainOperators strain_operators(const ElementContext& ctx, const Vec2& parent,
                                        ShearInterpolation shear_mode = ShearInterpolation::field_consistent) {
  const StructuredMesh& mesh = ctx.mesh;
  const ShapeQ4 q4 = shape_q4(parent.x(), parent.y());
  const SubstituteShear sub = substitute_shear_shapes(parent.x(), parent.y());
  const double jx = 2.0 / mesh.dx(), jy = 2.0 / mesh.dy();
  if (!(std::isfinite(jx) && std::isfinite(jy)) || mesh.dx() <= 0.0 || mesh.dy() <= 0.0) {
    throw GeometryError("element", "singular element Jacobian");
  }
  Eigen::Matrix<double, 4, 2> grad_n;
  grad_n.col(0) = q4.parent_gradients.col(0) * jx;
  grad_n.col(1) = q4.parent_gradients.col(1) * jy;

  const Vec2 x = mesh.to_physical(ctx.element, parent);

  // Enrichment values at this point, evaluated lazily per crack/tip.
  std::vector<std::pair<int, double>> heavi_cache;
  struct TipEval {
    int crack, tip;
    TipFunctionSet<5> g;
    TipFunctionSet<4> f;
    Eigen::Matrix2d frame;  // columns: local x', y' axes in global coordinates
  };
  std::vector<TipEval> tip_cache;
  auto heavi = [&](int crack) {
    for (const auto& [k, v] : heavi_cache) {
      if (k == crack) return v;
    }
    const double v = heaviside(x, ctx.defects.cracks[crack]);
    heavi_cache.emplace_back(crack, v);
    return v;
  };
  auto tip_eval = [&](int crack, int tip) -> const TipEval& {
    for (const auto& t : tip_cache) {
      if (t.crack == crack && t.tip == tip) return t;
    }
    const CrackSpec& c = ctx.defects.cracks[crack];
    const TipPolar polar = tip_polar(x, c, tip);
    Eigen::Matrix2d frame;
    const Vec2 e = c.extension(tip);
    frame.col(0) = e;
    frame.col(1) = Vec2(-e.y(), e.x());
    tip_cache.push_back({crack, tip, tip_functions_G(polar.r, polar.theta), tip_functions_F(polar.r, polar.theta), frame});
    return tip_cache.back();
  };

  const int n = ctx.size();
  StrainOperators ops{Eigen::MatrixXd::Zero(3, n), Eigen::MatrixXd::Zero(3, n), Eigen::MatrixXd::Zero(2, n),
                      Eigen::MatrixXd::Zero(2, n), Eigen::MatrixXd::Zero(2, n), Eigen::MatrixXd::Zero(2, n)};

  for (int k = 0; k < n; ++k) {
    const DofDescriptor& d = ctx.dofs[k];
    const int a = d.local_node;
    double enrich = 1.0;
    Eigen::RowVector2d enrich_grad = Eigen::RowVector2d::Zero();
    if (d.kind == DofKind::heaviside) {
      enrich = heavi(d.crack);
    } else if (d.kind == DofKind::tip) {
      const TipEval& t = tip_eval(d.crack, d.tip);
      const bool rotation = d.field == Field::beta_x || d.field == Field::beta_y;
      Eigen::RowVector2d local;
      if (rotation) {
        enrich = t.f.values(d.function);
        local = t.f.gradients.row(d.function);
      } else {
        enrich = t.g.values(d.function);
        local = t.g.gradients.row(d.function);
      }
      enrich_grad = local * t.frame.transpose();
    }
    const double value = q4.values(a) * enrich;
    const Eigen::RowVector2d grad = grad_n.row(a) * enrich + q4.values(a) * enrich_grad;

    switch (d.field) {
      case Field::u:
        ops.membrane(0, k) = grad(0);
        ops.membrane(2, k) = grad(1);
        break;
      case Field::v:
        ops.membrane(1, k) = grad(1);
        ops.membrane(2, k) = grad(0);
        break;
      case Field::w:
        ops.shear(0, k) = grad(0);
        ops.shear(1, k) = grad(1);
        ops.grad_w.col(k) = grad.transpose();
        break;
      case Field::beta_x: {
        ops.bending(0, k) = grad(0);
        ops.bending(2, k) = grad(1);
        const double tilde = shear_mode == ShearInterpolation::field_consistent ? sub.for_beta_x(a) * enrich : value;
        ops.shear(0, k) = tilde;
        ops.grad_beta_x.col(k) = grad.transpose();
        break;
      }
      case Field::beta_y: {
        ops.bending(1, k) = grad(1);
        ops.bending(2, k) = grad(0);
        const double tilde = shear_mode == ShearInterpolation::field_consistent ? sub.for_beta_y(a) * enrich : value;
        ops.shear(1, k) = tilde;
        ops.grad_beta_y.col(k) = grad.transpose();
        break;
      }
    }
  }
  return ops;
}

namespace detail {

inline void check_and_symmetrize(Eigen::MatrixXd& m, const char* what) {
  const double scale = m.cwiseAbs().maxCoeff();
  if (scale > 0.0 && (m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw InternalError("element", std::string(what) + " is not symmetric");
  }
  m = 0.5 * (m + m.transpose()).eval();
}

}  // namespace detail

inline Eigen::MatrixXd element_stiffness(const ElementContext& ctx, const ConstitutiveSet& c, const QuadraturePlan& plan,
                                         ShearInterpolation shear_mode = ShearInterpolation::field_consistent) {
  const int n = ctx.size();
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  const double det = ctx.mesh.jacobian_determinant();
  for (const QuadPoint& q : plan.points) {
    const StrainOperators ops = strain_operators(ctx, q.parent, shear_mode);
    const double w = q.weight * det;
    const Eigen::MatrixXd ab = c.extensional * ops.membrane + c.coupling * ops.bending;
    const Eigen::MatrixXd bd = c.coupling * ops.membrane + c.bending * ops.bending;
    k.noalias() += w * (ops.membrane.transpose() * ab + ops.bending.transpose() * bd);
    k.noalias() += w * (ops.shear.transpose() * (c.shear * ops.shear));
  }
  detail::check_and_symmetrize(k, "element stiffness");
  return k;
}

/// In-plane resultants (N_xx, N_yy, N_xy) of the prebuckling state.
using Resultant = Eigen::Vector3d;

/// Quadratic form of the in-plane work: grad(w)' N grad(w) plus h^2/12 times
/// the same form on both rotation gradients.
inline Eigen::MatrixXd element_geometric_stiffness(const ElementContext& ctx, const std::vector<Resultant>& field,
                                                   const QuadraturePlan& plan, double thickness) {
  if (field.size() != plan.points.size()) {
    throw DomainError("element", "resultant field must be given at every quadrature point");
  }
  const int n = ctx.size();
  Eigen::MatrixXd kg = Eigen::MatrixXd::Zero(n, n);
  const double det = ctx.mesh.jacobian_determinant();
  const double rot = thickness * thickness / 12.0;
  for (std::size_t i = 0; i < plan.points.size(); ++i) {
    const Resultant& r = field[i];
    if (r.isZero(0.0)) continue;
    Eigen::Matrix2d s;
    s << r(0), r(2), r(2), r(1);
    const StrainOperators ops = strain_operators(ctx, plan.points[i].parent);
    const double w = plan.points[i].weight * det;
    kg.noalias() += w * (ops.grad_w.transpose() * (s * ops.grad_w));
    kg.noalias() += (w * rot) * (ops.grad_beta_x.transpose() * (s * ops.grad_beta_x));
    kg.noalias() += (w * rot) * (ops.grad_beta_y.transpose() * (s * ops.grad_beta_y));
  }
  detail::check_and_symmetrize(kg, "geometric stiffness");
  return kg;
}

inline Eigen::MatrixXd element_geometric_stiffness(const ElementContext& ctx, const Resultant& uniform,
                                                   const QuadraturePlan& plan, double thickness) {
  return element_geometric_stiffness(ctx, std::vector<Resultant>(plan.points.size(), uniform), plan, thickness);
}

}  // namespace fgmbuck
