#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "fgmbuck/assembly.hpp"
#include "fgmbuck/element.hpp"

using namespace fgmbuck;

namespace {

ConstitutiveSet graded_set() {
  return integrate_constitutive(FgmDefinition{zirconia(), aluminium(), 1.0, 0.01});
}

StructuredMesh unit_mesh(int n) { return generate_mesh(PlateGeometry{1.0, 1.0, 0.01}, n, n); }

Eigen::VectorXd nodal_vector(const StructuredMesh& m, int e, const std::vector<DofDescriptor>& dofs,
                             const std::function<double(Field, const Vec2&)>& f) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dofs.size()));
  for (std::size_t k = 0; k < dofs.size(); ++k) {
    if (dofs[k].kind != DofKind::standard) continue;
    v(static_cast<Eigen::Index>(k)) = f(dofs[k].field, m.nodes[m.elements[e][dofs[k].local_node]]);
  }
  return v;
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(Shapes, PartitionOfUnity) {
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      const double xi = -1.0 + 2.0 * i / 9.0, eta = -1.0 + 2.0 * j / 9.0;
      const ShapeQ4 s = shape_q4(xi, eta);
      const SubstituteShear t = substitute_shear_shapes(xi, eta);
      EXPECT_NEAR(s.values.sum(), 1.0, 1e-12);
      EXPECT_NEAR(s.parent_gradients.col(0).sum(), 0.0, 1e-12);
      EXPECT_NEAR(s.parent_gradients.col(1).sum(), 0.0, 1e-12);
      EXPECT_NEAR(t.for_beta_x.sum(), 1.0, 1e-12);
      EXPECT_NEAR(t.for_beta_y.sum(), 1.0, 1e-12);
    }
  }
}

TEST(Shapes, NodalInterpolation) {
  const double corners[4][2] = {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}};
  for (int a = 0; a < 4; ++a) {
    const ShapeQ4 s = shape_q4(corners[a][0], corners[a][1]);
    for (int b = 0; b < 4; ++b) EXPECT_DOUBLE_EQ(s.values(b), a == b ? 1.0 : 0.0);
  }
}

TEST(Shapes, SubstituteShapesDependOnOneCoordinate) {
  const SubstituteShear a = substitute_shear_shapes(-0.7, 0.3), b = substitute_shear_shapes(0.9, 0.3);
  const SubstituteShear c = substitute_shear_shapes(0.2, -0.8), d = substitute_shear_shapes(0.2, 0.6);
  EXPECT_EQ(a.for_beta_x, b.for_beta_x);
  EXPECT_EQ(c.for_beta_y, d.for_beta_y);
}

TEST(TipFunctions, GradientsMatchFiniteDifferences) {
  const double step = 1e-6;
  for (double r : {0.01, 0.3, 1.7}) {
    for (double theta : {-2.5, -1.0, 0.0, 0.4, 1.9, 2.8}) {
      const double x = r * std::cos(theta), y = r * std::sin(theta);
      auto polar = [](double px, double py) { return std::pair{std::hypot(px, py), std::atan2(py, px)}; };
      const auto g = tip_functions_G(r, theta);
      const auto f = tip_functions_F(r, theta);
      for (int dir = 0; dir < 2; ++dir) {
        const double hx = dir == 0 ? step * r : 0.0, hy = dir == 1 ? step * r : 0.0;
        const auto [rp, tp] = polar(x + hx, y + hy);
        const auto [rm, tm] = polar(x - hx, y - hy);
        const auto gp = tip_functions_G(rp, tp), gm = tip_functions_G(rm, tm);
        const auto fp = tip_functions_F(rp, tp), fm = tip_functions_F(rm, tm);
        for (int k = 0; k < 5; ++k) {
          const double fd = (gp.values(k) - gm.values(k)) / (2.0 * step * r);
          EXPECT_NEAR(g.gradients(k, dir), fd, 1e-5 * std::max(1.0, std::abs(fd))) << "G" << k;
        }
        for (int k = 0; k < 4; ++k) {
          const double fd = (fp.values(k) - fm.values(k)) / (2.0 * step * r);
          EXPECT_NEAR(f.gradients(k, dir), fd, 1e-5 * std::max(1.0, std::abs(fd))) << "F" << k;
        }
      }
    }
  }
}

TEST(TipFunctions, DiscontinuousAcrossFacesOnly) {
  // sqrt(r) sin(theta/2) jumps across theta = +-pi; the cosine terms do not.
  const auto up = tip_functions_G(0.25, std::numbers::pi), down = tip_functions_G(0.25, -std::numbers::pi);
  EXPECT_NEAR(up.values(0) - down.values(0), 1.0, 1e-14);
  EXPECT_NEAR(up.values(2) - down.values(2), 0.0, 1e-14);
  EXPECT_THROW(tip_functions_F(0.0, 0.0), GeometryError);
}

TEST(TipBlock, EntryLayout) {
  EXPECT_EQ(tip_block_entry(0), std::make_pair(Field::u, 0));
  EXPECT_EQ(tip_block_entry(7), std::make_pair(Field::v, 2));
  EXPECT_EQ(tip_block_entry(14), std::make_pair(Field::w, 4));
  EXPECT_EQ(tip_block_entry(15), std::make_pair(Field::beta_x, 0));
  EXPECT_EQ(tip_block_entry(22), std::make_pair(Field::beta_y, 3));
  EXPECT_EQ(kTipDofs, 23);
}

TEST(Stiffness, FieldConsistentShearIsLockingFree) {
  // w = x^2 / 2 and beta_x = -x at the nodes: the bilinear slope of w is the
  // element-mean x, which the substitute rotation interpolation reproduces.
  const StructuredMesh m = unit_mesh(5);
  const DefectSet none;
  const int e = m.element_id(2, 1);
  const ElementContext ctx{m, none, e, standard_dofs()};
  ConstitutiveSet shear_only;
  shear_only.shear = Eigen::Matrix2d::Identity() * 1e8;
  const Eigen::VectorXd q = nodal_vector(m, e, ctx.dofs, [](Field f, const Vec2& x) {
    if (f == Field::w) return 0.5 * x.x() * x.x();
    if (f == Field::beta_x) return -x.x();
    return 0.0;
  });
  const QuadraturePlan plan = plain_plan(2);
  const double consistent = q.dot(element_stiffness(ctx, shear_only, plan, ShearInterpolation::field_consistent) * q);
  const double plain = q.dot(element_stiffness(ctx, shear_only, plan, ShearInterpolation::standard) * q);
  EXPECT_LT(std::abs(consistent), 1e-12 * plain);
  // Standard: gamma = x_mid - x over the element; mean square dx^2 / 12.
  EXPECT_NEAR(plain, 1e8 * 0.2 * 0.2 * 0.2 * 0.2 / 12.0, 1e-6 * plain);
}

TEST(Stiffness, SymmetricPositiveSemiDefinite) {
  const StructuredMesh m = unit_mesh(4);
  const DefectSet none;
  const ElementContext ctx{m, none, 5, standard_dofs()};
  const Eigen::MatrixXd k = element_stiffness(ctx, graded_set(), plain_plan(2));
  EXPECT_LE(max_abs(k - k.transpose()), 1e-12 * max_abs(k));
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(k).eigenvalues();
  EXPECT_GT(ev.minCoeff(), -1e-10 * ev.maxCoeff());
}

TEST(Stiffness, RigidBodyModesCarryNoEnergy) {
  const StructuredMesh m = unit_mesh(4);
  const DefectSet none;
  const int e = 6;
  const ElementContext ctx{m, none, e, standard_dofs()};
  const Eigen::MatrixXd k = element_stiffness(ctx, graded_set(), plain_plan(2));
  const std::vector<std::function<double(Field, const Vec2&)>> modes = {
      [](Field f, const Vec2&) { return f == Field::u ? 1.0 : 0.0; },
      [](Field f, const Vec2&) { return f == Field::v ? 1.0 : 0.0; },
      [](Field f, const Vec2&) { return f == Field::w ? 1.0 : 0.0; },
      [](Field f, const Vec2& x) { return f == Field::u ? -x.y() : f == Field::v ? x.x() : 0.0; },
      [](Field f, const Vec2& x) { return f == Field::w ? x.x() : f == Field::beta_x ? -1.0 : 0.0; },
      [](Field f, const Vec2& x) { return f == Field::w ? x.y() : f == Field::beta_y ? -1.0 : 0.0; },
  };
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const Eigen::VectorXd q = nodal_vector(m, e, ctx.dofs, modes[i]);
    EXPECT_LT((k * q).norm(), 1e-9 * max_abs(k) * q.norm()) << "mode " << i;
  }
  // A bending mode is not rigid.
  const Eigen::VectorXd bend = nodal_vector(m, e, ctx.dofs, [](Field f, const Vec2& x) {
    return f == Field::beta_x ? x.x() : 0.0;
  });
  EXPECT_GT(bend.dot(k * bend), 0.0);
}

TEST(Stiffness, EnrichedElementKeepsStandardBlock) {
  const StructuredMesh m = unit_mesh(10);
  const EnrichmentMap map = classify(m, DefectSet{{CrackSpec{{0.52, 0.55}, 0.4, 0.0}}, {}});
  const DofMap dofs = number_dofs(m, map);
  const ConstitutiveSet c = graded_set();
  for (int e : {m.element_id(3, 5), m.element_id(5, 5), m.element_id(4, 4), m.element_id(5, 4)}) {
    const ElementContext enriched{m, map.defects, e, element_dofs(m, map, dofs, e)};
    const ElementContext plain{m, map.defects, e, standard_dofs()};
    ASSERT_GT(enriched.size(), 20);
    const QuadraturePlan plan = build_quadrature(m, map, e);
    const Eigen::MatrixXd ke = element_stiffness(enriched, c, plan);
    const Eigen::MatrixXd ks = element_stiffness(plain, c, plan);
    EXPECT_LE(max_abs(ke.topLeftCorner(20, 20) - ks), 1e-12 * max_abs(ks)) << to_string(map.elements[e].cls);
    EXPECT_LE(max_abs(ke - ke.transpose()), 1e-12 * max_abs(ke));
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(ke).eigenvalues();
    EXPECT_GT(ev.minCoeff(), -1e-9 * ev.maxCoeff());
  }
}

TEST(Stiffness, SplitElementWithHeavisideOnlyIsRigidFree) {
  // With Heaviside amplitude a, the two sides translate by u + a and u - a.
  const StructuredMesh m = unit_mesh(10);
  const EnrichmentMap map = classify(m, DefectSet{{CrackSpec{{0.52, 0.55}, 0.4, 0.0}}, {}});
  const DofMap dofs = number_dofs(m, map);
  const int e = m.element_id(5, 5);
  const ElementContext ctx{m, map.defects, e, element_dofs(m, map, dofs, e)};
  const Eigen::MatrixXd k = element_stiffness(ctx, graded_set(), build_quadrature(m, map, e));
  Eigen::VectorXd q = Eigen::VectorXd::Zero(ctx.size());
  for (int i = 0; i < ctx.size(); ++i) {
    if (ctx.dofs[i].kind == DofKind::heaviside && ctx.dofs[i].field == Field::w) q(i) = 1.0;
  }
  EXPECT_LT((k * q).norm(), 1e-9 * max_abs(k));
}

TEST(GeometricStiffness, AnalyticUniformField) {
  const StructuredMesh m = unit_mesh(5);
  const DefectSet none;
  const int e = 7;
  const ElementContext ctx{m, none, e, standard_dofs()};
  const double h = 0.05, area = 0.04;
  const Resultant n(-2.0, 3.0, 0.5);
  const Eigen::MatrixXd kg = element_geometric_stiffness(ctx, n, plain_plan(2), h);
  auto form = [&](const std::function<double(Field, const Vec2&)>& f) {
    const Eigen::VectorXd q = nodal_vector(m, e, ctx.dofs, f);
    return q.dot(kg * q);
  };
  // w = x: grad (1, 0) gives N_xx * area.
  EXPECT_NEAR(form([](Field f, const Vec2& x) { return f == Field::w ? x.x() : 0.0; }), -2.0 * area, 1e-14);
  // w = x + y: (N_xx + N_yy + 2 N_xy) * area.
  EXPECT_NEAR(form([](Field f, const Vec2& x) { return f == Field::w ? x.x() + x.y() : 0.0; }), 2.0 * area, 1e-14);
  // beta_y = y: h^2 / 12 * N_yy * area.
  EXPECT_NEAR(form([](Field f, const Vec2& x) { return f == Field::beta_y ? x.y() : 0.0; }),
              h * h / 12.0 * 3.0 * area, 1e-16);
  // In-plane motion does no work.
  EXPECT_EQ(form([](Field f, const Vec2& x) { return f == Field::u ? x.x() : 0.0; }), 0.0);
}

TEST(GeometricStiffness, LinearInResultant) {
  const StructuredMesh m = unit_mesh(5);
  const DefectSet none;
  const ElementContext ctx{m, none, 3, standard_dofs()};
  const Eigen::MatrixXd a = element_geometric_stiffness(ctx, Resultant(1.0, 0.0, 0.0), plain_plan(2), 0.01);
  const Eigen::MatrixXd b = element_geometric_stiffness(ctx, Resultant(-4.0, 0.0, 0.0), plain_plan(2), 0.01);
  EXPECT_LE(max_abs(b + 4.0 * a), 1e-14 * max_abs(b));
  const Eigen::MatrixXd zero = element_geometric_stiffness(ctx, Resultant::Zero(), plain_plan(2), 0.01);
  EXPECT_EQ(max_abs(zero), 0.0);
  EXPECT_THROW(element_geometric_stiffness(ctx, std::vector<Resultant>(3), plain_plan(2), 0.01), DomainError);
}

TEST(TipFunctions, FrameObjectivity) {
  const CrackSpec base{{0.4, 0.5}, 0.3, 0.2};
  const Vec2 probe(0.61, 0.47);
  for (double turn : {0.4, 1.3, -2.2}) {
    const Eigen::Rotation2Dd rot(turn);
    const Vec2 pivot(0.5, 0.5);
    const CrackSpec turned{pivot + rot * (base.center - pivot), base.length, base.angle + turn};
    const Vec2 moved = pivot + rot * (probe - pivot);
    for (int tip : {0, 1}) {
      const TipPolar a = tip_polar(probe, base, tip), b = tip_polar(moved, turned, tip);
      const auto ga = tip_functions_G(a.r, a.theta), gb = tip_functions_G(b.r, b.theta);
      const auto fa = tip_functions_F(a.r, a.theta), fb = tip_functions_F(b.r, b.theta);
      EXPECT_LT((ga.values - gb.values).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_LT((fa.values - fb.values).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(StrainOperators, EnrichedGradientsMatchFiniteDifferences) {
  // Gradients of N_a H, N_a G_l and N_a F_l against central differences of
  // the same products evaluated from scratch.
  const StructuredMesh m = unit_mesh(10);
  const CrackSpec crack{{0.52, 0.55}, 0.4, 0.0};
  const DefectSet defects{{crack}, {}};
  const EnrichmentMap map = classify(m, defects);
  const DofMap dofs = number_dofs(m, map);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  for (int e : {m.element_id(7, 5), m.element_id(5, 5), m.element_id(6, 4)}) {
    const std::vector<DofDescriptor> dofs_e = element_dofs(m, map, dofs, e);
    auto is_rotation = [](const DofDescriptor& d) { return d.field == Field::beta_x || d.field == Field::beta_y; };
    // u carries G-type and plain functions, beta_x the F-type ones.
    std::vector<DofDescriptor> eval = dofs_e;
    for (auto& d : eval) d.field = d.kind == DofKind::tip && is_rotation(d) ? Field::beta_x : Field::u;
    const ElementContext ctx{m, defects, e, eval};
    auto basis = [&](const DofDescriptor& d, const Vec2& x) {
      const Vec2 p = m.to_parent(e, x);
      double enrich = 1.0;
      if (d.kind == DofKind::heaviside) enrich = heaviside(x, crack);
      if (d.kind == DofKind::tip) {
        const TipPolar t = tip_polar(x, crack, d.tip);
        enrich = is_rotation(d) ? tip_functions_F(t.r, t.theta).values(d.function)
                                : tip_functions_G(t.r, t.theta).values(d.function);
      }
      return shape_q4(p.x(), p.y()).values(d.local_node) * enrich;
    };
    for (int s = 0; s < 7; ++s) {
      const Vec2 parent(u(rng), u(rng));
      const Vec2 x = m.to_physical(e, parent);
      if (std::abs(x.y() - 0.55) < 1e-3) continue;  // keep the stencil off the crack line
      const StrainOperators ops = strain_operators(ctx, parent);
      const double step = 1e-6 * m.dx();
      for (std::size_t k = 0; k < dofs_e.size(); ++k) {
        const auto& d = dofs_e[k];
        const double gx = (basis(d, x + Vec2(step, 0)) - basis(d, x - Vec2(step, 0))) / (2 * step);
        const double gy = (basis(d, x + Vec2(0, step)) - basis(d, x - Vec2(0, step))) / (2 * step);
        const bool f_type = eval[k].field == Field::beta_x;
        const double ax = f_type ? ops.grad_beta_x(0, k) : ops.membrane(0, k);
        const double ay = f_type ? ops.grad_beta_x(1, k) : ops.membrane(2, k);
        const double scale = std::max({1.0, std::abs(gx), std::abs(gy)});
        EXPECT_NEAR(ax, gx, 1e-5 * scale) << "element " << e << " unknown " << k;
        EXPECT_NEAR(ay, gy, 1e-5 * scale) << "element " << e << " unknown " << k;
      }
    }
  }
}

TEST(StrainOperators, ZeroEnrichedUnknownsReproduceStandardElement) {
  const StructuredMesh m = unit_mesh(10);
  const EnrichmentMap map = classify(m, DefectSet{{CrackSpec{{0.52, 0.55}, 0.4, 0.0}}, {}});
  const DofMap dofs = number_dofs(m, map);
  const int e = m.element_id(7, 5);
  const ElementContext enriched{m, map.defects, e, element_dofs(m, map, dofs, e)};
  const ElementContext plain{m, map.defects, e, standard_dofs()};
  for (const auto& q : build_quadrature(m, map, e).points) {
    const StrainOperators a = strain_operators(enriched, q.parent), b = strain_operators(plain, q.parent);
    EXPECT_EQ(a.membrane.leftCols(20), b.membrane);
    EXPECT_EQ(a.bending.leftCols(20), b.bending);
    EXPECT_EQ(a.shear.leftCols(20), b.shear);
    EXPECT_EQ(a.grad_w.leftCols(20), b.grad_w);
  }
}

TEST(Stiffness, StandardElementHasExactlySixZeroModes) {
  const StructuredMesh m = unit_mesh(4);
  const DefectSet none;
  const ElementContext ctx{m, none, 9, standard_dofs()};
  const Eigen::MatrixXd k = element_stiffness(ctx, graded_set(), plain_plan(2));
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(k).eigenvalues();
  int zero = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) zero += std::abs(ev(i)) < 1e-10 * ev.maxCoeff() ? 1 : 0;
  EXPECT_EQ(zero, 6);
}

TEST(GeometricStiffness, UnitSquareDeflectionBlockClosedForm) {
  // Single unit-square element, N_xx = 1: the w block is
  // int N_a,x N_b,x dA = s_a s_b (1/4 + t_a t_b / 12) with corner signs s, t.
  const StructuredMesh m = generate_mesh(PlateGeometry{1.0, 1.0, 0.01}, 1, 1);
  const DefectSet none;
  const ElementContext ctx{m, none, 0, standard_dofs()};
  const Eigen::MatrixXd kg = element_geometric_stiffness(ctx, Resultant(1.0, 0.0, 0.0), plain_plan(2), 0.01);
  const double s[4] = {-1, 1, 1, -1}, t[4] = {-1, -1, 1, 1};
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      const int i = 5 * a + static_cast<int>(Field::w), j = 5 * b + static_cast<int>(Field::w);
      EXPECT_NEAR(kg(i, j), s[a] * s[b] * (0.25 + t[a] * t[b] / 12.0), 1e-15);
    }
  }
  const Eigen::MatrixXd twice = element_geometric_stiffness(ctx, Resultant(2.0, 0.0, 0.0), plain_plan(2), 0.01);
  EXPECT_LE(max_abs(twice - 2.0 * kg), 1e-15);
}
