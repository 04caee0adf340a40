#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "fgmbuck/geometry.hpp"

using namespace fgmbuck;

namespace {

StructuredMesh unit_mesh(int n) { return generate_mesh(PlateGeometry{1.0, 1.0, 0.01}, n, n); }

DefectSet one_crack(Vec2 center, double length, double angle) {
  DefectSet d;
  d.cracks.push_back({center, length, angle});
  return d;
}

DefectSet one_circle(Vec2 center, double r) {
  DefectSet d;
  d.cutouts.push_back(CircleCutout{center, r});
  return d;
}

}  // namespace

TEST(Mesh, CountsAndNumbering) {
  const StructuredMesh m = generate_mesh(PlateGeometry{2.0, 1.0, 0.1}, 4, 3);
  EXPECT_EQ(m.nodes.size(), 20u);
  EXPECT_EQ(m.elements.size(), 12u);
  EXPECT_EQ(m.node_id(2, 1), 7);
  EXPECT_DOUBLE_EQ(m.nodes[7].x(), 1.0);
  EXPECT_NEAR(m.nodes[7].y(), 1.0 / 3.0, 1e-15);
  const auto& e = m.elements[m.element_id(1, 2)];
  EXPECT_EQ(e[0], m.node_id(1, 2));
  EXPECT_EQ(e[1], m.node_id(2, 2));
  EXPECT_EQ(e[2], m.node_id(2, 3));
  EXPECT_EQ(e[3], m.node_id(1, 3));
  EXPECT_EQ(m.node_elements(m.node_id(0, 0)).size(), 1u);
  EXPECT_EQ(m.node_elements(m.node_id(2, 0)).size(), 2u);
  EXPECT_EQ(m.node_elements(m.node_id(2, 1)).size(), 4u);
  EXPECT_DOUBLE_EQ(m.jacobian_determinant(), 0.25 * 0.5 / 3.0);
}

TEST(Mesh, ParentMapRoundTrip) {
  const StructuredMesh m = unit_mesh(5);
  const Vec2 x(0.33, 0.71);
  const int e = m.element_id(1, 3);
  const Vec2 back = m.to_physical(e, m.to_parent(e, x));
  EXPECT_NEAR((back - x).norm(), 0.0, 1e-15);
  EXPECT_NEAR((m.to_physical(e, Vec2(-1, -1)) - m.nodes[m.elements[e][0]]).norm(), 0.0, 1e-15);
  EXPECT_NEAR((m.to_physical(e, Vec2(1, 1)) - m.nodes[m.elements[e][2]]).norm(), 0.0, 1e-15);
}

TEST(Mesh, RejectsBadInput) {
  EXPECT_THROW(generate_mesh(PlateGeometry{1, 1, 0.01}, 0, 3), ConfigError);
  EXPECT_THROW(generate_mesh(PlateGeometry{1, -1, 0.01}, 3, 3), ConfigError);
}

TEST(Crack, LocalCoordinatesAndHeaviside) {
  const CrackSpec c{{0.5, 0.5}, 0.4, std::numbers::pi / 6};
  const Vec2 t = c.tangent(), n = c.normal();
  const CrackLocal l = crack_local_coords(c.center + 0.1 * t + 0.03 * n, c);
  EXPECT_NEAR(l.tangential, 0.1, 1e-15);
  EXPECT_NEAR(l.normal, 0.03, 1e-15);
  EXPECT_EQ(heaviside(c.center + 0.03 * n, c), 1);
  EXPECT_EQ(heaviside(c.center - 0.03 * n, c), -1);
  EXPECT_EQ(heaviside(c.center, c), 1);  // on the line
  EXPECT_NEAR((c.tip(1) - c.tip(0)).norm(), 0.4, 1e-15);
}

TEST(Crack, TipPolarCoordinates) {
  const CrackSpec c{{0.5, 0.5}, 0.2, 0.0};
  TipPolar p = tip_polar({0.7, 0.5}, c, 1);
  EXPECT_NEAR(p.r, 0.1, 1e-15);
  EXPECT_NEAR(p.theta, 0.0, 1e-15);
  EXPECT_NEAR(tip_polar({0.6, 0.6}, c, 1).theta, std::numbers::pi / 2, 1e-15);
  EXPECT_NEAR(tip_polar({0.4, 0.6}, c, 0).theta, -std::numbers::pi / 2, 1e-15);
  EXPECT_NEAR(tip_polar({0.3, 0.5}, c, 0).theta, 0.0, 1e-15);
  // On the crack faces the angle jumps from +pi to -pi.
  EXPECT_NEAR(tip_polar({0.55, 0.5 + 1e-12}, c, 1).theta, std::numbers::pi, 1e-9);
  EXPECT_NEAR(tip_polar({0.55, 0.5 - 1e-12}, c, 1).theta, -std::numbers::pi, 1e-9);
  EXPECT_DOUBLE_EQ(tip_polar({0.5, 0.5}, c, 1).theta, std::numbers::pi);
  EXPECT_THROW(tip_polar(c.tip(1), c, 1), GeometryError);
  EXPECT_THROW(tip_polar({0.1, 0.1}, c, 2), DomainError);
}

TEST(LevelSet, CircleSigns) {
  const CircleCutout c{{0.5, 0.5}, 0.2};
  EXPECT_DOUBLE_EQ(level_set(Vec2(0.5, 0.5), c), -0.2);
  EXPECT_NEAR(level_set(Vec2(0.7, 0.5), c), 0.0, 1e-15);
  EXPECT_GT(level_set(Vec2(0.9, 0.9), c), 0.0);
}

TEST(LevelSet, EllipseMatchesRotatedFrame) {
  for (double angle : {0.0, 0.3, std::numbers::pi / 4, 1.2, std::numbers::pi / 2}) {
    const EllipseCutout el{{0.4, 0.6}, 0.2, 0.08, angle};
    for (int i = 0; i < 40; ++i) {
      const Vec2 p(0.4 + 0.3 * std::cos(0.7 * i), 0.6 + 0.25 * std::sin(1.3 * i + 0.2));
      const double dx = p.x() - 0.4, dy = p.y() - 0.6;
      const double u = dx * std::cos(angle) + dy * std::sin(angle);
      const double v = -dx * std::sin(angle) + dy * std::cos(angle);
      const double expected = std::sqrt(u * u / 0.04 + v * v / 0.0064) - 1.0;
      EXPECT_NEAR(level_set(p, el), expected, 1e-12);
    }
    const Vec2 axis(std::cos(angle), std::sin(angle)), across(-std::sin(angle), std::cos(angle));
    EXPECT_NEAR(level_set(Vec2(el.center + 0.2 * axis), el), 0.0, 1e-12);
    EXPECT_NEAR(level_set(Vec2(el.center + 0.08 * across), el), 0.0, 1e-12);
  }
}

TEST(LevelSet, EllipseBoundingBox) {
  const EllipseCutout el{{0.5, 0.5}, 0.2, 0.1, std::numbers::pi / 2};
  const Vec2 half = cutout_half_extent(el);
  EXPECT_NEAR(half.x(), 0.1, 1e-15);
  EXPECT_NEAR(half.y(), 0.2, 1e-15);
  EXPECT_NEAR(cutout_area(el), std::numbers::pi * 0.02, 1e-15);
}

TEST(ValidateDefects, AcceptsInteriorDefects) {
  DefectSet d = one_crack({0.3, 0.3}, 0.2, 0.4);
  d.cutouts.push_back(CircleCutout{{0.7, 0.7}, 0.1});
  d.cutouts.push_back(EllipseCutout{{0.3, 0.75}, 0.15, 0.05, 0.0});
  EXPECT_TRUE(validate_defects(PlateGeometry{}, d).empty());
}

TEST(ValidateDefects, NamesEveryProblem) {
  DefectSet d;
  d.cracks.push_back({{0.95, 0.5}, 0.2, 0.0});
  d.cracks.push_back({{0.5, 0.5}, 0.0, 0.0});
  d.cutouts.push_back(CircleCutout{{0.05, 0.5}, 0.1});
  const auto errors = validate_defects(PlateGeometry{}, d);
  ASSERT_EQ(errors.size(), 3u);
  EXPECT_NE(errors[0].find("crack 0"), std::string::npos);
  EXPECT_NE(errors[1].find("crack 1"), std::string::npos);
  EXPECT_NE(errors[2].find("cutout 0"), std::string::npos);
}

TEST(ValidateDefects, DetectsIntersections) {
  DefectSet d;
  d.cracks.push_back({{0.5, 0.5}, 0.3, 0.0});
  d.cracks.push_back({{0.5, 0.5}, 0.3, std::numbers::pi / 2});
  d.cracks.push_back({{0.5, 0.2}, 0.3, 0.0});
  d.cutouts.push_back(CircleCutout{{0.55, 0.23}, 0.05});
  d.cutouts.push_back(CircleCutout{{0.8, 0.8}, 0.1});
  d.cutouts.push_back(EllipseCutout{{0.8, 0.68}, 0.15, 0.05, 0.0});
  const auto errors = validate_defects(PlateGeometry{}, d);
  ASSERT_EQ(errors.size(), 3u);
  EXPECT_EQ(errors[0], "crack 0 intersects crack 1");
  EXPECT_EQ(errors[1], "crack 2 intersects cutout 0");
  EXPECT_EQ(errors[2], "cutout 1 overlaps cutout 2");
}

TEST(Classify, IntactPlateIsAllStandard) {
  const StructuredMesh m = unit_mesh(6);
  const EnrichmentMap map = classify(m, DefectSet{});
  EXPECT_EQ(map.count(ElementClass::standard), 36u);
  EXPECT_EQ(map.heaviside_node_count() + map.tip_node_count() + map.inactive_node_count(), 0u);
  EXPECT_FALSE(map.perturbed);
}

TEST(Classify, HorizontalCrackClassCounts) {
  // Tips at x = 0.32 and 0.72 inside row 5 of a 10 x 10 grid.
  const StructuredMesh m = unit_mesh(10);
  const EnrichmentMap map = classify(m, one_crack({0.52, 0.55}, 0.4, 0.0));
  EXPECT_FALSE(map.perturbed);
  EXPECT_EQ(map.count(ElementClass::tip), 2u);
  EXPECT_EQ(map.count(ElementClass::split), 3u);
  EXPECT_EQ(map.count(ElementClass::split_tip_blending), 4u);
  EXPECT_EQ(map.count(ElementClass::split_blending), 2u);
  EXPECT_EQ(map.count(ElementClass::tip_blending), 10u);
  EXPECT_EQ(map.count(ElementClass::standard), 79u);
  EXPECT_EQ(map.tip_node_count(), 8u);
  EXPECT_EQ(map.heaviside_node_count(), 4u);
  EXPECT_EQ(map.elements[m.element_id(3, 5)].tip, 0);
  EXPECT_EQ(map.elements[m.element_id(7, 5)].tip, 1);
  for (int i = 5; i <= 6; ++i) {
    for (int j = 5; j <= 6; ++j) EXPECT_EQ(map.nodes[m.node_id(i, j)].heaviside.size(), 1u);
  }
}

TEST(Classify, CrackRestrictions) {
  const StructuredMesh m = unit_mesh(10);
  EXPECT_THROW(classify(m, one_crack({0.55, 0.55}, 0.05, 0.0)), ConfigError);
  DefectSet two;
  two.cracks.push_back({{0.52, 0.55}, 0.3, 0.0});
  two.cracks.push_back({{0.52, 0.57}, 0.3, 0.0});
  EXPECT_THROW(classify(m, two), ConfigError);
  DefectSet mixed = one_crack({0.3, 0.55}, 0.3, 0.0);
  mixed.cutouts.push_back(CircleCutout{{0.56, 0.52}, 0.08});
  EXPECT_THROW(classify(m, mixed), ConfigError);
}

TEST(Classify, UnresolvedCutoutIsRejected) {
  EXPECT_THROW(classify(unit_mesh(4), one_circle({0.6, 0.6}, 0.05)), ConfigError);
}

TEST(Classify, CircleVoidAndCutElements) {
  const StructuredMesh m = unit_mesh(20);
  const EnrichmentMap map = classify(m, one_circle({0.5, 0.5}, 0.2));
  EXPECT_GT(map.count(ElementClass::void_element), 0u);
  EXPECT_GT(map.count(ElementClass::cut_by_cutout), 0u);
  EXPECT_GT(map.inactive_node_count(), 0u);
  EXPECT_EQ(map.elements[m.element_id(10, 10)].cls, ElementClass::void_element);
  EXPECT_EQ(map.elements[m.element_id(0, 0)].cls, ElementClass::standard);
  for (const auto& info : map.elements) {
    EXPECT_GE(info.material_fraction, 0.0);
    EXPECT_LE(info.material_fraction, 1.0 + 1e-14);
  }
}

TEST(Quadrature, PlanWeightsCoverParentSquare) {
  const StructuredMesh m = unit_mesh(10);
  DefectSet d = one_crack({0.52, 0.55}, 0.4, 0.3);
  const EnrichmentMap map = classify(m, d);
  for (int e = 0; e < static_cast<int>(m.elements.size()); ++e) {
    const QuadraturePlan plan = build_quadrature(m, map, e);
    EXPECT_NEAR(plan.weight_sum(), 4.0, 1e-13) << "element " << e << " " << to_string(map.elements[e].cls);
    for (const auto& q : plan.points) {
      EXPECT_LE(std::abs(q.parent.x()), 1.0 + 1e-14);
      EXPECT_LE(std::abs(q.parent.y()), 1.0 + 1e-14);
    }
  }
}

TEST(Quadrature, MaterialAreaApproachesPlateMinusHoles) {
  DefectSet d = one_circle({0.5, 0.5}, 0.2);
  d.cutouts.push_back(EllipseCutout{{0.2, 0.2}, 0.1, 0.05, 0.5});
  const double exact = 1.0 - std::numbers::pi * (0.04 + 0.005);
  double previous_error = 1.0;
  for (int n : {10, 20, 40}) {
    const StructuredMesh m = unit_mesh(n);
    const EnrichmentMap map = classify(m, d);
    double area = 0.0;
    for (int e = 0; e < static_cast<int>(m.elements.size()); ++e) {
      area += build_quadrature(m, map, e).weight_sum() * m.jacobian_determinant();
    }
    const double error = std::abs(area - exact);
    EXPECT_LT(error, previous_error);
    previous_error = error;
  }
  EXPECT_LT(previous_error / exact, 2e-3);
}

TEST(Perturbation, TipOnNodeIsShifted) {
  const StructuredMesh m = unit_mesh(10);
  const DefectSet d = one_crack({0.5, 0.5}, 0.2, 0.0);
  const auto [moved, perturbed] = perturb_degenerate(m, d);
  EXPECT_TRUE(perturbed);
  const double shift = (moved.cracks[0].center - d.cracks[0].center).norm();
  EXPECT_GT(shift, 0.0);
  EXPECT_LT(shift, 8e-10 * 0.1 * std::sqrt(2.0) * (1 + 1e-12));
  const EnrichmentMap map = classify(m, d);
  EXPECT_TRUE(map.perturbed);
  EXPECT_EQ(map.count(ElementClass::tip), 2u);
}

TEST(Perturbation, DiagonalCrackThroughNodes) {
  const StructuredMesh m = unit_mesh(10);
  const EnrichmentMap map = classify(m, one_crack({0.5, 0.5}, 0.4 * std::sqrt(2.0), std::numbers::pi / 4));
  EXPECT_TRUE(map.perturbed);
  EXPECT_EQ(map.count(ElementClass::tip), 2u);
  EXPECT_GT(map.count(ElementClass::split), 0u);
}

TEST(Perturbation, CleanPlacementIsUntouched) {
  const StructuredMesh m = unit_mesh(10);
  const DefectSet d = one_crack({0.52, 0.55}, 0.4, 0.0);
  const auto [moved, perturbed] = perturb_degenerate(m, d);
  EXPECT_FALSE(perturbed);
  EXPECT_EQ(moved.cracks[0].center, d.cracks[0].center);
}

TEST(Classify, VoidCountMatchesBruteForceSignTest) {
  const StructuredMesh m = unit_mesh(40);
  const EnrichmentMap map = classify(m, one_circle({0.5, 0.5}, 0.1));
  const CutoutSpec& used = map.defects.cutouts[0];
  std::size_t expected = 0;
  for (const auto& conn : m.elements) {
    bool all_inside = true;
    for (int n : conn) {
      const Vec2 d = m.nodes[n] - cutout_center(used);
      all_inside = all_inside && d.squaredNorm() < 0.01;
    }
    expected += all_inside ? 1 : 0;
  }
  EXPECT_GT(expected, 0u);
  EXPECT_EQ(map.count(ElementClass::void_element), expected);
}

TEST(Classify, CrackElementsMatchBruteForceSampling) {
  const StructuredMesh m = unit_mesh(10);
  const CrackSpec crack{{0.48, 0.43}, 0.46, 0.0};
  const EnrichmentMap map = classify(m, DefectSet{{crack}, {}});
  std::size_t split = 0, tip = 0;
  for (int e = 0; e < static_cast<int>(m.elements.size()); ++e) {
    const Vec2 lo = m.element_origin(e), hi = lo + Vec2(m.dx(), m.dy());
    auto inside = [&](const Vec2& p) {
      return p.x() > lo.x() && p.x() < hi.x() && p.y() > lo.y() && p.y() < hi.y();
    };
    bool touched = false;
    for (int s = 0; s <= 4000; ++s) touched = touched || inside(crack.tip(0) + (s / 4000.0) * (crack.tip(1) - crack.tip(0)));
    if (!touched) continue;
    (inside(crack.tip(0)) || inside(crack.tip(1)) ? tip : split) += 1;
  }
  EXPECT_EQ(tip, 2u);
  EXPECT_EQ(map.count(ElementClass::tip), tip);
  EXPECT_EQ(map.count(ElementClass::split), split);
}

TEST(Classify, DeterministicAndMirrorSymmetric) {
  const StructuredMesh m = unit_mesh(10);
  const DefectSet up = one_crack({0.52, 0.57}, 0.43, 0.3);
  const DefectSet down = one_crack({0.52, 0.43}, 0.43, -0.3);
  const EnrichmentMap a = classify(m, up), again = classify(m, up), b = classify(m, down);
  for (int j = 0; j < 10; ++j) {
    for (int i = 0; i < 10; ++i) {
      const int e = m.element_id(i, j), f = m.element_id(i, 9 - j);
      EXPECT_EQ(a.elements[e].cls, again.elements[e].cls);
      EXPECT_EQ(a.elements[e].cls, b.elements[f].cls) << i << "," << j;
      EXPECT_EQ(a.elements[e].tip, b.elements[f].tip);
    }
  }
  for (int j = 0; j <= 10; ++j) {
    for (int i = 0; i <= 10; ++i) {
      const auto& na = a.nodes[m.node_id(i, j)];
      const auto& nb = b.nodes[m.node_id(i, 10 - j)];
      EXPECT_EQ(na.heaviside, nb.heaviside);
      EXPECT_EQ(na.tips, nb.tips);
    }
  }
}

TEST(Classify, NoNodeIsHeavisideAndTipForOneCrack) {
  const StructuredMesh m = unit_mesh(20);
  DefectSet d = one_crack({0.3, 0.3}, 0.3, 0.7);
  d.cracks.push_back({{0.7, 0.66}, 0.27, -1.1});
  const EnrichmentMap map = classify(m, d);
  for (const auto& n : map.nodes) {
    for (const TipKey& t : n.tips) {
      EXPECT_EQ(std::count(n.heaviside.begin(), n.heaviside.end(), t.crack), 0);
    }
  }
}

TEST(Quadrature, TipElementFanHas52Points) {
  // A tip near the element centre with the crack leaving through one edge:
  // the fan has five triangles around the tip, the square's four corners
  // plus the exit point.
  const StructuredMesh m = unit_mesh(10);
  const EnrichmentMap map = classify(m, one_crack({0.395, 0.55}, 0.2, std::numbers::pi));
  int tips = 0;
  for (int e = 0; e < 100; ++e) {
    if (map.elements[e].cls != ElementClass::tip) continue;
    const QuadraturePlan plan = build_quadrature(m, map, e);
    EXPECT_EQ(plan.points.size(), 13u * plan.triangles);
    EXPECT_EQ(plan.triangles, 5);
    ++tips;
  }
  EXPECT_EQ(tips, 2);
  // Standard element: 2 x 2 Gauss.
  EXPECT_EQ(build_quadrature(m, map, 0).points.size(), 4u);
}

TEST(Quadrature, CutoutPlansIntegrateRetainedArea) {
  const StructuredMesh m = unit_mesh(40);
  const EnrichmentMap map = classify(m, one_circle({0.5, 0.5}, 0.17));
  int cut = 0;
  for (int e = 0; e < static_cast<int>(m.elements.size()); ++e) {
    if (map.elements[e].cls != ElementClass::cut_by_cutout) continue;
    ++cut;
    double area = 0.0;
    for (const auto& t : detail::cutout_material_triangles(m, e, map.defects, map.elements[e].cutouts)) {
      area += t.area();
    }
    const QuadraturePlan plan = build_quadrature(m, map, e);
    EXPECT_NEAR(plan.weight_sum(), area, 1e-12);
    EXPECT_NEAR(map.elements[e].material_fraction, area / 4.0, 1e-12);
    EXPECT_GT(area, 0.0);
    EXPECT_LT(area, 4.0);
    for (const auto& q : plan.points) EXPECT_GT(q.weight, 0.0);
  }
  EXPECT_GT(cut, 0);
}
