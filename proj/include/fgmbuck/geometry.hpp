#pragma once

// Structured plate mesh, mesh-independent cracks and cutouts, enrichment
// classification and per-element quadrature plans.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "fgmbuck/errors.hpp"
#include "fgmbuck/quadrature.hpp"

namespace fgmbuck {

using Vec2 = Eigen::Vector2d;

struct PlateGeometry {
  double a = 1.0;  // length along x
  double b = 1.0;  // width along y
  double h = 0.01;

  void validate() const {
    if (!(a > 0.0 && b > 0.0 && h > 0.0)) throw ConfigError("geometry", "plate dimensions must be positive");
  }
};

// Nodes are numbered row-major, node (i, j) = j * (nx + 1) + i. Element
// connectivity is counter-clockwise starting at the lower-left corner, which
// matches the parent corners (-1,-1), (1,-1), (1,1), (-1,1).
struct StructuredMesh {
  int nx = 0;
  int ny = 0;
  double a = 0.0;
  double b = 0.0;
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 4>> elements;

  double dx() const { return a / nx; }
  double dy() const { return b / ny; }
  int node_id(int i, int j) const { return j * (nx + 1) + i; }
  int element_id(int i, int j) const { return j * nx + i; }
  int element_column(int e) const { return e % nx; }
  int element_row(int e) const { return e / nx; }

  Vec2 element_origin(int e) const { return nodes[elements[e][0]]; }

  Vec2 to_physical(int e, const Vec2& parent) const {
    const Vec2 o = element_origin(e);
    return {o.x() + 0.5 * (parent.x() + 1.0) * dx(), o.y() + 0.5 * (parent.y() + 1.0) * dy()};
  }

  Vec2 to_parent(int e, const Vec2& x) const {
    const Vec2 o = element_origin(e);
    return {2.0 * (x.x() - o.x()) / dx() - 1.0, 2.0 * (x.y() - o.y()) / dy() - 1.0};
  }

  /// |J| of the parent-to-physical map, constant for the axis-aligned grid.
  double jacobian_determinant() const { return 0.25 * dx() * dy(); }

  /// Elements sharing node n.
  std::vector<int> node_elements(int n) const {
    const int i = n % (nx + 1), j = n / (nx + 1);
    std::vector<int> out;
    for (int jj = j - 1; jj <= j; ++jj) {
      for (int ii = i - 1; ii <= i; ++ii) {
        if (ii >= 0 && ii < nx && jj >= 0 && jj < ny) out.push_back(element_id(ii, jj));
      }
    }
    return out;
  }
};

inline StructuredMesh generate_mesh(const PlateGeometry& geometry, int nx, int ny) {
  if (nx < 1 || ny < 1) throw ConfigError("geometry", "mesh subdivisions must be >= 1");
  geometry.validate();
  StructuredMesh mesh;
  mesh.nx = nx;
  mesh.ny = ny;
  mesh.a = geometry.a;
  mesh.b = geometry.b;
  mesh.nodes.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      mesh.nodes.emplace_back(geometry.a * i / nx, geometry.b * j / ny);
    }
  }
  mesh.elements.reserve(static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      mesh.elements.push_back({mesh.node_id(i, j), mesh.node_id(i + 1, j), mesh.node_id(i + 1, j + 1),
                               mesh.node_id(i, j + 1)});
    }
  }
  return mesh;
}

// ---------------------------------------------------------------------------
// Defects

/// Straight through-thickness crack with two interior tips. Tip 0 sits at
/// center - length/2 * tangent, tip 1 at center + length/2 * tangent.
struct CrackSpec {
  Vec2 center{0.5, 0.5};
  double length = 0.1;
  double angle = 0.0;  // radians from +x

  Vec2 tangent() const { return {std::cos(angle), std::sin(angle)}; }
  Vec2 normal() const { return {-std::sin(angle), std::cos(angle)}; }
  Vec2 tip(int id) const { return center + (id == 0 ? -0.5 : 0.5) * length * tangent(); }
  /// Direction in which the crack would extend beyond tip `id`.
  Vec2 extension(int id) const { return id == 0 ? Vec2(-tangent()) : tangent(); }
};

struct CircleCutout {
  Vec2 center{0.5, 0.5};
  double radius = 0.1;
};

/// Ellipse with semi-axis d along the direction `angle` and e across it.
struct EllipseCutout {
  Vec2 center{0.5, 0.5};
  double d = 0.1;
  double e = 0.05;
  double angle = 0.0;
};

using CutoutSpec = std::variant<CircleCutout, EllipseCutout>;

struct DefectSet {
  std::vector<CrackSpec> cracks;
  std::vector<CutoutSpec> cutouts;

  bool empty() const { return cracks.empty() && cutouts.empty(); }
  std::size_t size() const { return cracks.size() + cutouts.size(); }
};

struct CrackLocal {
  double normal;      // signed distance, positive on the +90 deg side of the tangent
  double tangential;  // along the tangent, from the crack center
};

inline CrackLocal crack_local_coords(const Vec2& point, const CrackSpec& crack) {
  const Vec2 d = point - crack.center;
  return {d.dot(crack.normal()), d.dot(crack.tangent())};
}

/// Sign of the normal distance; points exactly on the line count as +1.
inline int heaviside(const Vec2& point, const CrackSpec& crack) {
  return crack_local_coords(point, crack).normal >= 0.0 ? 1 : -1;
}

struct TipPolar {
  double r;
  double theta;  // (-pi, pi], zero along the extension beyond the tip
};

inline TipPolar tip_polar(const Vec2& point, const CrackSpec& crack, int tip_id) {
  if (tip_id != 0 && tip_id != 1) throw DomainError("geometry", "tip id must be 0 or 1");
  const Vec2 e = crack.extension(tip_id);
  const Vec2 n(-e.y(), e.x());
  const Vec2 d = point - crack.tip(tip_id);
  const double r = d.norm();
  if (r == 0.0) throw GeometryError("geometry", "point coincides with a crack tip");
  double theta = std::atan2(d.dot(n), d.dot(e));
  if (theta <= -std::numbers::pi) theta = std::numbers::pi;
  return {r, theta};
}

inline double level_set_circle(const Vec2& x, const CircleCutout& c) { return (x - c.center).norm() - c.radius; }

/// Quadratic-form coefficients (a1, a2, a3) of the rotated ellipse so that
/// phi = sqrt(a1 dx^2 - a2 dx dy + a3 dy^2) - 1.
inline std::array<double, 3> ellipse_coefficients(const EllipseCutout& c) {
  const double cs = std::cos(c.angle), sn = std::sin(c.angle);
  const double id2 = 1.0 / (c.d * c.d), ie2 = 1.0 / (c.e * c.e);
  return {cs * cs * id2 + sn * sn * ie2, 2.0 * cs * sn * (ie2 - id2), sn * sn * id2 + cs * cs * ie2};
}

inline double level_set_ellipse(const Vec2& x, const EllipseCutout& c) {
  const auto [a1, a2, a3] = ellipse_coefficients(c);
  const double dx = x.x() - c.center.x(), dy = x.y() - c.center.y();
  const double q = a1 * dx * dx - a2 * dx * dy + a3 * dy * dy;
  if (q < -1e-14) throw InternalError("geometry", "negative ellipse radicand");
  return std::sqrt(std::max(q, 0.0)) - 1.0;
}

inline double level_set(const Vec2& x, const CutoutSpec& c) {
  return std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, CircleCutout>) {
          return level_set_circle(x, s);
        } else {
          return level_set_ellipse(x, s);
        }
      },
      c);
}

inline Vec2 cutout_center(const CutoutSpec& c) {
  return std::visit([](const auto& s) { return s.center; }, c);
}

inline double cutout_area(const CutoutSpec& c) {
  return std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, CircleCutout>) {
          return std::numbers::pi * s.radius * s.radius;
        } else {
          return std::numbers::pi * s.d * s.e;
        }
      },
      c);
}

/// Half extents of the cutout's axis-aligned bounding box.
inline Vec2 cutout_half_extent(const CutoutSpec& c) {
  return std::visit(
      [](const auto& s) -> Vec2 {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, CircleCutout>) {
          return {s.radius, s.radius};
        } else {
          const double cs = std::cos(s.angle), sn = std::sin(s.angle);
          return {std::hypot(s.d * cs, s.e * sn), std::hypot(s.d * sn, s.e * cs)};
        }
      },
      c);
}

namespace detail {

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

inline bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  const double d1 = cross2(q2 - q1, p1 - q1), d2 = cross2(q2 - q1, p2 - q1);
  const double d3 = cross2(p2 - p1, q1 - p1), d4 = cross2(p2 - p1, q2 - p1);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

inline double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

/// Minimum of the level set along a segment, found by dense sampling followed
/// by golden-section refinement. Good enough for intersection screening.
inline double min_level_set_on_segment(const Vec2& a, const Vec2& b, const CutoutSpec& c) {
  constexpr int samples = 400;
  double best = level_set(a, c);
  int best_i = 0;
  for (int i = 1; i <= samples; ++i) {
    const double v = level_set(a + (b - a) * (double(i) / samples), c);
    if (v < best) {
      best = v;
      best_i = i;
    }
  }
  double lo = std::max(0, best_i - 1) / double(samples), hi = std::min(samples, best_i + 1) / double(samples);
  for (int it = 0; it < 60; ++it) {
    const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
    if (level_set(a + (b - a) * m1, c) < level_set(a + (b - a) * m2, c)) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  return std::min(best, level_set(a + (b - a) * (0.5 * (lo + hi)), c));
}

inline std::vector<Vec2> cutout_boundary_samples(const CutoutSpec& c, int count) {
  std::vector<Vec2> pts;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        for (int i = 0; i < count; ++i) {
          const double t = 2.0 * std::numbers::pi * i / count;
          if constexpr (std::is_same_v<T, CircleCutout>) {
            pts.push_back(s.center + s.radius * Vec2(std::cos(t), std::sin(t)));
          } else {
            const double cs = std::cos(s.angle), sn = std::sin(s.angle);
            const Vec2 local(s.d * std::cos(t), s.e * std::sin(t));
            pts.push_back(s.center + Vec2(cs * local.x() - sn * local.y(), sn * local.x() + cs * local.y()));
          }
        }
      },
      c);
  return pts;
}

}  // namespace detail

/// Placement checks that do not depend on the mesh. Returns every problem
/// found, each naming the defect.
inline std::vector<std::string> validate_defects(const PlateGeometry& plate, const DefectSet& defects) {
  std::vector<std::string> errors;
  auto inside = [&](const Vec2& p) { return p.x() > 0.0 && p.x() < plate.a && p.y() > 0.0 && p.y() < plate.b; };
  for (std::size_t i = 0; i < defects.cracks.size(); ++i) {
    const CrackSpec& c = defects.cracks[i];
    const std::string id = "crack " + std::to_string(i);
    if (!(c.length > 0.0)) {
      errors.push_back(id + ": length must be positive");
      continue;
    }
    if (!inside(c.tip(0)) || !inside(c.tip(1))) errors.push_back(id + ": endpoint outside the plate");
  }
  for (std::size_t i = 0; i < defects.cutouts.size(); ++i) {
    const CutoutSpec& c = defects.cutouts[i];
    const std::string id = "cutout " + std::to_string(i);
    const bool positive = std::visit(
        [](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, CircleCutout>) {
            return s.radius > 0.0;
          } else {
            return s.d > 0.0 && s.e > 0.0;
          }
        },
        c);
    if (!positive) {
      errors.push_back(id + ": size must be positive");
      continue;
    }
    const Vec2 ctr = cutout_center(c), half = cutout_half_extent(c);
    if (!(ctr.x() - half.x() > 0.0 && ctr.x() + half.x() < plate.a && ctr.y() - half.y() > 0.0 &&
          ctr.y() + half.y() < plate.b)) {
      errors.push_back(id + ": boundary not strictly inside the plate");
    }
  }
  if (!errors.empty()) return errors;

  for (std::size_t i = 0; i < defects.cracks.size(); ++i) {
    for (std::size_t j = i + 1; j < defects.cracks.size(); ++j) {
      const CrackSpec &p = defects.cracks[i], &q = defects.cracks[j];
      if (detail::segments_intersect(p.tip(0), p.tip(1), q.tip(0), q.tip(1))) {
        errors.push_back("crack " + std::to_string(i) + " intersects crack " + std::to_string(j));
      }
    }
    for (std::size_t k = 0; k < defects.cutouts.size(); ++k) {
      const CrackSpec& p = defects.cracks[i];
      if (detail::min_level_set_on_segment(p.tip(0), p.tip(1), defects.cutouts[k]) <= 0.0) {
        errors.push_back("crack " + std::to_string(i) + " intersects cutout " + std::to_string(k));
      }
    }
  }
  for (std::size_t i = 0; i < defects.cutouts.size(); ++i) {
    for (std::size_t j = i + 1; j < defects.cutouts.size(); ++j) {
      bool overlap = level_set(cutout_center(defects.cutouts[i]), defects.cutouts[j]) <= 0.0 ||
                     level_set(cutout_center(defects.cutouts[j]), defects.cutouts[i]) <= 0.0;
      for (const Vec2& p : detail::cutout_boundary_samples(defects.cutouts[i], 720)) {
        if (overlap) break;
        overlap = level_set(p, defects.cutouts[j]) <= 0.0;
      }
      if (overlap) errors.push_back("cutout " + std::to_string(i) + " overlaps cutout " + std::to_string(j));
    }
  }
  return errors;
}

// ---------------------------------------------------------------------------
// Enrichment classification

enum class ElementClass {
  standard,
  split,
  tip,
  tip_blending,
  split_blending,
  split_tip_blending,
  cut_by_cutout,
  void_element,
};

inline const char* to_string(ElementClass c) {
  switch (c) {
    case ElementClass::standard: return "standard";
    case ElementClass::split: return "split";
    case ElementClass::tip: return "tip";
    case ElementClass::tip_blending: return "tip_blending";
    case ElementClass::split_blending: return "split_blending";
    case ElementClass::split_tip_blending: return "split_tip_blending";
    case ElementClass::cut_by_cutout: return "cut_by_cutout";
    case ElementClass::void_element: return "void";
  }
  return "unknown";
}

struct TipKey {
  int crack;
  int tip;
  auto operator<=>(const TipKey&) const = default;
};

struct NodeEnrichment {
  std::vector<int> heaviside;  // crack ids
  std::vector<TipKey> tips;
  bool inactive = false;  // support entirely (or numerically) void

  bool enriched() const { return !heaviside.empty() || !tips.empty(); }
};

struct ElementInfo {
  ElementClass cls = ElementClass::standard;
  int crack = -1;  // crack cutting a split/tip element
  int tip = -1;    // tip id inside a tip element
  std::vector<int> cutouts;  // cutouts whose boundary crosses the element
  double material_fraction = 1.0;
};

struct EnrichmentMap {
  DefectSet defects;  // possibly perturbed copy actually used
  bool perturbed = false;
  std::vector<NodeEnrichment> nodes;
  std::vector<ElementInfo> elements;

  std::size_t count(ElementClass c) const {
    return static_cast<std::size_t>(
        std::count_if(elements.begin(), elements.end(), [&](const ElementInfo& e) { return e.cls == c; }));
  }
  std::size_t heaviside_node_count() const {
    std::size_t n = 0;
    for (const auto& nd : nodes) n += nd.heaviside.size();
    return n;
  }
  std::size_t tip_node_count() const {
    std::size_t n = 0;
    for (const auto& nd : nodes) n += nd.tips.size();
    return n;
  }
  std::size_t inactive_node_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes.begin(), nodes.end(), [](const NodeEnrichment& n) { return n.inactive; }));
  }
};

// Polygon helpers in element parent coordinates.
namespace detail {

using Polygon = std::vector<Vec2>;

struct Triangle {
  Vec2 a, b, c;
  double area() const { return 0.5 * cross2(b - a, c - a); }
};

inline Polygon parent_square() { return {{-1.0, -1.0}, {1.0, -1.0}, {1.0, 1.0}, {-1.0, 1.0}}; }

inline double polygon_area(const Polygon& p) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += cross2(p[i], p[(i + 1) % p.size()]);
  return 0.5 * s;
}

/// Keeps the part of a convex polygon where the affine function f is >= 0.
template <typename F>
Polygon clip_polygon(const Polygon& poly, F&& f) {
  Polygon out;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % n];
    const double fp = f(p), fq = f(q);
    if (fp >= 0.0) out.push_back(p);
    if ((fp >= 0.0) != (fq >= 0.0)) {
      const double t = fp / (fp - fq);
      out.push_back(p + t * (q - p));
    }
  }
  return out;
}

inline std::vector<Triangle> fan_from_centroid(const Polygon& poly) {
  std::vector<Triangle> tris;
  if (poly.size() < 3) return tris;
  Vec2 c = Vec2::Zero();
  for (const Vec2& p : poly) c += p;
  c /= static_cast<double>(poly.size());
  for (std::size_t i = 0; i < poly.size(); ++i) tris.push_back({c, poly[i], poly[(i + 1) % poly.size()]});
  return tris;
}

inline std::vector<Triangle> fan_from_point(const Vec2& apex, const Polygon& boundary) {
  std::vector<Triangle> tris;
  for (std::size_t i = 0; i < boundary.size(); ++i) tris.push_back({apex, boundary[i], boundary[(i + 1) % boundary.size()]});
  return tris;
}

/// Liang-Barsky clip of segment p0 -> p1 to the axis-aligned box. Returns the
/// parameter interval inside the box, if any.
inline std::optional<std::pair<double, double>> clip_segment_to_box(const Vec2& p0, const Vec2& p1, const Vec2& lo,
                                                                   const Vec2& hi) {
  double t0 = 0.0, t1 = 1.0;
  const Vec2 d = p1 - p0;
  const double p[4] = {-d.x(), d.x(), -d.y(), d.y()};
  const double q[4] = {p0.x() - lo.x(), hi.x() - p0.x(), p0.y() - lo.y(), hi.y() - p0.y()};
  for (int k = 0; k < 4; ++k) {
    if (p[k] == 0.0) {
      if (q[k] < 0.0) return std::nullopt;
      continue;
    }
    const double t = q[k] / p[k];
    if (p[k] < 0.0) {
      t0 = std::max(t0, t);
    } else {
      t1 = std::min(t1, t);
    }
  }
  if (t0 >= t1) return std::nullopt;
  return std::make_pair(t0, t1);
}

inline bool strictly_inside_box(const Vec2& p, const Vec2& lo, const Vec2& hi) {
  return p.x() > lo.x() && p.x() < hi.x() && p.y() > lo.y() && p.y() < hi.y();
}

/// Two convex pieces of the parent square on either side of a crack line
/// (negative side first).
inline std::array<Polygon, 2> split_square(const StructuredMesh& mesh, int e, const CrackSpec& crack) {
  auto side = [&](double sign) {
    return [&mesh, e, &crack, sign](const Vec2& p) {
      return sign * crack_local_coords(mesh.to_physical(e, p), crack).normal;
    };
  };
  return {clip_polygon(parent_square(), side(-1.0)), clip_polygon(parent_square(), side(1.0))};
}

/// Tip-centred fan over the parent square with the crack exit point inserted
/// on the boundary, so the crack faces are triangle edges.
inline std::vector<Triangle> tip_fan(const StructuredMesh& mesh, int e, const CrackSpec& crack, int tip) {
  const Vec2 t = mesh.to_parent(e, crack.tip(tip));
  const Vec2 other = mesh.to_parent(e, crack.tip(1 - tip));
  const auto range = clip_segment_to_box(t, other, Vec2(-1.0, -1.0), Vec2(1.0, 1.0));
  Polygon boundary = parent_square();
  if (range) {
    const Vec2 exit = t + range->second * (other - t);
    const bool exits = range->second < 1.0;
    if (!exits) throw ConfigError("geometry", "both crack tips lie in one element; refine the mesh");
    for (std::size_t i = 0; i < boundary.size(); ++i) {
      const Vec2& p = boundary[i];
      const Vec2& q = boundary[(i + 1) % boundary.size()];
      const double len = (q - p).norm();
      const double along = (exit - p).dot(q - p) / len;
      const double off = std::abs(cross2(q - p, exit - p)) / len;
      if (off < 1e-12 && along > 1e-12 && along < len - 1e-12) {
        boundary.insert(boundary.begin() + static_cast<std::ptrdiff_t>(i + 1), exit);
        break;
      }
    }
  }
  return fan_from_point(t, boundary);
}

/// Affine interpolant over a triangle from three vertex values.
struct AffineField {
  double c0 = 0.0;
  Vec2 grad = Vec2::Zero();

  static AffineField fit(const Triangle& t, double fa, double fb, double fc) {
    Eigen::Matrix3d m;
    m << 1.0, t.a.x(), t.a.y(), 1.0, t.b.x(), t.b.y(), 1.0, t.c.x(), t.c.y();
    const Eigen::Vector3d coef = m.partialPivLu().solve(Eigen::Vector3d(fa, fb, fc));
    return {coef(0), Vec2(coef(1), coef(2))};
  }
  double operator()(const Vec2& p) const { return c0 + grad.dot(p); }
};

/// Retained (material) triangles of an element crossed by cutout boundaries.
/// The element is fanned into four triangles from its centre; on each the
/// level sets are linear interpolants of the bilinear nodal field.
inline std::vector<Triangle> cutout_material_triangles(const StructuredMesh& mesh, int e, const DefectSet& defects,
                                                       const std::vector<int>& cutouts) {
  const Polygon sq = parent_square();
  std::vector<std::array<double, 4>> corner_phi;
  for (int k : cutouts) {
    std::array<double, 4> phi{};
    for (int c = 0; c < 4; ++c) phi[c] = level_set(mesh.nodes[mesh.elements[e][c]], defects.cutouts[k]);
    corner_phi.push_back(phi);
  }
  std::vector<Triangle> out;
  for (int c = 0; c < 4; ++c) {
    const Triangle base{Vec2::Zero(), sq[c], sq[(c + 1) % 4]};
    Polygon piece = {base.a, base.b, base.c};
    for (const auto& phi : corner_phi) {
      const double centre = 0.25 * (phi[0] + phi[1] + phi[2] + phi[3]);
      const AffineField f = AffineField::fit(base, centre, phi[c], phi[(c + 1) % 4]);
      piece = clip_polygon(piece, f);
      if (piece.size() < 3) break;
    }
    for (const Triangle& t : fan_from_centroid(piece)) out.push_back(t);
  }
  return out;
}

}  // namespace detail

struct ClassifyOptions {
  double heaviside_area_tolerance = 1e-4;  // min support fraction on the minor side
  double inactive_support_tolerance = 1e-6;
};

namespace detail {

inline bool is_degenerate(const StructuredMesh& mesh, const DefectSet& defects, double tol) {
  for (const CrackSpec& c : defects.cracks) {
    for (int t = 0; t < 2; ++t) {
      const Vec2 p = c.tip(t);
      const double fi = p.x() / mesh.dx(), fj = p.y() / mesh.dy();
      if (std::abs(fi - std::round(fi)) * mesh.dx() < tol || std::abs(fj - std::round(fj)) * mesh.dy() < tol) {
        return true;
      }
    }
    for (const Vec2& n : mesh.nodes) {
      if (point_segment_distance(n, c.tip(0), c.tip(1)) < tol) return true;
    }
  }
  for (const CutoutSpec& c : defects.cutouts) {
    const Vec2 half = cutout_half_extent(c);
    const double scale = std::min(half.x(), half.y());
    for (const Vec2& n : mesh.nodes) {
      if (std::abs(level_set(n, c)) * scale < tol) return true;
    }
  }
  return false;
}

inline DefectSet shifted(const DefectSet& defects, const Vec2& delta) {
  DefectSet out = defects;
  for (CrackSpec& c : out.cracks) c.center += delta;
  for (CutoutSpec& c : out.cutouts) std::visit([&](auto& s) { s.center += delta; }, c);
  return out;
}

}  // namespace detail

/// Nudges defects that touch mesh nodes or lines by 1e-10 of the element size
/// so the classification never meets an exact tie.
inline std::pair<DefectSet, bool> perturb_degenerate(const StructuredMesh& mesh, const DefectSet& defects) {
  const double h = std::min(mesh.dx(), mesh.dy());
  const double tol = 1e-11 * h;
  if (!detail::is_degenerate(mesh, defects, tol)) return {defects, false};
  // A diagonal shift first; the other directions handle defects that run
  // along a diagonal of the grid.
  const std::array<Vec2, 4> directions = {Vec2(1.0, 1.0), Vec2(1.0, -1.0), Vec2(1.0, 0.5), Vec2(-0.5, 1.0)};
  for (int k = 1; k <= 8; ++k) {
    for (const Vec2& d : directions) {
      DefectSet moved = detail::shifted(defects, k * 1e-10 * h * d);
      if (!detail::is_degenerate(mesh, moved, tol)) return {moved, true};
    }
  }
  throw GeometryError("geometry", "could not resolve degenerate defect placement");
}

inline EnrichmentMap classify(const StructuredMesh& mesh, const DefectSet& input, const ClassifyOptions& options = {}) {
  EnrichmentMap map;
  std::tie(map.defects, map.perturbed) = perturb_degenerate(mesh, input);
  const DefectSet& defects = map.defects;
  const std::size_t n_el = mesh.elements.size();
  map.nodes.assign(mesh.nodes.size(), {});
  map.elements.assign(n_el, {});

  // Cutouts: nodal level sets decide void and cut elements.
  for (std::size_t k = 0; k < defects.cutouts.size(); ++k) {
    std::vector<double> phi(mesh.nodes.size());
    bool resolved = false;
    for (std::size_t n = 0; n < mesh.nodes.size(); ++n) {
      phi[n] = level_set(mesh.nodes[n], defects.cutouts[k]);
      resolved = resolved || phi[n] < 0.0;
    }
    if (!resolved) throw ConfigError("geometry", "cutout " + std::to_string(k) + " is not resolved by the mesh");
    for (std::size_t e = 0; e < n_el; ++e) {
      int negative = 0;
      for (int c = 0; c < 4; ++c) negative += phi[mesh.elements[e][c]] < 0.0 ? 1 : 0;
      if (negative == 4) {
        map.elements[e].cls = ElementClass::void_element;
      } else if (negative > 0) {
        map.elements[e].cutouts.push_back(static_cast<int>(k));
      }
    }
  }
  for (ElementInfo& info : map.elements) {
    if (info.cls == ElementClass::void_element) {
      info.cutouts.clear();
      info.material_fraction = 0.0;
    } else if (!info.cutouts.empty()) {
      info.cls = ElementClass::cut_by_cutout;
    }
  }
  for (std::size_t e = 0; e < n_el; ++e) {
    ElementInfo& info = map.elements[e];
    if (info.cls != ElementClass::cut_by_cutout) continue;
    double area = 0.0;
    for (const auto& t : detail::cutout_material_triangles(mesh, static_cast<int>(e), defects, info.cutouts)) {
      area += t.area();
    }
    info.material_fraction = area / 4.0;
  }

  // Cracks: geometric intersection with each element box.
  for (std::size_t k = 0; k < defects.cracks.size(); ++k) {
    const CrackSpec& crack = defects.cracks[k];
    const Vec2 p0 = crack.tip(0), p1 = crack.tip(1);
    for (std::size_t e = 0; e < n_el; ++e) {
      const Vec2 lo = mesh.element_origin(static_cast<int>(e));
      const Vec2 hi = lo + Vec2(mesh.dx(), mesh.dy());
      if (p0.x() < lo.x() && p1.x() < lo.x()) continue;
      if (p0.x() > hi.x() && p1.x() > hi.x()) continue;
      if (p0.y() < lo.y() && p1.y() < lo.y()) continue;
      if (p0.y() > hi.y() && p1.y() > hi.y()) continue;
      if (!detail::clip_segment_to_box(p0, p1, lo, hi)) continue;
      ElementInfo& info = map.elements[e];
      const std::string where = "element " + std::to_string(e) + ": ";
      if (info.cls == ElementClass::cut_by_cutout || info.cls == ElementClass::void_element) {
        throw ConfigError("geometry", where + "crack " + std::to_string(k) + " and a cutout share an element");
      }
      if (info.crack >= 0) {
        throw ConfigError("geometry", where + "cracks " + std::to_string(info.crack) + " and " + std::to_string(k) +
                                          " share an element");
      }
      const bool in0 = detail::strictly_inside_box(p0, lo, hi), in1 = detail::strictly_inside_box(p1, lo, hi);
      if (in0 && in1) throw ConfigError("geometry", "crack " + std::to_string(k) + " is shorter than one element");
      info.crack = static_cast<int>(k);
      if (in0 || in1) {
        info.cls = ElementClass::tip;
        info.tip = in0 ? 0 : 1;
      } else {
        info.cls = ElementClass::split;
      }
    }
  }

  // Topological tip enrichment, then Heaviside on split-element nodes.
  for (std::size_t e = 0; e < n_el; ++e) {
    const ElementInfo& info = map.elements[e];
    if (info.cls != ElementClass::tip) continue;
    for (int node : mesh.elements[e]) {
      auto& tips = map.nodes[node].tips;
      const TipKey key{info.crack, info.tip};
      if (std::find(tips.begin(), tips.end(), key) == tips.end()) tips.push_back(key);
    }
  }
  auto has_tip_of = [&](int node, int crack) {
    const auto& tips = map.nodes[node].tips;
    return std::any_of(tips.begin(), tips.end(), [&](const TipKey& t) { return t.crack == crack; });
  };
  std::vector<std::array<double, 2>> side_area(n_el, {0.0, 0.0});
  for (std::size_t e = 0; e < n_el; ++e) {
    if (map.elements[e].cls != ElementClass::split) continue;
    const auto pieces = detail::split_square(mesh, static_cast<int>(e), defects.cracks[map.elements[e].crack]);
    side_area[e] = {detail::polygon_area(pieces[0]), detail::polygon_area(pieces[1])};
  }
  for (std::size_t n = 0; n < mesh.nodes.size(); ++n) {
    std::vector<int> candidates;
    for (int e : mesh.node_elements(static_cast<int>(n))) {
      const ElementInfo& info = map.elements[e];
      if (info.cls == ElementClass::split && !has_tip_of(static_cast<int>(n), info.crack) &&
          std::find(candidates.begin(), candidates.end(), info.crack) == candidates.end()) {
        candidates.push_back(info.crack);
      }
    }
    for (int k : candidates) {
      // Skip nodes whose support lies (almost) entirely on one side.
      double minus = 0.0, plus = 0.0;
      for (int e : mesh.node_elements(static_cast<int>(n))) {
        const ElementInfo& info = map.elements[e];
        if (info.cls == ElementClass::split && info.crack == k) {
          minus += side_area[e][0];
          plus += side_area[e][1];
        } else {
          const Vec2 centre = mesh.to_physical(e, Vec2::Zero());
          (heaviside(centre, defects.cracks[k]) > 0 ? plus : minus) += 4.0 * info.material_fraction;
        }
      }
      if (std::min(minus, plus) >= options.heaviside_area_tolerance * (minus + plus)) {
        map.nodes[n].heaviside.push_back(k);
      }
    }
  }

  // Nodes without material support carry no active DOFs.
  for (std::size_t n = 0; n < mesh.nodes.size(); ++n) {
    const auto elems = mesh.node_elements(static_cast<int>(n));
    double fraction = 0.0;
    for (int e : elems) fraction += map.elements[e].material_fraction;
    fraction /= static_cast<double>(elems.size());
    if (fraction < options.inactive_support_tolerance) {
      map.nodes[n] = NodeEnrichment{};
      map.nodes[n].inactive = true;
    }
  }

  // Blending classes for unenriched-cut elements touching enriched nodes.
  for (std::size_t e = 0; e < n_el; ++e) {
    ElementInfo& info = map.elements[e];
    if (info.cls != ElementClass::standard) continue;
    bool heavi = false, tip = false;
    for (int node : mesh.elements[e]) {
      heavi = heavi || !map.nodes[node].heaviside.empty();
      tip = tip || !map.nodes[node].tips.empty();
    }
    if (heavi && tip) {
      info.cls = ElementClass::split_tip_blending;
    } else if (tip) {
      info.cls = ElementClass::tip_blending;
    } else if (heavi) {
      info.cls = ElementClass::split_blending;
    }
  }
  return map;
}

// ---------------------------------------------------------------------------
// Quadrature plans

enum class PlanKind { plain, triangulated, empty };

struct QuadPoint {
  Vec2 parent;
  double weight;  // parent-coordinate weight; multiply by |J| for physical
};

struct QuadraturePlan {
  std::vector<QuadPoint> points;
  PlanKind kind = PlanKind::empty;
  int triangles = 0;
  int dropped_triangles = 0;

  double weight_sum() const {
    double s = 0.0;
    for (const auto& p : points) s += p.weight;
    return s;
  }
};

inline QuadraturePlan plain_plan(int order) {
  QuadraturePlan plan;
  plan.kind = PlanKind::plain;
  const Rule1D g = gauss_legendre(order);
  for (int j = 0; j < order; ++j) {
    for (int i = 0; i < order; ++i) plan.points.push_back({Vec2(g.points[i], g.points[j]), g.weights[i] * g.weights[j]});
  }
  return plan;
}

/// Integrates over the union of parent-space triangles; triangles smaller than
/// 1e-14 of the element are dropped and counted.
inline QuadraturePlan triangulated_plan(const std::vector<detail::Triangle>& triangles, int points_per_triangle) {
  QuadraturePlan plan;
  plan.kind = PlanKind::triangulated;
  const TriangleRule& rule = triangle_rule(points_per_triangle);
  for (const auto& t : triangles) {
    const double area = t.area();
    if (std::abs(area) < 4.0e-14) {
      ++plan.dropped_triangles;
      continue;
    }
    if (area < 0.0) throw InternalError("geometry", "clockwise subcell triangle");
    ++plan.triangles;
    for (const auto& q : rule) {
      plan.points.push_back({q.l1 * t.a + q.l2 * t.b + q.l3 * t.c, q.weight * area});
    }
  }
  return plan;
}

/// Per-class integration rule: 2x2 Gauss for plain and split-blending
/// elements, 4x4 for tip blending, 3 points per subcell triangle for split
/// elements, 13 for tip elements and 4 for split-tip blending.
inline QuadraturePlan build_quadrature(const StructuredMesh& mesh, const EnrichmentMap& map, int e) {
  const ElementInfo& info = map.elements[e];
  switch (info.cls) {
    case ElementClass::standard:
    case ElementClass::split_blending:
      return plain_plan(2);
    case ElementClass::tip_blending:
      return plain_plan(4);
    case ElementClass::split_tip_blending:
      return triangulated_plan(detail::fan_from_centroid(detail::parent_square()), 4);
    case ElementClass::split: {
      std::vector<detail::Triangle> tris;
      for (const auto& piece : detail::split_square(mesh, e, map.defects.cracks[info.crack])) {
        for (const auto& t : detail::fan_from_centroid(piece)) tris.push_back(t);
      }
      return triangulated_plan(tris, 3);
    }
    case ElementClass::tip:
      return triangulated_plan(detail::tip_fan(mesh, e, map.defects.cracks[info.crack], info.tip), 13);
    case ElementClass::cut_by_cutout: {
      bool heavi = false, tip = false;
      for (int node : mesh.elements[e]) {
        heavi = heavi || !map.nodes[node].heaviside.empty();
        tip = tip || !map.nodes[node].tips.empty();
      }
      const int rule = tip ? 13 : (heavi ? 4 : 3);
      return triangulated_plan(detail::cutout_material_triangles(mesh, e, map.defects, info.cutouts), rule);
    }
    case ElementClass::void_element:
      return QuadraturePlan{};
  }
  throw InternalError("geometry", "unknown element class");
}

}  // namespace fgmbuck
