#pragma once

// Fixed quadrature rules shared by the thickness integration and the
// element-level subcell integration.

#include <array>
#include <cmath>
#include <vector>

#include <boost/math/special_functions/legendre.hpp>

#include "fgmbuck/errors.hpp"

namespace fgmbuck {

struct Rule1D {
  std::vector<double> points;
  std::vector<double> weights;
};

/// Gauss-Legendre rule with n points on [-1, 1], ascending abscissae.
inline Rule1D gauss_legendre(int n) {
  if (n < 1) throw DomainError("quadrature", "Gauss-Legendre order must be >= 1");
  Rule1D rule;
  if (n == 1) {
    rule.points = {0.0};
    rule.weights = {2.0};
    return rule;
  }
  const auto positive = boost::math::legendre_p_zeros<double>(n);
  std::vector<double> xs;
  xs.reserve(n);
  for (auto it = positive.rbegin(); it != positive.rend(); ++it) {
    if (*it != 0.0) xs.push_back(-*it);
  }
  for (double x : positive) xs.push_back(x);
  for (double x : xs) {
    const double dp = boost::math::legendre_p_prime(n, x);
    rule.points.push_back(x);
    rule.weights.push_back(2.0 / ((1.0 - x * x) * dp * dp));
  }
  return rule;
}

/// Integrates f over [lo, hi] with the given rule.
template <typename F>
double integrate_interval(F&& f, double lo, double hi, const Rule1D& rule) {
  const double half = 0.5 * (hi - lo);
  const double mid = 0.5 * (hi + lo);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.points.size(); ++i) {
    sum += rule.weights[i] * f(mid + half * rule.points[i]);
  }
  return sum * half;
}

// Triangle rules in barycentric coordinates; weights sum to 1 and are scaled
// by the triangle area at use.
struct TrianglePoint {
  double l1, l2, l3, weight;
};

using TriangleRule = std::vector<TrianglePoint>;

/// 3-point rule, exact for degree 2.
inline const TriangleRule& triangle_rule_3() {
  static const TriangleRule rule = {
      {2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0},
      {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0, 1.0 / 3.0},
      {1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0, 1.0 / 3.0},
  };
  return rule;
}

/// 4-point conical product rule (Stroud T2:3-1): 2-point Gauss-Jacobi in the
/// collapsed direction times 2-point Gauss-Legendre. Positive weights,
/// interior points, exact for degree 3.
inline const TriangleRule& triangle_rule_4() {
  static const TriangleRule rule = [] {
    TriangleRule r;
    const double s6 = std::sqrt(6.0);
    // Nodes and weights of the weight (1 - u) on [0, 1], the weights summing to 1/2.
    const double u[2] = {(4.0 - s6) / 10.0, (4.0 + s6) / 10.0};
    const double wu[2] = {(9.0 + s6) / 36.0, (9.0 - s6) / 36.0};
    const double v[2] = {0.5 * (1.0 - 1.0 / std::sqrt(3.0)), 0.5 * (1.0 + 1.0 / std::sqrt(3.0))};
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        // (u, v) on the unit square -> (s, t) = (u, v (1 - u)) on the triangle.
        const double s = u[i], t = v[j] * (1.0 - u[i]);
        r.push_back({1.0 - s - t, s, t, wu[i]});  // 2 * wu * (1/2)
      }
    }
    return r;
  }();
  return rule;
}

/// 13-point rule of degree 7 (Dunavant). The centroid weight is negative.
inline const TriangleRule& triangle_rule_13() {
  static const TriangleRule rule = [] {
    TriangleRule r;
    r.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, -0.149570044467682});
    auto add3 = [&](double a, double b, double w) {
      r.push_back({a, a, b, w});
      r.push_back({a, b, a, w});
      r.push_back({b, a, a, w});
    };
    add3(0.260345966079040, 0.479308067841920, 0.175615257433208);
    add3(0.065130102902216, 0.869739794195568, 0.053347235608838);
    const double a = 0.048690315425316, b = 0.312865496004874, c = 0.638444188569810;
    const double w = 0.077113760890257;
    r.push_back({a, b, c, w});
    r.push_back({a, c, b, w});
    r.push_back({b, a, c, w});
    r.push_back({b, c, a, w});
    r.push_back({c, a, b, w});
    r.push_back({c, b, a, w});
    return r;
  }();
  return rule;
}

inline const TriangleRule& triangle_rule(int points) {
  switch (points) {
    case 3: return triangle_rule_3();
    case 4: return triangle_rule_4();
    case 13: return triangle_rule_13();
    default: throw DomainError("quadrature", "no triangle rule with " + std::to_string(points) + " points");
  }
}

}  // namespace fgmbuck
