#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <utility>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "symmcomp/mesh.hpp"

namespace symmcomp {

/// Gauss-Legendre nodes and weights mapped to [0, 1].
template <std::size_t N>
struct GaussRule {
  std::array<double, N> nodes{};
  std::array<double, N> weights{};
};

template <std::size_t N>
const GaussRule<N>& gauss_rule() {
  static const GaussRule<N> rule = [] {
    using G = boost::math::quadrature::gauss<double, N>;
    const auto& a = G::abscissa();
    const auto& w = G::weights();
    GaussRule<N> r;
    std::size_t k = 0;
    // Boost stores the non-negative half; zero (odd N) comes first.
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] == 0.0) {
        r.nodes[k] = 0.5;
        r.weights[k++] = 0.5 * w[i];
      } else {
        r.nodes[k] = 0.5 * (1.0 - a[i]);
        r.weights[k++] = 0.5 * w[i];
        r.nodes[k] = 0.5 * (1.0 + a[i]);
        r.weights[k++] = 0.5 * w[i];
      }
    }
    std::array<std::size_t, N> order{};
    for (std::size_t i = 0; i < N; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return r.nodes[x] < r.nodes[y]; });
    GaussRule<N> sorted;
    for (std::size_t i = 0; i < N; ++i) {
      sorted.nodes[i] = r.nodes[order[i]];
      sorted.weights[i] = r.weights[order[i]];
    }
    return sorted;
  }();
  return rule;
}

/// Edge rule: 5-point Gauss.
inline const GaussRule<5>& edge_rule() { return gauss_rule<5>(); }

/// Symmetric 7-point rule on the reference triangle (exact to degree 5).
/// Barycentric coordinates and weights normalised to sum to 1.
struct TriangleRule {
  std::array<std::array<double, 3>, 7> bary;
  std::array<double, 7> weights;
};

inline const TriangleRule& triangle_rule() {
  static const TriangleRule rule = [] {
    const double a1 = 0.059715871789769820, b1 = 0.470142064105115090;
    const double a2 = 0.797426985353087322, b2 = 0.101286507323456339;
    const double w0 = 0.225, w1 = 0.132394152788506181, w2 = 0.125939180544827153;
    return TriangleRule{{{{1.0 / 3, 1.0 / 3, 1.0 / 3},
                          {a1, b1, b1},
                          {b1, a1, b1},
                          {b1, b1, a1},
                          {a2, b2, b2},
                          {b2, a2, b2},
                          {b2, b2, a2}}},
                        {w0, w1, w1, w1, w2, w2, w2}};
  }();
  return rule;
}

struct WeightedQuadOptions {
  /// Near-origin triangles are split while diameter > ratio * distance.
  double split_ratio = 0.25;
  int max_split_depth = 12;
  /// Target for the truncated innermost polar shell.
  double polar_tolerance = 1e-10;
};

namespace detail {

inline std::array<double, 3> barycentric(const std::array<Vec2, 3>& c, double area2, Vec2 x) {
  const double l1 = orient(c[0], x, c[2]) / area2;
  const double l2 = orient(c[0], c[1], x) / area2;
  return {1.0 - l1 - l2, l1, l2};
}

inline double weight_at(Vec2 x, double ell) {
  return ell == 0.0 ? 1.0 : std::pow(norm(x), ell);
}

/// Polar rule for the sub-triangle (0, a, b). With rho(theta) the distance
/// to the line ab along direction theta, x = s rho(theta) e_theta and
/// dx = s rho^2 ds dtheta, so |x|^ell dx = s^{1+ell} rho^{2+ell} ds dtheta.
/// The angular range is split at the foot of the perpendicular and then
/// bisected until rho varies by at most a factor 1.25 per piece; the radial
/// range is geometrically graded toward s = 0.
template <class Emit>
void polar_subtriangle(Vec2 a, Vec2 b, double ell, const WeightedQuadOptions& opt, Emit&& emit) {
  const Vec2 edge = b - a;
  const double height2 = cross(a, edge);  // twice the sub-triangle area, > 0
  if (!(height2 > 0.0)) return;
  const double th_a = std::atan2(a.y, a.x);
  double th_b = std::atan2(b.y, b.x);
  if (th_b <= th_a) th_b += 2.0 * std::numbers::pi;
  const auto rho = [&](double th) {
    const Vec2 dir{std::cos(th), std::sin(th)};
    return height2 / cross(dir, edge);
  };
  // Foot of the perpendicular from the origin onto the line ab.
  const double t_foot = -dot(a, edge) / dot(edge, edge);
  std::array<double, 3> cuts{th_a, th_b, th_b};
  std::size_t ncuts = 2;
  if (t_foot > 0.0 && t_foot < 1.0) {
    const Vec2 f = a + t_foot * edge;
    double th_f = std::atan2(f.y, f.x);
    while (th_f < th_a) th_f += 2.0 * std::numbers::pi;
    if (th_f < th_b) {
      cuts = {th_a, th_f, th_b};
      ncuts = 3;
    }
  }

  const double decay = 4.0 + ell;
  int depth = static_cast<int>(std::ceil(-std::log2(opt.polar_tolerance) / decay));
  depth = std::clamp(depth, 4, 60);
  const double delta = std::ldexp(1.0, -depth);
  const auto& gs = gauss_rule<6>();
  const auto& gt = gauss_rule<6>();

  const auto angular_piece = [&](double lo, double hi) {
    for (std::size_t it = 0; it < gt.nodes.size(); ++it) {
      const double th = lo + (hi - lo) * gt.nodes[it];
      const double r = rho(th);
      const Vec2 ray{r * std::cos(th), r * std::sin(th)};
      const double ang = (hi - lo) * gt.weights[it] * std::pow(r, 2.0 + ell);
      for (int k = 0; k < depth; ++k) {
        const double s_hi = std::ldexp(1.0, -k), s_lo = 0.5 * s_hi;
        for (std::size_t is = 0; is < gs.nodes.size(); ++is) {
          const double s = s_lo + (s_hi - s_lo) * gs.nodes[is];
          emit(s * ray, ang * (s_hi - s_lo) * gs.weights[is] * std::pow(s, 1.0 + ell));
        }
      }
      // Innermost shell: one-point Gauss-Jacobi rule for the weight s^{1+ell}.
      const double s_star = delta * (2.0 + ell) / (3.0 + ell);
      emit(s_star * ray, ang * std::pow(delta, 2.0 + ell) / (2.0 + ell));
    }
  };

  for (std::size_t c = 0; c + 1 < ncuts; ++c) {
    // rho is monotone between cuts; bisect until the ratio is bounded.
    std::array<std::pair<double, double>, 128> stack{};
    std::size_t top = 0;
    stack[top++] = {cuts[c], cuts[c + 1]};
    while (top > 0) {
      const auto [lo, hi] = stack[--top];
      const double r_lo = rho(lo), r_hi = rho(hi);
      const double ratio = std::max(r_lo, r_hi) / std::min(r_lo, r_hi);
      if (ratio > 1.25 && top + 2 <= stack.size() && hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        stack[top++] = {mid, hi};
        stack[top++] = {lo, mid};
      } else {
        angular_piece(lo, hi);
      }
    }
  }
}

template <class Emit>
void near_field(const std::array<Vec2, 3>& c, double ell, const WeightedQuadOptions& opt,
                int depth, Emit&& emit) {
  const Vec2 o{};
  const double diam =
      std::max({norm(c[1] - c[0]), norm(c[2] - c[1]), norm(c[0] - c[2])});
  const double dist = std::min({segment_distance(o, c[0], c[1]), segment_distance(o, c[1], c[2]),
                                segment_distance(o, c[2], c[0])});
  if (ell != 0.0 && depth < opt.max_split_depth && diam > opt.split_ratio * dist) {
    const Vec2 m01 = 0.5 * (c[0] + c[1]), m12 = 0.5 * (c[1] + c[2]), m20 = 0.5 * (c[2] + c[0]);
    near_field({c[0], m01, m20}, ell, opt, depth + 1, emit);
    near_field({m01, c[1], m12}, ell, opt, depth + 1, emit);
    near_field({m20, m12, c[2]}, ell, opt, depth + 1, emit);
    near_field({m01, m12, m20}, ell, opt, depth + 1, emit);
    return;
  }
  const double area = 0.5 * std::abs(orient(c[0], c[1], c[2]));
  const auto& rule = triangle_rule();
  for (std::size_t q = 0; q < rule.weights.size(); ++q) {
    const auto& l = rule.bary[q];
    const Vec2 x = l[0] * c[0] + l[1] * c[1] + l[2] * c[2];
    emit(x, area * rule.weights[q] * weight_at(x, ell));
  }
}

}  // namespace detail

/// Visits quadrature points of the triangle c for the density |x|^ell:
/// visit(x, bary, w) with bary the barycentric coordinates of x in c and w
/// the weight (|x|^ell and the area element included). Triangles whose
/// closure holds the origin are split into origin-apex sub-triangles and
/// integrated in graded polar coordinates; triangles close to the origin are
/// subdivided until they are well separated from it.
template <class Visit>
void visit_weighted_triangle(std::array<Vec2, 3> c, double ell, Visit&& visit,
                             const WeightedQuadOptions& opt = {}) {
  double area2 = orient(c[0], c[1], c[2]);
  if (area2 < 0.0) {
    std::swap(c[1], c[2]);
    area2 = -area2;
  }
  if (area2 == 0.0) return;
  const auto emit = [&](Vec2 x, double w) { visit(x, detail::barycentric(c, area2, x), w); };
  if (ell == 0.0) {
    detail::near_field(c, ell, opt, 0, emit);
    return;
  }
  const Vec2 o{};
  std::array<double, 3> side{};
  for (int k = 0; k < 3; ++k) side[k] = orient(c[k], c[(k + 1) % 3], o);
  const double tol = 1e-13 * area2;
  const bool inside = side[0] >= -tol && side[1] >= -tol && side[2] >= -tol;
  if (inside) {
    for (int k = 0; k < 3; ++k)
      if (side[k] > tol) detail::polar_subtriangle(c[k], c[(k + 1) % 3], ell, opt, emit);
    return;
  }
  detail::near_field(c, ell, opt, 0, emit);
}

/// Integral of |x|^ell over a triangle.
inline double weighted_triangle_measure(const std::array<Vec2, 3>& c, double ell,
                                        const WeightedQuadOptions& opt = {}) {
  double sum = 0.0;
  visit_weighted_triangle(c, ell, [&](Vec2, const std::array<double, 3>&, double w) { sum += w; },
                          opt);
  return sum;
}

/// Integral of |x|^ell over a convex polygon (counter-clockwise or clockwise),
/// by fan triangulation.
inline double weighted_polygon_measure(const Vec2* poly, std::size_t count, double ell,
                                       const WeightedQuadOptions& opt = {}) {
  double sum = 0.0;
  for (std::size_t k = 1; k + 1 < count; ++k)
    sum += weighted_triangle_measure({poly[0], poly[k], poly[k + 1]}, ell, opt);
  return sum;
}

/// Adaptive Gauss-Kronrod on [a, b] for a smooth integrand. The interval is
/// mapped to [0, 1] first: on short intervals far from the origin the
/// library's bisection otherwise never meets a relative tolerance.
template <class F>
double integrate_smooth(F&& f, double a, double b, double rel_tol = 1e-12) {
  if (a == b) return 0.0;
  const double w = b - a;
  return w * boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
                 [&](double t) { return f(a + w * t); }, 0.0, 1.0, 10, rel_tol);
}

/// Tanh-sinh on [a, b] for an integrand with integrable endpoint
/// singularities.
template <class F>
double integrate_endpoint_singular(F&& f, double a, double b, double rel_tol = 1e-12) {
  if (a == b) return 0.0;
  static thread_local boost::math::quadrature::tanh_sinh<double> integrator;
  // On a short interval far from zero the abscissae round onto the
  // endpoints; map those onto [0, 1]. Intervals reaching back to the origin
  // stay unmapped so a singularity at 0 is approached in full precision.
  const double w = b - a;
  if (std::abs(a) <= w) return integrator.integrate(f, a, b, rel_tol);
  return w * integrator.integrate([&](double t) { return f(a + w * t); }, 0.0, 1.0, rel_tol);
}

}  // namespace symmcomp
