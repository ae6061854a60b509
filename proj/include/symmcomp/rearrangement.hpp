#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <vector>

#include "symmcomp/error.hpp"
#include "symmcomp/field.hpp"
#include "symmcomp/mesh.hpp"
#include "symmcomp/parallel.hpp"
#include "symmcomp/quadrature.hpp"
#include "symmcomp/weight_params.hpp"

namespace symmcomp {

enum class Interpolation { linear, step };

/// Breakpoints of a piecewise-linear function of one variable. Abscissae are
/// nondecreasing; a repeated abscissa encodes a jump, and evaluation at the
/// jump returns the later value (right-continuity).
struct Polyline {
  std::vector<double> x;
  std::vector<double> y;

  std::size_t size() const { return x.size(); }

  double operator()(double at) const {
    if (x.empty()) return 0.0;
    if (at < x.front()) return y.front();
    auto it = std::upper_bound(x.begin(), x.end(), at);
    if (it == x.end()) return y.back();
    const std::size_t j = static_cast<std::size_t>(it - x.begin());
    const std::size_t i = j - 1;
    if (x[j] == x[i]) return y[j];
    const double w = (at - x[i]) / (x[j] - x[i]);
    return (1.0 - w) * y[i] + w * y[j];
  }

  /// Value approached from the left.
  double left_limit(double at) const {
    if (x.empty()) return 0.0;
    auto it = std::lower_bound(x.begin(), x.end(), at);
    if (it == x.begin()) return y.front();
    if (it == x.end()) return y.back();
    const std::size_t j = static_cast<std::size_t>(it - x.begin());
    const std::size_t i = j - 1;
    if (x[j] == x[i]) return y[i];
    const double w = (at - x[i]) / (x[j] - x[i]);
    return (1.0 - w) * y[i] + w * y[j];
  }
};

/// t -> weighted measure of {|u| > t}. Piecewise linear between computed
/// levels, with explicit jumps at plateau values of u; zero beyond the last
/// breakpoint.
struct DistributionCurve {
  Polyline curve;
  double domain_measure = 0.0;
  Interpolation interpolation = Interpolation::linear;

  double sup() const { return curve.x.empty() ? 0.0 : curve.x.back(); }

  double operator()(double t) const {
    if (curve.x.empty() || t >= sup()) return 0.0;
    return curve(t);
  }
};

/// s -> u*(s) on [0, |Omega|_ell].
struct DecreasingProfile {
  Polyline curve;
  double domain_measure = 0.0;
  Interpolation interpolation = Interpolation::linear;

  double operator()(double s) const { return curve(s); }
};

enum class RadialInterpolation { linear_in_radius, linear_in_measure };

/// w(x) = profile(|x|) on the ball of radius `radius`.
struct RadialProfile {
  Polyline curve;
  WeightParams params;
  double radius = 0.0;
  RadialInterpolation interpolation = RadialInterpolation::linear_in_radius;

  double operator()(double r) const {
    if (interpolation == RadialInterpolation::linear_in_radius || curve.x.empty()) return curve(r);
    // Breakpoints are linear in the measure m(r); evaluate in that variable.
    if (r < curve.x.front()) return curve.y.front();
    auto it = std::upper_bound(curve.x.begin(), curve.x.end(), r);
    if (it == curve.x.end()) return curve.y.back();
    const std::size_t j = static_cast<std::size_t>(it - curve.x.begin());
    const std::size_t i = j - 1;
    if (curve.x[j] == curve.x[i]) return curve.y[j];
    const double mi = params.ball_measure(curve.x[i]);
    const double mj = params.ball_measure(curve.x[j]);
    const double w = (params.ball_measure(r) - mi) / (mj - mi);
    return (1.0 - w) * curve.y[i] + w * curve.y[j];
  }
};

/// Level grid for distribution_function. With no explicit levels, `levels`
/// points are placed on [0, max|u|] with Chebyshev spacing, so they cluster
/// at both ends of the range.
struct LevelGrid {
  std::size_t levels = 512;
  std::vector<double> explicit_levels;
};

namespace detail {

inline std::vector<double> level_values(const LevelGrid& grid, double top) {
  std::vector<double> t;
  if (!grid.explicit_levels.empty()) {
    for (double v : grid.explicit_levels)
      if (v > 0.0 && v < top) t.push_back(v);
  } else {
    const std::size_t k = std::max<std::size_t>(grid.levels, 2);
    for (std::size_t i = 1; i < k; ++i)
      t.push_back(0.5 * top * (1.0 - std::cos(std::numbers::pi * static_cast<double>(i) / static_cast<double>(k))));
  }
  t.push_back(0.0);
  t.push_back(top);
  return t;
}

}  // namespace detail

/// Weighted distribution function of |field|. Each triangle's super-level set
/// is clipped along the interpolant's level line and integrated exactly with
/// the weighted quadrature.
inline DistributionCurve distribution_function(const ScalarField& field, const TriMesh& mesh,
                                               const WeightParams& params, const LevelGrid& grid = {}) {
  if (mesh.num_triangles() == 0) throw Error(ErrorKind::invalid_mesh, "empty mesh");
  require_compatible(mesh, field);
  for (double v : field.values)
    if (!std::isfinite(v)) throw Error(ErrorKind::invalid_argument, "field is not finite");
  const double ell = params.ell;

  std::vector<double> tri_measure(mesh.num_triangles());
  parallel_for(mesh.num_triangles(),
               [&](std::size_t t) { tri_measure[t] = weighted_triangle_measure(mesh.corners(t), ell); });
  double total = 0.0;
  for (double m : tri_measure) total += m;

  double top = 0.0;
  for (double v : field.values) top = std::max(top, std::abs(v));
  DistributionCurve out;
  out.domain_measure = total;
  if (top == 0.0) {
    out.curve.x = {0.0};
    out.curve.y = {0.0};
    return out;
  }

  // Plateaus: triangles on which |u| is a positive constant.
  std::map<double, double> plateau;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[t];
    const double a = field[tri[0]], b = field[tri[1]], c = field[tri[2]];
    if (a == b && b == c && a != 0.0) plateau[std::abs(a)] += tri_measure[t];
  }

  std::vector<double> levels = detail::level_values(grid, top);
  for (const auto& [v, m] : plateau) levels.push_back(v);
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  const std::size_t nl = levels.size();

  // Levels below a triangle's minimum see the whole triangle; those are
  // accumulated through a difference array. Levels inside its range are
  // clipped.
  struct Partial {
    std::size_t level;
    double measure;
  };
  std::vector<std::vector<Partial>> partial(mesh.num_triangles());
  std::vector<std::array<std::size_t, 2>> full_count(mesh.num_triangles());
  parallel_for(mesh.num_triangles(), [&](std::size_t t) {
    const auto& tri = mesh.triangles()[t];
    const auto c = mesh.corners(t);
    std::array<std::size_t, 2> counts{};
    for (int sign = 0; sign < 2; ++sign) {
      const double s = sign == 0 ? 1.0 : -1.0;
      const std::array<double, 3> g{s * field[tri[0]], s * field[tri[1]], s * field[tri[2]]};
      const double gmin = std::min({g[0], g[1], g[2]});
      const double gmax = std::max({g[0], g[1], g[2]});
      if (gmax <= 0.0) continue;
      // levels[i] < gmin: full triangle
      const std::size_t below = static_cast<std::size_t>(std::lower_bound(levels.begin(), levels.end(), gmin) - levels.begin());
      counts[sign] = below;
      for (std::size_t i = below; i < nl && levels[i] < gmax; ++i) {
        std::array<Vec2, 4> poly;
        const std::size_t n = detail::clip_above(c, g, levels[i], poly);
        if (n >= 3) partial[t].push_back({i, weighted_polygon_measure(poly.data(), n, ell)});
      }
    }
    full_count[t] = counts;
  });

  std::vector<double> diff(nl + 1, 0.0);
  std::vector<double> mu(nl, 0.0);
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    for (std::size_t k : full_count[t]) {
      if (k == 0) continue;
      diff[0] += tri_measure[t];
      diff[k] -= tri_measure[t];
    }
    for (const auto& p : partial[t]) mu[p.level] += p.measure;
  }
  double running = 0.0;
  for (std::size_t i = 0; i < nl; ++i) {
    running += diff[i];
    mu[i] += running;
  }

  // Nonincreasing up to quadrature round-off; anything larger is a bug.
  for (std::size_t i = 1; i < nl; ++i) {
    if (mu[i] > mu[i - 1] * (1.0 + 1e-9) + 1e-14 * total)
      throw Error(ErrorKind::fatal, "distribution function is not monotone");
    mu[i] = std::min(mu[i], mu[i - 1]);
  }
  mu[nl - 1] = 0.0;

  for (std::size_t i = 0; i < nl; ++i) {
    auto jump = plateau.find(levels[i]);
    if (jump != plateau.end() && i > 0) {
      out.curve.x.push_back(levels[i]);
      out.curve.y.push_back(std::min(mu[i] + jump->second, mu[i - 1]));
    }
    out.curve.x.push_back(levels[i]);
    out.curve.y.push_back(mu[i]);
  }
  return out;
}

/// u*(s) = inf{t : mu(t) <= s}. The graph of u* is the graph of mu with the
/// axes exchanged; flat pieces of mu become right-continuous jumps of u*.
inline DecreasingProfile decreasing_rearrangement(const DistributionCurve& mu) {
  DecreasingProfile out;
  out.domain_measure = mu.domain_measure;
  out.interpolation = mu.interpolation;
  const auto& c = mu.curve;
  for (std::size_t k = c.size(); k-- > 0;) {
    out.curve.x.push_back(c.y[k]);
    out.curve.y.push_back(c.x[k]);
  }
  // Within a run of equal s, keep the largest value first so evaluation at the
  // jump returns the smallest (the infimum).
  for (std::size_t i = 0; i < out.curve.size();) {
    std::size_t j = i;
    while (j < out.curve.size() && out.curve.x[j] == out.curve.x[i]) ++j;
    if (j - i > 2) {
      const double hi = out.curve.y[i], lo = out.curve.y[j - 1];
      out.curve.x.erase(out.curve.x.begin() + static_cast<std::ptrdiff_t>(i + 1),
                        out.curve.x.begin() + static_cast<std::ptrdiff_t>(j - 1));
      out.curve.y.erase(out.curve.y.begin() + static_cast<std::ptrdiff_t>(i + 1),
                        out.curve.y.begin() + static_cast<std::ptrdiff_t>(j - 1));
      out.curve.y[i] = std::max(hi, lo);
      out.curve.y[i + 1] = std::min(hi, lo);
      j = i + 2;
    }
    i = j;
  }
  // u* vanishes on the part of the domain where u = 0.
  if (out.curve.x.empty() || out.curve.x.back() < mu.domain_measure) {
    const double s0 = out.curve.x.empty() ? 0.0 : out.curve.x.back();
    if (!out.curve.x.empty() && out.curve.y.back() != 0.0) {
      out.curve.x.push_back(s0);
      out.curve.y.push_back(0.0);
    }
    out.curve.x.push_back(mu.domain_measure);
    out.curve.y.push_back(0.0);
  }
  return out;
}

/// Lebesgue distribution of a decreasing profile on (0, |Omega|): the measure
/// of {s : u*(s) > t}.
inline double profile_distribution(const DecreasingProfile& u, double t) {
  const auto& c = u.curve;
  if (c.x.empty() || c.y.front() <= t) return 0.0;
  for (std::size_t i = 1; i < c.size(); ++i) {
    if (c.y[i] <= t) {
      if (c.x[i] == c.x[i - 1]) return c.x[i];
      const double w = (c.y[i - 1] - t) / (c.y[i - 1] - c.y[i]);
      return c.x[i - 1] + w * (c.x[i] - c.x[i - 1]);
    }
  }
  return c.x.back();
}

/// u#(r) = u*(m(r)) with m(r) the weighted measure of the ball B_r.
inline RadialProfile weighted_rearrangement(const DecreasingProfile& u, const WeightParams& params) {
  RadialProfile out;
  out.params = params;
  out.interpolation = RadialInterpolation::linear_in_measure;
  for (std::size_t i = 0; i < u.curve.size(); ++i) {
    out.curve.x.push_back(params.ball_radius(u.curve.x[i]));
    out.curve.y.push_back(u.curve.y[i]);
  }
  out.radius = params.ball_radius(u.domain_measure);
  return out;
}

/// ||u*||_{L^q(0, |Omega|)}, exact on each linear piece up to Gauss quadrature.
inline double lp_norm(const DecreasingProfile& u, double q) {
  if (!(q >= 1.0)) throw Error(ErrorKind::invalid_argument, "norm exponent must be >= 1");
  const auto& g = gauss_rule<8>();
  const auto& c = u.curve;
  double sum = 0.0;
  for (std::size_t i = 1; i < c.size(); ++i) {
    const double len = c.x[i] - c.x[i - 1];
    if (len <= 0.0) continue;
    const double y0 = c.y[i - 1], y1 = c.y[i];
    if (y0 * y1 <= 0.0) {
      // |v|^q is not smooth at a zero of v; integrate exactly on each side.
      const double a0 = std::abs(y0), a1 = std::abs(y1);
      if (a0 + a1 > 0.0) sum += len * (std::pow(a0, q + 1.0) + std::pow(a1, q + 1.0)) / ((q + 1.0) * (a0 + a1));
      continue;
    }
    for (std::size_t k = 0; k < g.nodes.size(); ++k) {
      const double v = c.y[i - 1] + g.nodes[k] * (c.y[i] - c.y[i - 1]);
      sum += len * g.weights[k] * std::pow(std::abs(v), q);
    }
  }
  return std::pow(sum, 1.0 / q);
}

/// (integral over B_radius of |w(|x|)|^q |x|^ell dx)^{1/q}, integrated in the
/// radius with the Jacobian n omega_n r^{n-1+ell}.
inline double weighted_lp_norm(const RadialProfile& w, double q) {
  if (!(q >= 1.0)) throw Error(ErrorKind::invalid_argument, "norm exponent must be >= 1");
  const auto& par = w.params;
  const double jac = par.sphere_area();
  const double e = par.n - 1 + par.ell;
  const auto integrand = [&](double r) { return std::pow(std::abs(w(r)), q) * jac * std::pow(r, e); };
  std::vector<double> cuts{0.0};
  for (double x : w.curve.x)
    if (x > cuts.back() && x < w.radius) cuts.push_back(x);
  cuts.push_back(w.radius);
  // The profile is smooth between breakpoints, so a fixed Gauss rule per
  // piece suffices away from the origin; the first piece carries the
  // r^{n-1+ell} endpoint behaviour, as does any piece where w vanishes at an
  // end (|w|^q is not smooth there for fractional q).
  using G = boost::math::quadrature::gauss<double, 10>;
  double sum = integrate_endpoint_singular(integrand, cuts[0], cuts[1], 1e-12);
  for (std::size_t i = 2; i < cuts.size(); ++i) {
    const double a = cuts[i - 1], b = cuts[i];
    if (w(a) * w(b) <= 0.0) sum += integrate_endpoint_singular(integrand, a, b, 1e-12);
    else sum += G::integrate(integrand, a, b);
  }
  return std::pow(sum, 1.0 / q);
}

/// q integral t^{q-1} mu(t) dt, which equals ||u||^q by Cavalieri.
inline double cavalieri(const DistributionCurve& mu, double q) {
  const auto& g = gauss_rule<8>();
  const auto& c = mu.curve;
  double sum = 0.0;
  for (std::size_t i = 1; i < c.size(); ++i) {
    const double a = c.x[i - 1], b = c.x[i];
    if (b <= a) continue;
    const auto f = [&](double t) {
      return std::pow(t, q - 1.0) * (c.y[i - 1] + (t - a) / (b - a) * (c.y[i] - c.y[i - 1]));
    };
    if (a == 0.0) {
      // t^{q-1} is not smooth at 0 for fractional q; the piece is exact.
      const double slope = (c.y[i] - c.y[i - 1]) / b;
      sum += c.y[i - 1] * std::pow(b, q) / q + slope * std::pow(b, q + 1.0) / (q + 1.0);
    } else {
      for (std::size_t k = 0; k < g.nodes.size(); ++k) sum += (b - a) * g.weights[k] * f(a + g.nodes[k] * (b - a));
    }
  }
  return q * sum;
}

/// Lorentz quasi-norm p^{1/q} (integral t^q mu(t)^{q/p} dt/t)^{1/q}; for q
/// infinite, sup_t t^p mu(t).
inline double lorentz_norm(const DistributionCurve& mu, double p, double q) {
  if (!(p > 0.0)) throw Error(ErrorKind::invalid_argument, "Lorentz exponent p must be positive");
  if (!(q > 0.0)) throw Error(ErrorKind::invalid_argument, "Lorentz exponent q must be positive");
  const auto& c = mu.curve;
  if (std::isinf(q)) {
    double best = 0.0;
    for (std::size_t i = 1; i < c.size(); ++i) {
      const double a = c.x[i - 1], b = c.x[i];
      if (b <= a) continue;
      // t^p (alpha - beta t) on [a, b); its interior maximum sits at
      // t = p alpha / ((p + 1) beta).
      const double beta = (c.y[i - 1] - c.y[i]) / (b - a);
      const double alpha = c.y[i - 1] + beta * a;
      const auto val = [&](double t) { return std::pow(t, p) * (alpha - beta * t); };
      best = std::max({best, val(a), val(b)});
      if (beta > 0.0) {
        const double ts = p * alpha / ((p + 1.0) * beta);
        if (ts > a && ts < b) best = std::max(best, val(ts));
      }
    }
    if (!std::isfinite(best)) throw Error(ErrorKind::invalid_argument, "not in Lorentz space");
    return best;
  }
  double sum = 0.0;
  for (std::size_t i = 1; i < c.size(); ++i) {
    const double a = c.x[i - 1], b = c.x[i];
    if (b <= a) continue;
    const auto f = [&](double t) {
      const double m = c.y[i - 1] + (t - a) / (b - a) * (c.y[i] - c.y[i - 1]);
      return std::pow(t, q - 1.0) * std::pow(std::max(m, 0.0), q / p);
    };
    if (i == 1 || i + 1 == c.size())
      sum += integrate_endpoint_singular(f, a, b, 1e-12);
    else
      sum += boost::math::quadrature::gauss<double, 10>::integrate(f, a, b);
  }
  const double out = std::pow(p, 1.0 / q) * std::pow(sum, 1.0 / q);
  if (!std::isfinite(out)) throw Error(ErrorKind::invalid_argument, "not in Lorentz space");
  return out;
}

/// integral_0^m u*(s) ds.
inline double profile_integral(const DecreasingProfile& u, double m) {
  const auto& c = u.curve;
  double sum = 0.0;
  for (std::size_t i = 1; i < c.size(); ++i) {
    const double a = c.x[i - 1];
    if (a >= m) break;
    const double b = std::min(c.x[i], m);
    if (b <= a) continue;
    const double vb = c.x[i] == a ? c.y[i] : c.y[i - 1] + (b - a) / (c.x[i] - a) * (c.y[i] - c.y[i - 1]);
    sum += 0.5 * (b - a) * (c.y[i - 1] + vb);
  }
  return sum;
}

/// A union of mesh triangles, optionally intersected with {u > level} for
/// the field under test.
struct Subregion {
  std::vector<bool> triangles;  ///< empty means every triangle
  bool clip_to_level = false;
  double level = 0.0;
};

struct HardyLittlewoodReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double subset_measure = 0.0;
  bool holds(double tol) const { return lhs <= rhs + tol; }
};

/// Both sides of integral_E u |x|^ell <= integral_0^{|E|_ell} u*(s) ds.
inline HardyLittlewoodReport hardy_littlewood_check(const ScalarField& field, const TriMesh& mesh,
                                                    const Subregion& subset, const WeightParams& params,
                                                    const LevelGrid& grid = {}) {
  require_compatible(mesh, field);
  for (double v : field.values)
    if (v < 0.0) throw Error(ErrorKind::invalid_argument, "field must be nonnegative");
  if (!subset.triangles.empty() && subset.triangles.size() != mesh.num_triangles())
    throw Error(ErrorKind::invalid_argument, "subset mask does not match mesh");
  const double ell = params.ell;
  std::vector<double> val(mesh.num_triangles(), 0.0), meas(mesh.num_triangles(), 0.0);
  parallel_for(mesh.num_triangles(), [&](std::size_t t) {
    if (!subset.triangles.empty() && !subset.triangles[t]) return;
    const auto& tri = mesh.triangles()[t];
    const auto c = mesh.corners(t);
    const std::array<double, 3> g{field[tri[0]], field[tri[1]], field[tri[2]]};
    const double area2 = orient(c[0], c[1], c[2]);
    const auto add = [&](const std::array<Vec2, 3>& piece) {
      visit_weighted_triangle(piece, ell, [&](Vec2 x, const std::array<double, 3>&, double w) {
        const auto b = detail::barycentric(c, area2, x);
        val[t] += w * (b[0] * g[0] + b[1] * g[1] + b[2] * g[2]);
        meas[t] += w;
      });
    };
    if (!subset.clip_to_level) {
      add(c);
      return;
    }
    std::array<Vec2, 4> poly;
    const std::size_t n = detail::clip_above(c, g, subset.level, poly);
    for (std::size_t k = 1; k + 1 < n; ++k) add({poly[0], poly[k], poly[k + 1]});
  });
  HardyLittlewoodReport r;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    r.lhs += val[t];
    r.subset_measure += meas[t];
  }
  const auto ustar = decreasing_rearrangement(distribution_function(field, mesh, params, grid));
  r.rhs = profile_integral(ustar, r.subset_measure);
  return r;
}

inline void write_csv(std::ostream& os, const Polyline& c, const char* abscissa, const char* value) {
  os << abscissa << ',' << value << '\n';
  os.precision(17);
  for (std::size_t i = 0; i < c.size(); ++i) os << c.x[i] << ',' << c.y[i] << '\n';
}

inline void write_csv(std::ostream& os, const DistributionCurve& c) { write_csv(os, c.curve, "t", "mu"); }
inline void write_csv(std::ostream& os, const DecreasingProfile& c) { write_csv(os, c.curve, "s", "u_star"); }
inline void write_csv(std::ostream& os, const RadialProfile& c) { write_csv(os, c.curve, "r", "value"); }

}  // namespace symmcomp
