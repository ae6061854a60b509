#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/minima.hpp>

#include "symmcomp/error.hpp"
#include "symmcomp/field.hpp"
#include "symmcomp/quadrature.hpp"
#include "symmcomp/rearrangement.hpp"
#include "symmcomp/robin_solver.hpp"
#include "symmcomp/weighted_geometry.hpp"

namespace symmcomp {

/// inf over the boundary of beta(x) |x|^{-ell/p'}. The coarse pass uses every
/// boundary quadrature node and vertex; the best edge and its neighbours are
/// then sampled eight times more densely and the best sample is polished with
/// Brent's method along its edge.
inline double beta_tilde(const TriMesh& mesh, const RobinCoefficient& beta, const WeightParams& params) {
  const double k = params.perimeter_exponent();
  const auto& edges = mesh.boundary();
  if (edges.empty()) throw Error(ErrorKind::invalid_mesh, "mesh has no boundary");
  const auto value = [&](std::size_t e, double t) {
    const Vec2 a = mesh.vertex(edges[e].from), b = mesh.vertex(edges[e].to);
    const Vec2 x = a + t * (b - a);
    return beta(x, e) * std::pow(norm(x), -k);
  };
  const auto& rule = edge_rule();
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_edge = 0;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    double m = std::min(value(e, 0.0), value(e, 1.0));
    for (double t : rule.nodes) m = std::min(m, value(e, t));
    if (m < best) {
      best = m;
      best_edge = e;
    }
  }
  // Neighbours by shared vertex.
  std::vector<std::size_t> near{best_edge};
  for (std::size_t e = 0; e < edges.size(); ++e)
    if (e != best_edge && (edges[e].to == edges[best_edge].from || edges[e].from == edges[best_edge].to))
      near.push_back(e);
  const int samples = 8 * static_cast<int>(rule.nodes.size());
  std::size_t arg_edge = best_edge;
  double arg_t = 0.0;
  for (std::size_t e : near) {
    for (int i = 0; i <= samples; ++i) {
      const double t = static_cast<double>(i) / samples;
      const double v = value(e, t);
      if (v < best) {
        best = v;
        arg_edge = e;
        arg_t = t;
      }
    }
  }
  const double lo = std::max(0.0, arg_t - 1.0 / samples), hi = std::min(1.0, arg_t + 1.0 / samples);
  const auto polished = boost::math::tools::brent_find_minima([&](double t) { return value(arg_edge, t); }, lo, hi, 50);
  best = std::min(best, polished.second);
  if (!(best > 0.0)) throw Error(ErrorKind::hypothesis, "H3 violated: inf beta |x|^{-ell/p'} is not positive");
  return best;
}

/// Data of the radial problem on the symmetrized ball.
struct SymmetrizedProblem {
  SymmetrizedBall ball;
  RadialProfile f_sharp;
  double beta_tilde = 0.0;
  double beta_eff = 0.0;  ///< beta_tilde * radius^{ell/p'}
  WeightParams params;
  double source_integral = 0.0;  ///< int f |x|^ell over the original domain
};

/// f# is resolved on a finer level grid than the rearrangement default: it
/// feeds every comparison, and the linear interpolation error in mu is
/// quadratic in the level spacing.
inline SymmetrizedProblem symmetrize_problem(const RobinProblem& problem, const LevelGrid& grid = {4096, {}}) {
  const auto& par = problem.params;
  SymmetrizedProblem sp;
  sp.params = par;
  const auto mu = distribution_function(problem.f, problem.mesh, par, grid);
  sp.ball = symmetrized_ball(mu.domain_measure, par);
  sp.f_sharp = weighted_rearrangement(decreasing_rearrangement(mu), par);
  sp.beta_tilde = beta_tilde(problem.mesh, problem.beta, par);
  sp.beta_eff = sp.beta_tilde * std::pow(sp.ball.radius, par.perimeter_exponent());
  sp.source_integral = weighted_integral(problem.mesh, MeshQuadrature(problem.mesh, par.ell), problem.f);
  return sp;
}

/// Radius grid on [0, R] with Chebyshev spacing, clustered at both ends.
inline std::vector<double> radial_grid(double radius, std::size_t points = 2048) {
  std::vector<double> r(points);
  const double k = static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i)
    r[i] = 0.5 * radius * (1.0 - std::cos(std::numbers::pi * static_cast<double>(i) / k));
  r.front() = 0.0;
  r.back() = radius;
  return r;
}

namespace detail {

/// Abscissae of the grid merged with the breakpoints of the profile.
inline std::vector<double> merged_grid(const RadialProfile& f, std::size_t points) {
  std::vector<double> r = radial_grid(f.radius, points);
  for (double x : f.curve.x)
    if (x > 0.0 && x < f.radius) r.push_back(x);
  std::sort(r.begin(), r.end());
  r.erase(std::unique(r.begin(), r.end()), r.end());
  return r;
}

}  // namespace detail

/// Radial solution of the symmetrized problem:
///   |v'(r)| = (r^{1-n} int_0^r f#(s) s^{n-1+ell} ds)^{1/(p-1)},
///   v(R)    = (R^{1-n} int_0^R f#(s) s^{n-1+ell} ds / beta_eff)^{1/(p-1)},
///   v(r)    = v(R) + int_r^R |v'|.
inline RadialProfile solve_symmetrized(const SymmetrizedProblem& sp, std::size_t points = 2048) {
  const auto& par = sp.params;
  const auto& f = sp.f_sharp;
  for (double v : f.curve.y)
    if (v < 0.0) throw Error(ErrorKind::invalid_argument, "symmetrized source must be nonnegative");
  if (!(sp.beta_eff > 0.0)) throw Error(ErrorKind::hypothesis, "effective Robin constant must be positive");
  const double n = par.n, p = par.p, e = n - 1.0 + par.ell;
  const double R = sp.ball.radius;
  const std::vector<double> r = detail::merged_grid(f, points);
  const auto density = [&](double s) { return s > 0.0 ? f(s) * std::pow(s, e) : 0.0; };
  using G = boost::math::quadrature::gauss<double, 10>;

  // Cumulative inner integral at the grid points.
  std::vector<double> inner(r.size(), 0.0);
  for (std::size_t i = 1; i < r.size(); ++i) {
    const double piece = i == 1 ? integrate_endpoint_singular(density, 0.0, r[1], 1e-13)
                                : integrate_smooth(density, r[i - 1], r[i], 1e-12);
    inner[i] = inner[i - 1] + piece;
  }
  const auto slope = [&](std::size_t i, double s) {
    // |v'(s)| for s in [r[i], r[i+1]].
    if (s <= 0.0) return 0.0;
    const double add = i == 0 ? integrate_endpoint_singular(density, 0.0, s, 1e-13) : G::integrate(density, r[i], s);
    const double in = inner[i] + add;
    return std::pow(std::max(in, 0.0) * std::pow(s, 1.0 - n), 1.0 / (p - 1.0));
  };

  RadialProfile v;
  v.params = par;
  v.radius = R;
  v.interpolation = RadialInterpolation::linear_in_radius;
  v.curve.x = r;
  v.curve.y.assign(r.size(), 0.0);
  v.curve.y.back() = std::pow(inner.back() * std::pow(R, 1.0 - n) / sp.beta_eff, 1.0 / (p - 1.0));
  for (std::size_t i = r.size() - 1; i-- > 0;) {
    const auto g = [&](double s) { return slope(i, s); };
    const double piece = i == 0 ? integrate_endpoint_singular(g, r[0], r[1], 1e-12)
                                : integrate_smooth(g, r[i], r[i + 1], 1e-10);
    v.curve.y[i] = v.curve.y[i + 1] + piece;
  }
  return v;
}

/// Closed form of the radial solution for f = 1.
inline double explicit_v_at(const WeightParams& par, double radius, double bt, double r) {
  const double n = par.n, p = par.p, l = par.ell;
  const double e = (l + p) / (p - 1.0);
  return (p - 1.0) / ((l + p) * std::pow(n + l, 1.0 / (p - 1.0))) * (std::pow(radius, e) - std::pow(r, e)) +
         std::pow(std::pow(radius, l / p + 1.0) / (bt * (n + l)), 1.0 / (p - 1.0));
}

inline RadialProfile explicit_v(const WeightParams& par, double radius, double bt, std::size_t points = 2048) {
  RadialProfile v;
  v.params = par;
  v.radius = radius;
  v.curve.x = radial_grid(radius, points);
  for (double r : v.curve.x) v.curve.y.push_back(explicit_v_at(par, radius, bt, r));
  return v;
}

struct FluxReport {
  double lhs = 0.0;  ///< int_0^tau t^{p-1} int_{bdry, u>t} |x|^{ell/p'} / u dt
  double rhs = 0.0;  ///< (1/(p beta~)) int_0^{|Omega|} f*(s) ds
  double tau = 0.0;
  double margin() const { return rhs - lhs; }
};

/// Flux check on a solved mesh problem. Exchanging the order of integration,
/// the left side is int_bdry |x|^{ell/p'} min(u, tau)^p / (p u).
inline FluxReport lemma33_flux_check(const RobinProblem& problem, const ScalarField& u, double bt,
                                     double tau = std::numeric_limits<double>::infinity()) {
  const auto& par = problem.params;
  const double k = par.perimeter_exponent();
  FluxReport r;
  r.tau = tau;
  for (const auto& n : boundary_nodes(problem.mesh)) {
    const double v = (1.0 - n.t) * u[n.from] + n.t * u[n.to];
    if (v <= 0.0) continue;
    r.lhs += n.weight * std::pow(norm(n.x), k) * std::pow(std::min(v, tau), par.p) / (par.p * v);
  }
  const auto ustar = decreasing_rearrangement(distribution_function(problem.f, problem.mesh, par));
  r.rhs = profile_integral(ustar, ustar.domain_measure) / (par.p * bt);
  return r;
}

/// The same check for the radial solution on the ball, where the boundary is
/// the sphere of radius R and v is constant there.
inline FluxReport lemma33_flux_check(const SymmetrizedProblem& sp, const RadialProfile& v,
                                     double tau = std::numeric_limits<double>::infinity()) {
  const auto& par = sp.params;
  const double R = sp.ball.radius;
  const double vm = v(R);
  FluxReport r;
  r.tau = tau;
  if (vm > 0.0)
    r.lhs = par.sphere_area() * std::pow(R, par.n - 1 + par.perimeter_exponent()) * std::pow(std::min(vm, tau), par.p) /
            (par.p * vm);
  r.rhs = weighted_lp_norm(sp.f_sharp, 1.0) / (par.p * sp.beta_tilde);
  return r;
}

}  // namespace symmcomp
