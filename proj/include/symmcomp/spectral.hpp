#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>
#include <json.hpp>

#include "symmcomp/error.hpp"
#include "symmcomp/field.hpp"
#include "symmcomp/radial.hpp"
#include "symmcomp/rearrangement.hpp"
#include "symmcomp/robin_solver.hpp"
#include "symmcomp/weight_params.hpp"
#include "symmcomp/weighted_geometry.hpp"

namespace symmcomp {

struct EigenConfig {
  double tol = 1e-8;        ///< relative stationarity residual
  int max_iterations = 2000;
  double armijo = 1e-4;
  double bisection_tol = 1e-10;
  std::size_t radial_points = 2048;
};

struct EigenResult {
  double lambda = 0.0;
  double residual = 0.0;
  int iterations = 0;
  std::string method;
  std::string certification;
  std::optional<ScalarField> field;     ///< mesh eigenfield, weighted L^p norm 1
  std::optional<RadialProfile> profile; ///< radial eigenfield, weighted L^p norm 1
};

/// (int |grad psi|^p + int_bdry beta |psi|^p) / int |psi|^p |x|^ell on P1
/// fields of a fixed mesh.
class RayleighQuotient {
 public:
  RayleighQuotient(const TriMesh& mesh, const RobinCoefficient& beta, const WeightParams& params)
      : problem_(RobinProblem::make(mesh, params, constant_field(mesh, 0.0), beta)),
        energy_(problem_, 0.0),
        quad_(problem_.mesh, params.ell) {}

  const RobinProblem& problem() const { return problem_; }
  double p() const { return problem_.params.p; }

  double numerator(const Vector& psi) const {
    return p() * (energy_.gradient_energy(psi) + energy_.boundary_energy(psi));
  }

  double denominator(const Vector& psi) const {
    const auto& mesh = problem_.mesh;
    std::vector<double> part(mesh.num_triangles(), 0.0);
    parallel_for(mesh.num_triangles(), [&](std::size_t t) {
      const auto& tri = mesh.triangles()[t];
      for (const auto& n : quad_.nodes(t)) {
        const double v = n.bary[0] * psi[tri[0]] + n.bary[1] * psi[tri[1]] + n.bary[2] * psi[tri[2]];
        part[t] += n.weight * std::pow(std::abs(v), p());
      }
    });
    double s = 0.0;
    for (double v : part) s += v;
    return s;
  }

  double operator()(const Vector& psi) const {
    const double d = denominator(psi);
    if (!(d > 0.0)) throw Error(ErrorKind::invalid_argument, "Rayleigh quotient of the zero field");
    return numerator(psi) / d;
  }

  /// Derivative of D/p along each basis function.
  Vector mass_action(const Vector& psi) const {
    const auto& mesh = problem_.mesh;
    std::vector<std::array<double, 3>> part(mesh.num_triangles());
    parallel_for(mesh.num_triangles(), [&](std::size_t t) {
      const auto& tri = mesh.triangles()[t];
      for (const auto& n : quad_.nodes(t)) {
        const double v = n.bary[0] * psi[tri[0]] + n.bary[1] * psi[tri[1]] + n.bary[2] * psi[tri[2]];
        const double c = n.weight * std::pow(std::abs(v), p() - 2.0) * v;
        for (int k = 0; k < 3; ++k) part[t][k] += c * n.bary[k];
      }
    });
    Vector out = Vector::Zero(static_cast<Eigen::Index>(mesh.num_vertices()));
    for (std::size_t t = 0; t < part.size(); ++t)
      for (int k = 0; k < 3; ++k) out[mesh.triangles()[t][k]] += part[t][k];
    return out;
  }

  /// Derivative of N/p along each basis function.
  Vector stiffness_action(const Vector& psi) const { return energy_.gradient(psi); }

  SparseMatrix stiffness_hessian(const Vector& psi, double eps) const {
    EnergyFunctional g = energy_;
    g.set_epsilon(eps);
    return g.hessian(psi);
  }

  SparseMatrix quadratic_operator() const { return energy_.quadratic_operator(); }

  SparseMatrix weighted_mass() const {
    const auto& mesh = problem_.mesh;
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
      const auto& tri = mesh.triangles()[t];
      std::array<double, 9> m{};
      for (const auto& n : quad_.nodes(t))
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) m[3 * i + j] += n.weight * n.bary[i] * n.bary[j];
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) trip.emplace_back(tri[i], tri[j], m[3 * i + j]);
    }
    SparseMatrix out(static_cast<Eigen::Index>(mesh.num_vertices()), static_cast<Eigen::Index>(mesh.num_vertices()));
    out.setFromTriplets(trip.begin(), trip.end());
    return out;
  }

 private:
  RobinProblem problem_;
  EnergyFunctional energy_;
  MeshQuadrature quad_;
};

inline double rayleigh_quotient(const ScalarField& psi, const TriMesh& mesh, const RobinCoefficient& beta,
                                const WeightParams& params) {
  require_compatible(mesh, psi);
  const RayleighQuotient q(mesh, beta, params);
  return q(Eigen::Map<const Vector>(psi.values.data(), static_cast<Eigen::Index>(psi.size())));
}

namespace detail {

inline void normalize(const RayleighQuotient& q, Vector& psi) {
  if (psi.sum() < 0.0) psi = -psi;
  psi /= std::pow(q.denominator(psi), 1.0 / q.p());
}

inline EigenResult to_result(const RayleighQuotient& q, Vector psi, double lambda, double residual, int it,
                             std::string method) {
  normalize(q, psi);
  EigenResult r;
  r.lambda = lambda;
  r.residual = residual;
  r.iterations = it;
  r.method = std::move(method);
  r.certification = "converged stationary value";
  r.field = ScalarField{std::vector<double>(psi.data(), psi.data() + psi.size())};
  return r;
}

/// Smallest eigenvalue of (K + R) x = lambda M_ell x by inverse iteration.
inline EigenResult inverse_iteration(const RayleighQuotient& q, const EigenConfig& cfg) {
  const SparseMatrix a = q.quadratic_operator();
  const SparseMatrix m = q.weighted_mass();
  Eigen::SimplicialLDLT<SparseMatrix> chol(a);
  if (chol.info() != Eigen::Success) throw Error(ErrorKind::fatal, "stiffness factorization failed");
  Vector x = Vector::Ones(a.rows());
  double lambda = x.dot(a * x) / x.dot(m * x);
  double residual = 1.0;
  int it = 0;
  for (; it < cfg.max_iterations; ++it) {
    x = chol.solve(m * x);
    x /= std::sqrt(x.dot(m * x));
    const Vector ax = a * x;
    const double next = x.dot(ax);
    residual = (ax - next * (m * x)).norm() / ax.norm();
    const bool settled = std::abs(next - lambda) <= 1e-14 * next;
    lambda = next;
    if (residual <= 1e-3 * cfg.tol || (settled && residual <= cfg.tol)) break;
  }
  if (residual > cfg.tol) throw Error(ErrorKind::not_converged, "inverse iteration did not converge");
  return to_result(q, x, lambda, residual, it + 1, "inverse iteration");
}

/// Preconditioned descent on the quotient over the sphere D = 1. The
/// direction solves H d = -(N'/p - Q D'/p) with H the Hessian of N/p at a
/// regularization scaled to the current gradients; for p = 2 a unit step is
/// one inverse-iteration step.
inline EigenResult quotient_descent(const RayleighQuotient& q, Vector psi, const EigenConfig& cfg) {
  const double p = q.p();
  normalize(q, psi);
  double value = q(psi);
  double residual = 1.0;
  int it = 0;
  Eigen::SimplicialLDLT<SparseMatrix> chol;
  bool analyzed = false;
  for (; it < cfg.max_iterations; ++it) {
    const Vector gs = q.stiffness_action(psi);
    const Vector r = gs - value * q.mass_action(psi);
    residual = r.norm() / std::max(gs.norm(), 1e-300);
    if (residual <= cfg.tol) break;
    const SparseMatrix h = q.stiffness_hessian(psi, 1e-2);
    if (!analyzed) {
      chol.analyzePattern(h);
      analyzed = true;
    }
    chol.factorize(h);
    if (chol.info() != Eigen::Success) throw Error(ErrorKind::fatal, "preconditioner factorization failed");
    const Vector d = -chol.solve(r);
    const double slope = p * r.dot(d);
    if (!(slope < 0.0)) break;
    double step = 0.0;
    for (double a = 1.0; a > 1e-12; a *= 0.5) {
      const Vector trial = psi + a * d;
      const double qa = q(trial);
      // Near stationarity the decrease is O(residual^2) and drowns in
      // rounding; allow that much slack so the residual can still shrink.
      if (qa <= value + cfg.armijo * a * slope + 64.0 * std::numeric_limits<double>::epsilon() * value) {
        step = a;
        psi = trial;
        value = qa;
        break;
      }
    }
    if (step == 0.0) break;
    normalize(q, psi);
  }
  return to_result(q, psi, value, residual, it, "preconditioned quotient descent");
}

}  // namespace detail

/// First Robin eigenvalue on a mesh. For p = 2 by inverse iteration; for
/// other p by descent on the quotient from psi = 1 and from the p = 2
/// eigenfield, keeping the smaller value. The p != 2 value is an upper bound
/// on the discrete minimum; global optimality is heuristic.
inline EigenResult min_rayleigh(const TriMesh& mesh, const RobinCoefficient& beta, const WeightParams& params,
                                const EigenConfig& cfg = {}) {
  const RayleighQuotient q(mesh, beta, params);
  if (params.p == 2.0) return detail::inverse_iteration(q, cfg);
  const auto p2 = detail::inverse_iteration(
      RayleighQuotient(mesh, beta, WeightParams::make(params.n, 2.0, params.ell)), cfg);
  const auto& start = *p2.field;
  std::vector<EigenResult> runs;
  runs.push_back(detail::quotient_descent(q, Vector::Ones(static_cast<Eigen::Index>(mesh.num_vertices())), cfg));
  runs.push_back(detail::quotient_descent(
      q, Eigen::Map<const Vector>(start.values.data(), static_cast<Eigen::Index>(start.size())), cfg));
  for (auto& r : runs) r.certification = "upper bound certified, global minimum heuristic";
  auto best = std::min_element(runs.begin(), runs.end(),
                               [](const EigenResult& a, const EigenResult& b) { return a.lambda < b.lambda; });
  if (best->residual > cfg.tol) {
    throw Error(ErrorKind::not_converged,
                "quotient descent stalled at relative residual " + std::to_string(best->residual));
  }
  return *best;
}

namespace detail {

/// Radial eigenproblem in x = ln r with F = r^{n-1} |w'|^{p-2} w':
///   dw/dx = r sign(F) |F r^{1-n}|^{1/(p-1)},  dF/dx = -lambda r^{n+ell} |w|^{p-2} w.
struct RadialShooter {
  WeightParams par;
  double lambda;

  void operator()(const std::array<double, 2>& s, std::array<double, 2>& ds, double x) const {
    const double r = std::exp(x);
    const double p = par.p;
    const double g = s[1] * std::pow(r, 1.0 - par.n);
    ds[0] = r * std::copysign(std::pow(std::abs(g), 1.0 / (p - 1.0)), g);
    ds[1] = -lambda * std::pow(r, par.n + par.ell) * std::pow(std::abs(s[0]), p - 2.0) * s[0];
  }

  /// Series start near the origin with w(0) = 1.
  std::array<double, 2> start(double r0) const {
    const double p = par.p, n = par.n, l = par.ell;
    const double e = (p + l) / (p - 1.0);
    const double w = 1.0 - (p - 1.0) / (p + l) * std::pow(lambda / (n + l), 1.0 / (p - 1.0)) * std::pow(r0, e);
    const double f = -lambda * std::pow(r0, n + l) / (n + l);
    return {w, f};
  }
};

inline std::array<double, 2> shoot(const WeightParams& par, double lambda, double radius,
                                   std::vector<double>* grid = nullptr, std::vector<double>* values = nullptr) {
  namespace ode = boost::numeric::odeint;
  const RadialShooter sys{par, lambda};
  const double r0 = radius * 1e-8;
  auto state = sys.start(r0);
  auto stepper = ode::make_controlled(1e-13, 1e-13, ode::runge_kutta_dopri5<std::array<double, 2>>());
  if (grid == nullptr) {
    ode::integrate_adaptive(stepper, sys, state, std::log(r0), std::log(radius), 1e-3);
    return state;
  }
  values->assign(grid->size(), 1.0);
  double x = std::log(r0);
  for (std::size_t i = 0; i < grid->size(); ++i) {
    const double r = (*grid)[i];
    if (r <= r0) continue;
    ode::integrate_adaptive(stepper, sys, state, x, std::log(r), 1e-3);
    x = std::log(r);
    (*values)[i] = state[0];
  }
  return state;
}

}  // namespace detail

/// First eigenvalue on the ball of radius R with constant Robin parameter
/// beta_eff, from the radial Euler-Lagrange equation
///   -(r^{n-1} |w'|^{p-2} w')' = lambda r^{n-1+ell} |w|^{p-2} w,
///   w'(0) = 0,  |w'|^{p-2} w'(R) + beta_eff |w|^{p-2} w(R) = 0,
/// by shooting on lambda with bisection.
inline EigenResult radial_eigen(const SymmetrizedBall& ball, double beta_eff, const WeightParams& params,
                                const EigenConfig& cfg = {}) {
  if (!(beta_eff > 0.0)) throw Error(ErrorKind::invalid_argument, "effective Robin constant must be positive");
  const double R = ball.radius, p = params.p;
  const auto mismatch = [&](double lambda) {
    const auto s = detail::shoot(params, lambda, R);
    return s[1] * std::pow(R, 1.0 - params.n) + beta_eff * std::pow(std::abs(s[0]), p - 2.0) * s[0];
  };
  // psi = 1 bounds the first eigenvalue from above.
  double hi = beta_eff * (params.n + params.ell) * std::pow(R, -1.0 - params.ell);
  int expand = 0;
  while (mismatch(hi) > 0.0) {
    hi *= 2.0;
    if (++expand > 60) throw Error(ErrorKind::not_converged, "radial eigenvalue bracket failure");
  }
  const auto tol = [&](double a, double b) { return std::abs(b - a) <= cfg.bisection_tol * std::max(1.0, std::abs(a)); };
  std::uintmax_t max_iter = 400;
  const auto bracket = boost::math::tools::bisect(mismatch, 0.0, hi, tol, max_iter);
  const double lambda = 0.5 * (bracket.first + bracket.second);

  EigenResult out;
  out.lambda = lambda;
  out.iterations = static_cast<int>(max_iter);
  out.method = "radial shooting";
  out.certification = "bisection bracket " + std::to_string(bracket.second - bracket.first);
  RadialProfile w;
  w.params = params;
  w.radius = R;
  w.curve.x = radial_grid(R, cfg.radial_points);
  detail::shoot(params, lambda, R, &w.curve.x, &w.curve.y);
  const double nrm = weighted_lp_norm(w, p);
  for (double& y : w.curve.y) y /= nrm;
  out.residual = std::abs(mismatch(lambda));
  out.profile = std::move(w);
  return out;
}

/// Rayleigh quotient of a radial profile on its ball with constant Robin
/// parameter beta_eff.
inline double radial_rayleigh_quotient(const RadialProfile& w, double beta_eff) {
  const auto& par = w.params;
  const double p = par.p;
  const auto& x = w.curve.x;
  double grad = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    const double h = x[i] - x[i - 1];
    if (h <= 0.0) continue;
    const double slope = (w.curve.y[i] - w.curve.y[i - 1]) / h;
    grad += std::pow(std::abs(slope), p) * (std::pow(x[i], par.n) - std::pow(x[i - 1], par.n)) / par.n;
  }
  grad *= par.sphere_area();
  const double bdry = beta_eff * par.sphere_area() * std::pow(w.radius, par.n - 1) * std::pow(std::abs(w(w.radius)), p);
  return (grad + bdry) / std::pow(weighted_lp_norm(w, p), p);
}

inline nlohmann::json to_json(const EigenResult& r) {
  return {{"lambda", r.lambda},
          {"residual", r.residual},
          {"iterations", r.iterations},
          {"method", r.method},
          {"certification", r.certification}};
}

/// Eigenfield as CSV: mesh vertices with values, or the radial profile.
inline void write_eigenfield_csv(std::ostream& os, const EigenResult& r, const TriMesh* mesh = nullptr) {
  os.precision(17);
  if (r.profile) {
    write_csv(os, *r.profile);
  } else if (r.field && mesh != nullptr) {
    os << "vertex,x,y,psi\n";
    for (std::size_t i = 0; i < mesh->num_vertices(); ++i) {
      const Vec2 x = mesh->vertex(static_cast<int>(i));
      os << i << ',' << x.x << ',' << x.y << ',' << r.field->values[i] << '\n';
    }
  } else {
    throw Error(ErrorKind::invalid_argument, "eigenfield CSV needs the mesh of a mesh eigenfield");
  }
}

}  // namespace symmcomp
