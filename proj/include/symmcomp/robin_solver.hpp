#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "symmcomp/error.hpp"
#include "symmcomp/expression.hpp"
#include "symmcomp/field.hpp"
#include "symmcomp/mesh.hpp"
#include "symmcomp/parallel.hpp"
#include "symmcomp/weight_params.hpp"

namespace symmcomp {

/// Robin parameter beta on the boundary: a constant, an expression in the
/// coordinates, or one value per boundary edge.
class RobinCoefficient {
 public:
  enum class Kind { constant, expression, table };

  RobinCoefficient() = default;

  static RobinCoefficient constant(double value) {
    RobinCoefficient b;
    b.kind_ = Kind::constant;
    b.value_ = value;
    return b;
  }

  static RobinCoefficient expression(Expression expr) {
    RobinCoefficient b;
    b.kind_ = Kind::expression;
    b.expr_ = std::move(expr);
    return b;
  }

  static RobinCoefficient expression(const std::string& text) { return expression(Expression(text)); }

  static RobinCoefficient table(std::vector<double> per_edge) {
    RobinCoefficient b;
    b.kind_ = Kind::table;
    b.table_ = std::move(per_edge);
    return b;
  }

  Kind kind() const { return kind_; }

  double operator()(Vec2 x, std::size_t edge) const {
    switch (kind_) {
      case Kind::constant:
        return value_;
      case Kind::expression:
        return expr_(x);
      case Kind::table:
        if (edge >= table_.size()) throw Error(ErrorKind::invalid_argument, "beta table shorter than boundary");
        return table_[edge];
    }
    return value_;
  }

  std::string describe() const {
    switch (kind_) {
      case Kind::constant: {
        std::ostringstream os;
        os << value_;
        return os.str();
      }
      case Kind::expression:
        return expr_.text();
      case Kind::table:
        return "per-edge table (" + std::to_string(table_.size()) + " values)";
    }
    return {};
  }

 private:
  Kind kind_ = Kind::constant;
  double value_ = 1.0;
  Expression expr_;
  std::vector<double> table_;
};

struct BetaBounds {
  double m = 0.0;  ///< inf over boundary quadrature nodes
  double M = 0.0;  ///< sup over boundary quadrature nodes
};

inline BetaBounds beta_bounds(const TriMesh& mesh, const RobinCoefficient& beta) {
  BetaBounds b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& n : boundary_nodes(mesh)) {
    const double v = beta(n.x, n.edge);
    if (std::isnan(v)) return {v, v};
    b.m = std::min(b.m, v);
    b.M = std::max(b.M, v);
  }
  return b;
}

/// Data of the Robin p-Poisson problem on a mesh; validated on construction.
struct RobinProblem {
  TriMesh mesh;
  WeightParams params;
  ScalarField f;
  RobinCoefficient beta;
  BetaBounds bounds;

  static RobinProblem make(TriMesh mesh, WeightParams params, ScalarField f, RobinCoefficient beta) {
    if (mesh.num_triangles() == 0) throw Error(ErrorKind::invalid_mesh, "empty mesh");
    require_compatible(mesh, f);
    for (double v : f.values) {
      if (!std::isfinite(v)) throw Error(ErrorKind::invalid_argument, "source term is not finite");
      if (v < 0.0) throw Error(ErrorKind::hypothesis, "H4 violated: source term must be nonnegative");
    }
    const double fn = weighted_lp_norm(mesh, f, params.ell, params.p_conjugate());
    if (!std::isfinite(fn)) throw Error(ErrorKind::hypothesis, "H4 violated: source term not in weighted L^p'");
    const BetaBounds b = beta_bounds(mesh, beta);
    if (!(b.m > 0.0)) throw Error(ErrorKind::hypothesis, "H3 violated: inf beta must be positive");
    if (!std::isfinite(b.M)) throw Error(ErrorKind::hypothesis, "H3 violated: sup beta must be finite");
    return RobinProblem{std::move(mesh), params, std::move(f), std::move(beta), b};
  }
};

struct SolverConfig {
  double eps0 = 1e-2;
  double eps_min = 1e-6;
  std::optional<double> tol_solve;  ///< default 1e-9 for p = 2, 1e-7 otherwise
  int max_newton = 200;
  int max_descent = 5000;
  double armijo = 1e-4;

  double tolerance(double p) const { return tol_solve.value_or(p == 2.0 ? 1e-9 : 1e-7); }
};

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

/// G_eps(psi) = (1/p) int (|grad psi|^2 + eps^2)^{p/2} + (1/p) int_bdry beta |psi|^p
///              - int f psi |x|^ell
/// on P1 fields. Gradients are constant per triangle, so the first term is
/// exact; the boundary term uses edge Gauss nodes and the load the weighted
/// mesh quadrature.
class EnergyFunctional {
 public:
  EnergyFunctional(const RobinProblem& problem, double eps) : p_(problem.params.p), eps_(eps) {
    const TriMesh& mesh = problem.mesh;
    nv_ = mesh.num_vertices();
    elements_.resize(mesh.num_triangles());
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
      const auto& tri = mesh.triangles()[t];
      const auto c = mesh.corners(t);
      const double a2 = orient(c[0], c[1], c[2]);
      Element& e = elements_[t];
      e.v = tri;
      e.area = 0.5 * a2;
      for (int k = 0; k < 3; ++k) {
        const Vec2 b = c[(k + 1) % 3], d = c[(k + 2) % 3];
        e.grad[k] = {(b.y - d.y) / a2, (d.x - b.x) / a2};
      }
      domain_area_ += e.area;
    }
    for (const auto& n : boundary_nodes(mesh)) {
      const double beta = problem.beta(n.x, n.edge);
      bnodes_.push_back({n.from, n.to, n.t, n.weight * beta});
    }
    const MeshQuadrature quad(mesh, problem.params.ell);
    std::vector<std::array<double, 3>> local(mesh.num_triangles());
    parallel_for(mesh.num_triangles(), [&](std::size_t t) {
      const auto& tri = mesh.triangles()[t];
      for (const auto& n : quad.nodes(t)) {
        const double fx = n.bary[0] * problem.f[tri[0]] + n.bary[1] * problem.f[tri[1]] + n.bary[2] * problem.f[tri[2]];
        for (int k = 0; k < 3; ++k) local[t][k] += n.weight * fx * n.bary[k];
      }
    });
    load_ = Vector::Zero(static_cast<Eigen::Index>(nv_));
    for (std::size_t t = 0; t < local.size(); ++t)
      for (int k = 0; k < 3; ++k) load_[mesh.triangles()[t][k]] += local[t][k];
  }

  double p() const { return p_; }
  double epsilon() const { return eps_; }
  void set_epsilon(double eps) { eps_ = eps; }
  std::size_t size() const { return nv_; }
  double domain_area() const { return domain_area_; }
  const Vector& load() const { return load_; }

  double gradient_energy(const Vector& u) const {
    std::vector<double> part(elements_.size());
    parallel_for(elements_.size(), [&](std::size_t t) {
      const Vec2 g = element_gradient(elements_[t], u);
      part[t] = elements_[t].area / p_ * std::pow(dot(g, g) + eps_ * eps_, 0.5 * p_);
    });
    double s = 0.0;
    for (double v : part) s += v;
    return s;
  }

  double boundary_energy(const Vector& u) const {
    double s = 0.0;
    for (const auto& b : bnodes_) s += b.weight_beta * std::pow(std::abs(trace(b, u)), p_);
    return s / p_;
  }

  double value(const Vector& u) const { return gradient_energy(u) + boundary_energy(u) - load_.dot(u); }

  /// Discrete weak-form residual: derivative of G along every basis function.
  Vector gradient(const Vector& u) const {
    std::vector<std::array<double, 3>> part(elements_.size());
    parallel_for(elements_.size(), [&](std::size_t t) {
      const Element& e = elements_[t];
      const Vec2 g = element_gradient(e, u);
      const double coef = e.area * std::pow(dot(g, g) + eps_ * eps_, 0.5 * (p_ - 2.0));
      for (int k = 0; k < 3; ++k) part[t][k] = coef * dot(g, e.grad[k]);
    });
    Vector out = -load_;
    for (std::size_t t = 0; t < elements_.size(); ++t)
      for (int k = 0; k < 3; ++k) out[elements_[t].v[k]] += part[t][k];
    for (const auto& b : bnodes_) {
      const double v = trace(b, u);
      const double d = b.weight_beta * std::pow(std::abs(v), p_ - 2.0) * v;
      out[b.from] += d * (1.0 - b.t);
      out[b.to] += d * b.t;
    }
    return out;
  }

  SparseMatrix hessian(const Vector& u) const {
    std::vector<std::array<double, 9>> part(elements_.size());
    parallel_for(elements_.size(), [&](std::size_t t) {
      const Element& e = elements_[t];
      const Vec2 g = element_gradient(e, u);
      const double w = dot(g, g) + eps_ * eps_;
      const double a = e.area * std::pow(w, 0.5 * (p_ - 2.0));
      const double b = (p_ != 2.0 && w > 0.0) ? e.area * (p_ - 2.0) * std::pow(w, 0.5 * (p_ - 4.0)) : 0.0;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          part[t][3 * i + j] = a * dot(e.grad[i], e.grad[j]) + b * dot(g, e.grad[i]) * dot(g, e.grad[j]);
    });
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(9 * elements_.size() + 4 * bnodes_.size());
    for (std::size_t t = 0; t < elements_.size(); ++t)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) trip.emplace_back(elements_[t].v[i], elements_[t].v[j], part[t][3 * i + j]);
    for (const auto& b : bnodes_) {
      const double c = (p_ - 1.0) * b.weight_beta * std::pow(std::abs(trace(b, u)), p_ - 2.0);
      add_boundary(trip, b, c);
    }
    SparseMatrix h(static_cast<Eigen::Index>(nv_), static_cast<Eigen::Index>(nv_));
    h.setFromTriplets(trip.begin(), trip.end());
    return h;
  }

  /// Stiffness plus unweighted-in-u Robin mass: the Hessian of the p = 2
  /// energy, used as preconditioner and as the linear operator for p = 2.
  SparseMatrix quadratic_operator() const {
    std::vector<Eigen::Triplet<double>> trip;
    for (const auto& e : elements_)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) trip.emplace_back(e.v[i], e.v[j], e.area * dot(e.grad[i], e.grad[j]));
    for (const auto& b : bnodes_) add_boundary(trip, b, b.weight_beta);
    SparseMatrix h(static_cast<Eigen::Index>(nv_), static_cast<Eigen::Index>(nv_));
    h.setFromTriplets(trip.begin(), trip.end());
    return h;
  }

 private:
  struct Element {
    Triangle v;
    double area;
    std::array<Vec2, 3> grad;
  };
  struct BNode {
    int from;
    int to;
    double t;
    double weight_beta;
  };

  static Vec2 element_gradient(const Element& e, const Vector& u) {
    return u[e.v[0]] * e.grad[0] + u[e.v[1]] * e.grad[1] + u[e.v[2]] * e.grad[2];
  }
  static double trace(const BNode& b, const Vector& u) { return (1.0 - b.t) * u[b.from] + b.t * u[b.to]; }
  static void add_boundary(std::vector<Eigen::Triplet<double>>& trip, const BNode& b, double c) {
    const double w0 = 1.0 - b.t, w1 = b.t;
    trip.emplace_back(b.from, b.from, c * w0 * w0);
    trip.emplace_back(b.from, b.to, c * w0 * w1);
    trip.emplace_back(b.to, b.from, c * w1 * w0);
    trip.emplace_back(b.to, b.to, c * w1 * w1);
  }

  double p_;
  double eps_;
  std::size_t nv_ = 0;
  double domain_area_ = 0.0;
  std::vector<Element> elements_;
  std::vector<BNode> bnodes_;
  Vector load_;
};

inline EnergyFunctional assemble(const RobinProblem& problem, double eps) { return EnergyFunctional(problem, eps); }

struct LevelTrace {
  double eps = 0.0;
  int iterations = 0;
  double residual = 0.0;
  bool fallback = false;
  std::vector<double> energies;  ///< energy after each accepted step
};

struct SolveRecord {
  int iterations = 0;
  double final_energy = 0.0;
  double residual = 0.0;
  double eps = 0.0;
  std::vector<LevelTrace> trace;
};

struct SolutionField {
  ScalarField u;
  SolveRecord record;
};

/// Thrown when a level of the continuation does not reach the tolerance.
class SolveError : public Error {
 public:
  SolveError(const std::string& what, SolveRecord record)
      : Error(ErrorKind::not_converged, what), record_(std::move(record)) {}
  const SolveRecord& record() const { return record_; }

 private:
  SolveRecord record_;
};

namespace detail {

using Cholesky = Eigen::SimplicialLDLT<SparseMatrix>;

inline void factor_or_fatal(Cholesky& chol, const SparseMatrix& m) {
  chol.factorize(m);
  if (chol.info() != Eigen::Success) throw Error(ErrorKind::fatal, "Hessian factorization failed");
  if (chol.vectorD().minCoeff() <= 0.0) throw Error(ErrorKind::fatal, "indefinite Hessian");
}

/// Backtracking line search for the Armijo condition; returns the step
/// length or 0 when none is found.
inline double armijo(const EnergyFunctional& g, const Vector& u, double gu, const Vector& grad, const Vector& dir,
                     double c, double& energy) {
  const double slope = grad.dot(dir);
  if (!(slope < 0.0)) return 0.0;
  for (double a = 1.0; a > 1e-14; a *= 0.5) {
    const double e = g.value(u + a * dir);
    if (e <= gu + c * a * slope) {
      energy = e;
      return a;
    }
  }
  return 0.0;
}

/// Minimizes G at the current epsilon from u. Newton with Armijo line search;
/// on failure, preconditioned gradient descent.
inline LevelTrace minimize_level(const EnergyFunctional& g, Vector& u, const SolverConfig& cfg, double tol,
                                 Cholesky& chol, const Cholesky& precond) {
  LevelTrace lt;
  lt.eps = g.epsilon();
  double energy = g.value(u);
  Vector grad = g.gradient(u);
  lt.residual = grad.norm();
  while (lt.residual > tol && lt.iterations < cfg.max_newton) {
    factor_or_fatal(chol, g.hessian(u));
    const Vector dir = -chol.solve(grad);
    const double a = armijo(g, u, energy, grad, dir, cfg.armijo, energy);
    if (a == 0.0) break;
    u += a * dir;
    grad = g.gradient(u);
    lt.residual = grad.norm();
    lt.energies.push_back(energy);
    ++lt.iterations;
  }
  if (lt.residual <= tol) return lt;
  lt.fallback = true;
  for (int k = 0; k < cfg.max_descent && lt.residual > tol; ++k) {
    const Vector dir = -precond.solve(grad);
    const double a = armijo(g, u, energy, grad, dir, cfg.armijo, energy);
    if (a == 0.0) break;
    u += a * dir;
    grad = g.gradient(u);
    lt.residual = grad.norm();
    lt.energies.push_back(energy);
    ++lt.iterations;
  }
  return lt;
}

}  // namespace detail

/// Minimizer of G over P1 fields. For p = 2 one linear solve; otherwise
/// Newton with epsilon continuation eps0, eps0/2, ... down to eps_min, each
/// level warm-started from the previous minimizer.
inline SolutionField solve(const RobinProblem& problem, const SolverConfig& cfg = {}) {
  const double p = problem.params.p;
  if (p < 2.0) throw Error(ErrorKind::invalid_argument, "solver requires p >= 2");
  if (!(cfg.eps0 >= cfg.eps_min) || !(cfg.eps_min >= 0.0))
    throw Error(ErrorKind::invalid_argument, "epsilon schedule must satisfy eps0 >= eps_min >= 0");
  const double tol = cfg.tolerance(p);
  EnergyFunctional g(problem, p == 2.0 ? cfg.eps_min : cfg.eps0);
  const SparseMatrix k = g.quadratic_operator();
  detail::Cholesky precond;
  precond.analyzePattern(k);
  detail::factor_or_fatal(precond, k);

  SolutionField out;
  Vector u = precond.solve(g.load());
  if (p == 2.0) {
    LevelTrace lt;
    lt.eps = cfg.eps_min;
    lt.iterations = 1;
    lt.residual = g.gradient(u).norm();
    lt.energies.push_back(g.value(u));
    out.record.trace.push_back(lt);
  } else {
    detail::Cholesky chol;
    chol.analyzePattern(k);
    for (double eps = cfg.eps0;; eps = std::max(0.5 * eps, cfg.eps_min)) {
      g.set_epsilon(eps);
      auto lt = detail::minimize_level(g, u, cfg, tol, chol, precond);
      out.record.iterations += lt.iterations;
      const bool failed = lt.residual > tol;
      out.record.trace.push_back(std::move(lt));
      if (failed) {
        out.record.residual = out.record.trace.back().residual;
        std::ostringstream os;
        os << "solver did not converge at eps = " << eps << ": residual history";
        for (const auto& t : out.record.trace) os << ' ' << t.residual;
        throw SolveError(os.str(), out.record);
      }
      if (eps <= cfg.eps_min) break;
    }
  }
  out.record.iterations = std::max(out.record.iterations, 1);
  out.record.eps = g.epsilon();
  out.record.final_energy = g.value(u);
  out.record.residual = out.record.trace.back().residual;
  if (out.record.residual > tol) {
    std::ostringstream os;
    os << "linear solve residual " << out.record.residual << " above tolerance " << tol;
    throw SolveError(os.str(), out.record);
  }
  out.u.values.assign(u.data(), u.data() + u.size());
  return out;
}

struct TraceNode {
  double arc;
  Vec2 x;
  double value;
  double beta;
  std::size_t edge;
};

/// u at the boundary quadrature nodes, ordered by arc length along the
/// boundary edge list.
inline std::vector<TraceNode> boundary_trace(const RobinProblem& problem, const ScalarField& u) {
  require_compatible(problem.mesh, u);
  std::vector<TraceNode> out;
  for (const auto& n : boundary_nodes(problem.mesh))
    out.push_back({n.arc, n.x, (1.0 - n.t) * u[n.from] + n.t * u[n.to], problem.beta(n.x, n.edge), n.edge});
  return out;
}

struct FluxBalance {
  double boundary = 0.0;  ///< int_bdry beta |u|^{p-2} u
  double source = 0.0;    ///< int f |x|^ell
};

/// Weak form tested with the constant function 1.
inline FluxBalance flux_balance(const RobinProblem& problem, const ScalarField& u) {
  FluxBalance fb;
  const double p = problem.params.p;
  for (const auto& n : boundary_nodes(problem.mesh)) {
    const double v = (1.0 - n.t) * u[n.from] + n.t * u[n.to];
    fb.boundary += n.weight * problem.beta(n.x, n.edge) * std::pow(std::abs(v), p - 2.0) * v;
  }
  fb.source = weighted_integral(problem.mesh, MeshQuadrature(problem.mesh, problem.params.ell), problem.f);
  return fb;
}

inline void write_field_csv(std::ostream& os, const TriMesh& mesh, const ScalarField& u) {
  require_compatible(mesh, u);
  os.precision(17);
  os << "vertex,x,y,u\n";
  for (std::size_t i = 0; i < u.size(); ++i)
    os << i << ',' << mesh.vertex(static_cast<int>(i)).x << ',' << mesh.vertex(static_cast<int>(i)).y << ','
       << u[i] << '\n';
}

/// Companion ".field" file of a mesh: header line then one value per vertex.
inline void write_field(std::ostream& os, const ScalarField& u) {
  os.precision(17);
  os << "symmfield v1 " << u.size() << '\n';
  for (double v : u.values) os << v << '\n';
}

inline ScalarField read_field(std::istream& is) {
  std::string magic, version;
  std::size_t count = 0;
  if (!(is >> magic >> version >> count) || magic != "symmfield" || version != "v1")
    throw Error(ErrorKind::parse, "not a symmfield v1 file");
  ScalarField u;
  u.values.resize(count);
  for (std::size_t i = 0; i < count; ++i)
    if (!(is >> u.values[i])) throw Error(ErrorKind::parse, "field file truncated at value " + std::to_string(i));
  return u;
}

}  // namespace symmcomp
