#pragma once

#include <cmath>
#include <map>
#include <sstream>
#include <span>
#include <vector>

#include "symmcomp/error.hpp"
#include "symmcomp/mesh.hpp"
#include "symmcomp/parallel.hpp"
#include "symmcomp/quadrature.hpp"
#include "symmcomp/weight_params.hpp"

namespace symmcomp {

/// |Omega|_ell = integral of |x|^ell over the mesh (n = 2).
inline double weighted_measure(const TriMesh& mesh, double ell) {
  if (ell <= -2.0) {
    std::ostringstream os;
    os << "non-integrable weight: ell = " << ell << " <= -n";
    throw Error(ErrorKind::non_integrable_weight, os.str());
  }
  if (mesh.empty()) throw Error(ErrorKind::invalid_mesh, "invalid mesh: empty mesh");
  std::vector<double> part(mesh.num_triangles());
  parallel_for(part.size(), [&](std::size_t t) {
    part[t] = weighted_triangle_measure(mesh.corners(t), ell);
  });
  double sum = 0.0;
  for (double v : part) sum += v;
  return sum;
}

/// P_k of a closed polygonal curve given as directed edges over `points`.
inline double weighted_perimeter(std::span<const Vec2> points, std::span<const BoundaryEdge> edges,
                                 double k) {
  std::map<int, int> balance;
  for (const auto& e : edges) {
    ++balance[e.from];
    --balance[e.to];
  }
  for (const auto& [v, b] : balance)
    if (b != 0 || edges.empty())
      throw Error(ErrorKind::invalid_mesh, "boundary not rectifiable as closed curve");
  if (edges.empty()) throw Error(ErrorKind::invalid_mesh, "boundary not rectifiable as closed curve");

  const auto& rule = edge_rule();
  double sum = 0.0;
  for (const auto& e : edges) {
    const Vec2 a = points[static_cast<std::size_t>(e.from)];
    const Vec2 b = points[static_cast<std::size_t>(e.to)];
    const double len = norm(b - a);
    double acc = 0.0;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const Vec2 x = a + rule.nodes[q] * (b - a);
      acc += rule.weights[q] * (k == 0.0 ? 1.0 : std::pow(norm(x), k));
    }
    sum += len * acc;
  }
  return sum;
}

/// P_k(Omega) = boundary integral of |x|^k.
inline double weighted_perimeter(const TriMesh& mesh, double k) {
  if (!(k > -1.0)) throw Error(ErrorKind::invalid_argument, "perimeter weight exponent must be > -1");
  return weighted_perimeter(mesh.vertices(), mesh.boundary(), k);
}

/// Centred ball with prescribed weighted measure.
struct SymmetrizedBall {
  double radius = 0.0;
  WeightParams params;

  double measure() const { return params.ball_measure(radius); }
  /// P_{ell/p'} of the ball.
  double perimeter() const {
    return params.sphere_area() *
           std::pow(radius, params.n - 1.0 + params.perimeter_exponent());
  }
};

inline SymmetrizedBall symmetrized_ball(double measure, const WeightParams& params) {
  if (!(measure > 0.0)) throw Error(ErrorKind::invalid_argument, "empty domain: weighted measure must be > 0");
  return SymmetrizedBall{params.ball_radius(measure), params};
}

struct IsoperimetricReport {
  double lhs = 0.0;     ///< P_{ell/p'}(Omega)
  double rhs = 0.0;     ///< gamma |Omega|_ell^{power}
  double margin = 0.0;  ///< lhs - rhs
  double measure = 0.0;
  bool hypotheses = false;
  bool holds(double tol) const { return margin >= -tol; }
};

inline IsoperimetricReport isoperimetric_check(const TriMesh& mesh, const WeightParams& params) {
  IsoperimetricReport r;
  r.measure = weighted_measure(mesh, params.ell);
  r.lhs = weighted_perimeter(mesh, params.perimeter_exponent());
  r.rhs = params.gamma() * std::pow(r.measure, params.isoperimetric_power());
  r.margin = r.lhs - r.rhs;
  r.hypotheses = params.h1() && (params.h2() || params.classical());
  return r;
}

}  // namespace symmcomp
