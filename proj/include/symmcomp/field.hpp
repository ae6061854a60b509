#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "symmcomp/error.hpp"
#include "symmcomp/mesh.hpp"
#include "symmcomp/parallel.hpp"
#include "symmcomp/quadrature.hpp"

namespace symmcomp {

/// Vertex values of a continuous piecewise-linear function on a TriMesh.
struct ScalarField {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
};

template <class Fn>
ScalarField interpolate(const TriMesh& mesh, Fn&& fn) {
  ScalarField f;
  f.values.reserve(mesh.num_vertices());
  for (const auto& v : mesh.vertices()) f.values.push_back(fn(v));
  return f;
}

inline ScalarField constant_field(const TriMesh& mesh, double c) {
  return ScalarField{std::vector<double>(mesh.num_vertices(), c)};
}

inline void require_compatible(const TriMesh& mesh, const ScalarField& f) {
  if (f.size() != mesh.num_vertices())
    throw Error(ErrorKind::invalid_argument, "field size does not match mesh vertex count");
}

/// Value of the P1 field at barycentric coordinates of triangle t.
inline double p1_value(const TriMesh& mesh, const ScalarField& f, std::size_t t,
                       const std::array<double, 3>& bary) {
  const auto& tri = mesh.triangles()[t];
  return bary[0] * f[tri[0]] + bary[1] * f[tri[1]] + bary[2] * f[tri[2]];
}

namespace detail {

/// Part of a triangle where the linear interpolant of g exceeds t.
inline std::size_t clip_above(const std::array<Vec2, 3>& c, const std::array<double, 3>& g, double t,
                              std::array<Vec2, 4>& out) {
  std::size_t count = 0;
  for (int k = 0; k < 3; ++k) {
    const int m = (k + 1) % 3;
    const bool in_k = g[k] > t, in_m = g[m] > t;
    if (in_k) out[count++] = c[k];
    if (in_k != in_m) {
      const double w = (t - g[k]) / (g[m] - g[k]);
      out[count++] = c[k] + w * (c[m] - c[k]);
    }
  }
  return count;
}

}  // namespace detail

struct QuadNode {
  Vec2 x;
  std::array<double, 3> bary;
  double weight;  ///< includes |x|^ell and the area element
};

/// Per-triangle quadrature for the density |x|^ell, computed once per mesh.
/// Every weighted volume integral of the solver, the eigen solver and the
/// norms runs through the same nodes so the discrete quantities agree.
class MeshQuadrature {
 public:
  MeshQuadrature(const TriMesh& mesh, double ell) : ell_(ell) {
    if (ell <= -2.0) throw Error(ErrorKind::non_integrable_weight, "non-integrable weight: ell <= -n");
    std::vector<std::vector<QuadNode>> per(mesh.num_triangles());
    parallel_for(per.size(), [&](std::size_t t) {
      visit_weighted_triangle(mesh.corners(t), ell,
                              [&](Vec2 x, const std::array<double, 3>& b, double w) {
                                per[t].push_back({x, b, w});
                              });
    });
    offsets_.reserve(per.size() + 1);
    offsets_.push_back(0);
    for (auto& v : per) {
      nodes_.insert(nodes_.end(), v.begin(), v.end());
      offsets_.push_back(nodes_.size());
    }
  }

  double ell() const { return ell_; }
  std::size_t num_triangles() const { return offsets_.size() - 1; }

  std::span<const QuadNode> nodes(std::size_t t) const {
    return {nodes_.data() + offsets_[t], offsets_[t + 1] - offsets_[t]};
  }

 private:
  double ell_;
  std::vector<QuadNode> nodes_;
  std::vector<std::size_t> offsets_;
};

/// Edge quadrature node on the boundary.
struct BoundaryNode {
  Vec2 x;
  double t;       ///< position along the edge in [0, 1]
  double weight;  ///< length element
  double arc;     ///< cumulative arc length along the boundary edge list
  int from;
  int to;
  std::size_t edge;
};

inline std::vector<BoundaryNode> boundary_nodes(const TriMesh& mesh) {
  const auto& rule = edge_rule();
  std::vector<BoundaryNode> nodes;
  nodes.reserve(mesh.boundary().size() * rule.nodes.size());
  double arc = 0.0;
  for (std::size_t e = 0; e < mesh.boundary().size(); ++e) {
    const auto& be = mesh.boundary()[e];
    const Vec2 a = mesh.vertex(be.from), b = mesh.vertex(be.to);
    const double len = norm(b - a);
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const double t = rule.nodes[q];
      nodes.push_back({a + t * (b - a), t, len * rule.weights[q], arc + t * len, be.from, be.to, e});
    }
    arc += len;
  }
  return nodes;
}

/// (integral |u|^q |x|^ell dx)^{1/q}. Triangles on which u changes sign are
/// split along the zero line, where |u| has a kink.
inline double weighted_lp_norm(const TriMesh& mesh, const MeshQuadrature& quad, const ScalarField& u,
                               double q) {
  require_compatible(mesh, u);
  if (!(q >= 1.0)) throw Error(ErrorKind::invalid_argument, "norm exponent must be >= 1");
  std::vector<double> part(mesh.num_triangles(), 0.0);
  parallel_for(mesh.num_triangles(), [&](std::size_t t) {
    const auto& tri = mesh.triangles()[t];
    const std::array<double, 3> g{u[tri[0]], u[tri[1]], u[tri[2]]};
    const double lo = std::min({g[0], g[1], g[2]}), hi = std::max({g[0], g[1], g[2]});
    if (lo >= 0.0 || hi <= 0.0) {
      for (const auto& n : quad.nodes(t)) part[t] += n.weight * std::pow(std::abs(p1_value(mesh, u, t, n.bary)), q);
      return;
    }
    const auto c = mesh.corners(t);
    const double area2 = orient(c[0], c[1], c[2]);
    for (double sign : {1.0, -1.0}) {
      const std::array<double, 3> s{sign * g[0], sign * g[1], sign * g[2]};
      std::array<Vec2, 4> poly;
      const std::size_t n = detail::clip_above(c, s, 0.0, poly);
      for (std::size_t k = 1; k + 1 < n; ++k)
        visit_weighted_triangle({poly[0], poly[k], poly[k + 1]}, quad.ell(),
                                [&](Vec2 x, const std::array<double, 3>&, double w) {
                                  const auto b = detail::barycentric(c, area2, x);
                                  part[t] += w * std::pow(std::abs(b[0] * g[0] + b[1] * g[1] + b[2] * g[2]), q);
                                });
    }
  });
  double sum = 0.0;
  for (double v : part) sum += v;
  return std::pow(sum, 1.0 / q);
}

inline double weighted_lp_norm(const TriMesh& mesh, const ScalarField& u, double ell, double q) {
  return weighted_lp_norm(mesh, MeshQuadrature(mesh, ell), u, q);
}

/// integral of u |x|^ell dx.
inline double weighted_integral(const TriMesh& mesh, const MeshQuadrature& quad, const ScalarField& u) {
  require_compatible(mesh, u);
  double sum = 0.0;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t)
    for (const auto& n : quad.nodes(t)) sum += n.weight * p1_value(mesh, u, t, n.bary);
  return sum;
}

}  // namespace symmcomp
