#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "symmcomp/error.hpp"

namespace symmcomp {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

/// Twice the signed area of (a, b, c); positive for counter-clockwise.
inline double orient(Vec2 a, Vec2 b, Vec2 c) { return cross(b - a, c - a); }

/// Distance from point q to the closed segment [a, b].
inline double segment_distance(Vec2 q, Vec2 a, Vec2 b) {
  const Vec2 d = b - a;
  const double len2 = dot(d, d);
  double t = len2 > 0.0 ? dot(q - a, d) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return norm(q - (a + t * d));
}

using Triangle = std::array<int, 3>;

/// Directed boundary edge: the domain lies to the left of from -> to.
struct BoundaryEdge {
  int from = 0;
  int to = 0;
  int marker = 1;
  friend bool operator==(const BoundaryEdge&, const BoundaryEdge&) = default;
};

/// Conforming, positively oriented planar triangulation with a watertight,
/// outward-oriented boundary that stays away from the origin. Immutable.
class TriMesh {
 public:
  TriMesh() = default;

  TriMesh(std::vector<Vec2> vertices, std::vector<Triangle> triangles,
          std::vector<BoundaryEdge> boundary)
      : vertices_(std::move(vertices)),
        triangles_(std::move(triangles)),
        boundary_(std::move(boundary)) {
    validate();
  }

  std::span<const Vec2> vertices() const { return vertices_; }
  std::span<const Triangle> triangles() const { return triangles_; }
  std::span<const BoundaryEdge> boundary() const { return boundary_; }

  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_triangles() const { return triangles_.size(); }
  bool empty() const { return triangles_.empty(); }

  const Vec2& vertex(int i) const { return vertices_[static_cast<std::size_t>(i)]; }

  std::array<Vec2, 3> corners(std::size_t t) const {
    const auto& tri = triangles_[t];
    return {vertex(tri[0]), vertex(tri[1]), vertex(tri[2])};
  }

  double area(std::size_t t) const {
    const auto c = corners(t);
    return 0.5 * orient(c[0], c[1], c[2]);
  }

  /// Bounding-box diagonal.
  double diameter() const { return diameter_; }

  /// Longest edge over all triangles.
  double max_edge() const { return max_edge_; }

  /// Tolerance for "origin on the boundary" rejection.
  double geometry_tolerance() const { return 1e-12 * diameter_; }

  /// Index of a triangle whose closure contains the origin, or -1.
  int origin_element() const { return origin_element_; }

  /// Boundary vertex ids in ascending order.
  std::vector<int> boundary_vertices() const {
    std::vector<int> ids;
    for (const auto& e : boundary_) {
      ids.push_back(e.from);
      ids.push_back(e.to);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
  }

  friend bool operator==(const TriMesh& a, const TriMesh& b) {
    return a.vertices_ == b.vertices_ && a.triangles_ == b.triangles_ &&
           a.boundary_ == b.boundary_;
  }

 private:
  void validate() {
    auto fail = [](const std::string& msg) {
      throw Error(ErrorKind::invalid_mesh, "invalid mesh: " + msg);
    };
    if (vertices_.empty() || triangles_.empty()) fail("empty mesh");
    const int nv = static_cast<int>(vertices_.size());

    double xmin = vertices_[0].x, xmax = xmin, ymin = vertices_[0].y, ymax = ymin;
    for (const auto& v : vertices_) {
      if (!std::isfinite(v.x) || !std::isfinite(v.y)) fail("non-finite vertex");
      xmin = std::min(xmin, v.x);
      xmax = std::max(xmax, v.x);
      ymin = std::min(ymin, v.y);
      ymax = std::max(ymax, v.y);
    }
    diameter_ = std::hypot(xmax - xmin, ymax - ymin);

    std::map<std::pair<int, int>, int> directed;
    max_edge_ = 0.0;
    origin_element_ = -1;
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
      const auto& tri = triangles_[t];
      for (int k : tri)
        if (k < 0 || k >= nv) fail("triangle index out of range");
      const auto c = corners(t);
      const double a2 = orient(c[0], c[1], c[2]);
      const double e0 = norm(c[1] - c[0]), e1 = norm(c[2] - c[1]), e2 = norm(c[0] - c[2]);
      const double emax = std::max({e0, e1, e2});
      max_edge_ = std::max(max_edge_, emax);
      if (!(a2 > 1e-14 * emax * emax)) {
        std::ostringstream os;
        os << "degenerate or negatively oriented triangle " << t;
        fail(os.str());
      }
      for (int k = 0; k < 3; ++k) {
        auto key = std::make_pair(tri[k], tri[(k + 1) % 3]);
        if (++directed[key] > 1) fail("non-manifold edge");
      }
      if (origin_element_ < 0) {
        const Vec2 o{0.0, 0.0};
        const double tol = -1e-14 * emax * emax;
        if (orient(c[0], c[1], o) >= tol && orient(c[1], c[2], o) >= tol &&
            orient(c[2], c[0], o) >= tol)
          origin_element_ = static_cast<int>(t);
      }
    }

    std::map<std::pair<int, int>, int> open;
    for (const auto& [edge, count] : directed) {
      if (!directed.count({edge.second, edge.first})) open[edge] = count;
    }
    if (open.size() != boundary_.size())
      fail("boundary edge list does not match the triangulation");
    for (const auto& e : boundary_) {
      if (e.from < 0 || e.from >= nv || e.to < 0 || e.to >= nv)
        fail("boundary index out of range");
      if (!open.count({e.from, e.to}))
        fail("boundary edge is interior or wrongly oriented");
    }

    const Vec2 o{0.0, 0.0};
    const double tau = geometry_tolerance();
    for (const auto& e : boundary_) {
      if (segment_distance(o, vertex(e.from), vertex(e.to)) <= tau)
        fail("origin lies on the boundary");
    }
  }

  std::vector<Vec2> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<BoundaryEdge> boundary_;
  double diameter_ = 0.0;
  double max_edge_ = 0.0;
  int origin_element_ = -1;
};

// ---------------------------------------------------------------------------
// Text format:
//   symmmesh v1 <nv> <nt> <nb>
//   x y            (nv lines)
//   i j k          (nt lines)
//   i j marker     (nb lines)

inline void write_mesh(std::ostream& os, const TriMesh& mesh) {
  os << "symmmesh v1 " << mesh.num_vertices() << ' ' << mesh.num_triangles() << ' '
     << mesh.boundary().size() << '\n';
  os << std::setprecision(17);
  for (const auto& v : mesh.vertices()) os << v.x << ' ' << v.y << '\n';
  for (const auto& t : mesh.triangles()) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  for (const auto& e : mesh.boundary()) os << e.from << ' ' << e.to << ' ' << e.marker << '\n';
}

inline TriMesh read_mesh(std::istream& is) {
  std::string magic, version;
  long nv = -1, nt = -1, nb = -1;
  if (!(is >> magic >> version >> nv >> nt >> nb) || magic != "symmmesh" || version != "v1" ||
      nv < 0 || nt < 0 || nb < 0)
    throw Error(ErrorKind::parse, "mesh: bad header, expected 'symmmesh v1 <nv> <nt> <nb>'");
  std::vector<Vec2> verts(static_cast<std::size_t>(nv));
  for (auto& v : verts)
    if (!(is >> v.x >> v.y)) throw Error(ErrorKind::parse, "mesh: truncated vertex block");
  std::vector<Triangle> tris(static_cast<std::size_t>(nt));
  for (auto& t : tris)
    if (!(is >> t[0] >> t[1] >> t[2])) throw Error(ErrorKind::parse, "mesh: truncated triangle block");
  std::vector<BoundaryEdge> bnd(static_cast<std::size_t>(nb));
  for (auto& e : bnd)
    if (!(is >> e.from >> e.to >> e.marker))
      throw Error(ErrorKind::parse, "mesh: truncated boundary block");
  return TriMesh(std::move(verts), std::move(tris), std::move(bnd));
}

// ---------------------------------------------------------------------------
// Generators

namespace detail {

/// Orients every triangle counter-clockwise, derives the boundary from
/// unpaired directed edges and labels it with marker_of(midpoint).
template <class MarkerFn>
TriMesh finish_mesh(std::vector<Vec2> verts, std::vector<Triangle> tris, MarkerFn marker_of) {
  for (auto& t : tris) {
    if (orient(verts[t[0]], verts[t[1]], verts[t[2]]) < 0.0) std::swap(t[1], t[2]);
  }
  std::map<std::pair<int, int>, int> directed;
  for (const auto& t : tris)
    for (int k = 0; k < 3; ++k) ++directed[{t[k], t[(k + 1) % 3]}];
  std::vector<BoundaryEdge> bnd;
  for (const auto& t : tris) {
    for (int k = 0; k < 3; ++k) {
      const int a = t[k], b = t[(k + 1) % 3];
      if (!directed.count({b, a})) {
        const Vec2 mid = 0.5 * (verts[a] + verts[b]);
        bnd.push_back({a, b, marker_of(mid)});
      }
    }
  }
  return TriMesh(std::move(verts), std::move(tris), std::move(bnd));
}

/// Triangulates the strip between two closed rings of vertex ids ordered by
/// increasing angle, merging by angle.
inline void stitch_rings(const std::vector<int>& inner, const std::vector<double>& inner_ang,
                         const std::vector<int>& outer, const std::vector<double>& outer_ang,
                         std::vector<Triangle>& tris) {
  const std::size_t ni = inner.size(), no = outer.size();
  std::size_t i = 0, j = 0;
  auto ang = [](const std::vector<double>& a, std::size_t k) {
    const std::size_t n = a.size();
    return a[k % n] + 2.0 * std::numbers::pi * static_cast<double>(k / n);
  };
  while (i < ni || j < no) {
    const bool advance_inner =
        j >= no || (i < ni && ang(inner_ang, i + 1) < ang(outer_ang, j + 1));
    if (advance_inner) {
      tris.push_back({inner[i % ni], inner[(i + 1) % ni], outer[j % no]});
      ++i;
    } else {
      tris.push_back({inner[i % ni], outer[(j + 1) % no], outer[j % no]});
      ++j;
    }
  }
}

/// Radius factor for a regular count-gon whose |.|_ell measure matches the
/// circumscribed disk's up to O(count^-4), uniformly in ell.
inline double chord_compensation(int count) {
  const double x = std::numbers::pi / count;
  return 1.0 + x * x / 3.0;
}

inline int ring_count(double width, double h) {
  return std::max(1, static_cast<int>(std::lround(width / h)));
}

}  // namespace detail

/// Disk of radius `radius` centred at `center`, built from concentric rings.
inline TriMesh make_disk(double radius, double h, Vec2 center = {}) {
  if (!(radius > 0.0) || !(h > 0.0)) throw Error(ErrorKind::invalid_argument, "disk: radius and h must be > 0");
  const int rings = detail::ring_count(radius, h);
  const double dr = radius / rings;
  std::vector<Vec2> verts{center};
  std::vector<Triangle> tris;
  std::vector<int> prev{0};
  std::vector<double> prev_ang{0.0};
  for (int k = 1; k <= rings; ++k) {
    const int count = std::max(6, static_cast<int>(std::lround(2.0 * std::numbers::pi * k)));
    const double r = k == rings ? radius * detail::chord_compensation(count) : dr * k;
    const double shift = (k % 2) ? 0.0 : 0.5;
    std::vector<int> ids;
    std::vector<double> ang;
    for (int j = 0; j < count; ++j) {
      const double th = 2.0 * std::numbers::pi * (j + shift) / count;
      ids.push_back(static_cast<int>(verts.size()));
      ang.push_back(th);
      verts.push_back({center.x + r * std::cos(th), center.y + r * std::sin(th)});
    }
    if (k == 1) {
      for (int j = 0; j < count; ++j) tris.push_back({0, ids[j], ids[(j + 1) % count]});
    } else {
      detail::stitch_rings(prev, prev_ang, ids, ang, tris);
    }
    prev = std::move(ids);
    prev_ang = std::move(ang);
  }
  return detail::finish_mesh(std::move(verts), std::move(tris), [](Vec2) { return 1; });
}

/// Annulus r_in < |x - center| < r_out; outer boundary marker 1, inner 2.
inline TriMesh make_annulus(double r_in, double r_out, double h, Vec2 center = {}) {
  if (!(r_in > 0.0) || !(r_out > r_in) || !(h > 0.0))
    throw Error(ErrorKind::invalid_argument, "annulus: need 0 < r_in < r_out and h > 0");
  const int rings = detail::ring_count(r_out - r_in, h);
  const double dr = (r_out - r_in) / rings;
  std::vector<Vec2> verts;
  std::vector<Triangle> tris;
  std::vector<int> prev;
  std::vector<double> prev_ang;
  for (int k = 0; k <= rings; ++k) {
    const double r_nominal = r_in + dr * k;
    const int count = std::max(8, static_cast<int>(std::lround(2.0 * std::numbers::pi * r_nominal / dr)));
    const double r = (k == 0 || k == rings) ? r_nominal * detail::chord_compensation(count) : r_nominal;
    const double shift = (k % 2) ? 0.5 : 0.0;
    std::vector<int> ids;
    std::vector<double> ang;
    for (int j = 0; j < count; ++j) {
      const double th = 2.0 * std::numbers::pi * (j + shift) / count;
      ids.push_back(static_cast<int>(verts.size()));
      ang.push_back(th);
      verts.push_back({center.x + r * std::cos(th), center.y + r * std::sin(th)});
    }
    if (k > 0) detail::stitch_rings(prev, prev_ang, ids, ang, tris);
    prev = std::move(ids);
    prev_ang = std::move(ang);
  }
  const double mid_r = 0.5 * (r_in + r_out);
  return detail::finish_mesh(std::move(verts), std::move(tris), [center, mid_r](Vec2 m) {
    return norm(m - center) > mid_r ? 1 : 2;
  });
}

/// Ellipse with semi-axes (a, b) along the coordinate axes.
inline TriMesh make_ellipse(double a, double b, double h, Vec2 center = {}) {
  if (!(a > 0.0) || !(b > 0.0)) throw Error(ErrorKind::invalid_argument, "ellipse: semi-axes must be > 0");
  const double s = std::max(a, b);
  const TriMesh unit = make_disk(1.0, h / s);
  std::vector<Vec2> verts;
  verts.reserve(unit.num_vertices());
  for (const auto& v : unit.vertices()) verts.push_back({center.x + a * v.x, center.y + b * v.y});
  return TriMesh(std::move(verts), {unit.triangles().begin(), unit.triangles().end()},
                 {unit.boundary().begin(), unit.boundary().end()});
}

namespace detail {

/// Structured grid over [x0,x1]x[y0,y1] with alternating diagonals; cells for
/// which keep(cell centre) is false are dropped.
template <class Keep>
TriMesh grid_mesh(double x0, double x1, double y0, double y1, int nx, int ny, Keep keep) {
  std::vector<int> id(static_cast<std::size_t>((nx + 1) * (ny + 1)), -1);
  std::vector<Vec2> verts;
  std::vector<Triangle> tris;
  auto vid = [&](int i, int j) {
    int& slot = id[static_cast<std::size_t>(j * (nx + 1) + i)];
    if (slot < 0) {
      slot = static_cast<int>(verts.size());
      verts.push_back({x0 + (x1 - x0) * i / nx, y0 + (y1 - y0) * j / ny});
    }
    return slot;
  };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const Vec2 c{x0 + (x1 - x0) * (i + 0.5) / nx, y0 + (y1 - y0) * (j + 0.5) / ny};
      if (!keep(c)) continue;
      const int a = vid(i, j), b = vid(i + 1, j), cc = vid(i + 1, j + 1), d = vid(i, j + 1);
      if ((i + j) % 2 == 0) {
        tris.push_back({a, b, cc});
        tris.push_back({a, cc, d});
      } else {
        tris.push_back({a, b, d});
        tris.push_back({b, cc, d});
      }
    }
  }
  return finish_mesh(std::move(verts), std::move(tris), [](Vec2) { return 1; });
}

}  // namespace detail

/// Rectangle [-half_x, half_x] x [-half_y, half_y] shifted by center.
inline TriMesh make_rectangle(double half_x, double half_y, double h, Vec2 center = {}) {
  if (!(half_x > 0.0) || !(half_y > 0.0) || !(h > 0.0))
    throw Error(ErrorKind::invalid_argument, "rectangle: half-widths and h must be > 0");
  const int nx = 2 * detail::ring_count(half_x, h);
  const int ny = 2 * detail::ring_count(half_y, h);
  return detail::grid_mesh(center.x - half_x, center.x + half_x, center.y - half_y,
                           center.y + half_y, nx, ny, [](Vec2) { return true; });
}

/// Square [-half, half]^2 shifted by center.
inline TriMesh make_square(double half, double h, Vec2 center = {}) {
  return make_rectangle(half, half, h, center);
}

/// L-shape: [-half, half]^2 without the quadrant (0, half] x (0, half],
/// measured relative to the shape's centre, then shifted by center.
inline TriMesh make_lshape(double half, double h, Vec2 center = {}) {
  if (!(half > 0.0) || !(h > 0.0)) throw Error(ErrorKind::invalid_argument, "lshape: half and h must be > 0");
  const int n = 2 * detail::ring_count(half, h);
  return detail::grid_mesh(center.x - half, center.x + half, center.y - half, center.y + half,
                           n, n, [center](Vec2 c) {
                             return !(c.x > center.x && c.y > center.y);
                           });
}

/// Uniform midpoint subdivision: every triangle becomes four.
inline TriMesh refine(const TriMesh& mesh) {
  std::vector<Vec2> verts(mesh.vertices().begin(), mesh.vertices().end());
  std::map<std::pair<int, int>, int> mid;
  auto midpoint = [&](int a, int b) {
    const auto key = std::minmax(a, b);
    auto it = mid.find(key);
    if (it != mid.end()) return it->second;
    const int id = static_cast<int>(verts.size());
    verts.push_back(0.5 * (verts[a] + verts[b]));
    mid.emplace(key, id);
    return id;
  };
  std::vector<Triangle> tris;
  tris.reserve(4 * mesh.num_triangles());
  for (const auto& t : mesh.triangles()) {
    const int m01 = midpoint(t[0], t[1]), m12 = midpoint(t[1], t[2]), m20 = midpoint(t[2], t[0]);
    tris.push_back({t[0], m01, m20});
    tris.push_back({m01, t[1], m12});
    tris.push_back({m20, m12, t[2]});
    tris.push_back({m01, m12, m20});
  }
  std::vector<BoundaryEdge> bnd;
  bnd.reserve(2 * mesh.boundary().size());
  for (const auto& e : mesh.boundary()) {
    const int m = midpoint(e.from, e.to);
    bnd.push_back({e.from, m, e.marker});
    bnd.push_back({m, e.to, e.marker});
  }
  return TriMesh(std::move(verts), std::move(tris), std::move(bnd));
}

}  // namespace symmcomp
