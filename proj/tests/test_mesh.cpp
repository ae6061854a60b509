#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "symmcomp/mesh.hpp"
#include "symmcomp/weighted_geometry.hpp"

using namespace symmcomp;

namespace {

double total_area(const TriMesh& m) {
  double a = 0.0;
  for (std::size_t t = 0; t < m.num_triangles(); ++t) a += m.area(t);
  return a;
}

}  // namespace

TEST(Mesh, GeneratorsProduceValidMeshes) {
  EXPECT_NO_THROW(make_disk(1.0, 0.1));
  EXPECT_NO_THROW(make_annulus(0.3, 1.0, 0.1));
  EXPECT_NO_THROW(make_square(1.0, 0.1));
  EXPECT_NO_THROW(make_rectangle(1.0, 0.5, 0.1, {0.2, 0.1}));
  EXPECT_NO_THROW(make_ellipse(1.4, 0.8, 0.1));
  EXPECT_NO_THROW(make_lshape(1.0, 0.1, {0.25, 0.25}));
  EXPECT_NO_THROW(make_disk(0.4, 0.05, {0.5, 0.0}));
}

TEST(Mesh, SquareAreaAndBoundary) {
  const auto m = make_square(1.0, 0.25);
  EXPECT_NEAR(total_area(m), 4.0, 1e-12);
  EXPECT_EQ(m.boundary().size(), 32u);
  EXPECT_GE(m.origin_element(), 0);
}

TEST(Mesh, LShapeArea) {
  const auto m = make_lshape(1.0, 0.1, {0.25, 0.25});
  EXPECT_NEAR(total_area(m), 3.0, 1e-12);
}

TEST(Mesh, OriginOnBoundaryIsRejected) {
  // Default L-shape has its re-entrant corner at the origin.
  EXPECT_THROW(make_lshape(1.0, 0.1), Error);
  EXPECT_THROW(make_rectangle(0.5, 0.5, 0.1, {0.5, 0.0}), Error);
  EXPECT_THROW(make_square(1.0, 0.1, {1.0, 0.3}), Error);
}

TEST(Mesh, DegenerateTriangleIsInvalid) {
  std::vector<Vec2> v{{1, 1}, {2, 1}, {3, 1}};
  try {
    TriMesh m(v, {{0, 1, 2}}, {});
    FAIL() << "expected throw";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_mesh);
  }
}

TEST(Mesh, BoundaryListMustMatchTriangulation) {
  std::vector<Vec2> v{{1, 1}, {2, 1}, {1, 2}};
  EXPECT_NO_THROW(TriMesh(v, {{0, 1, 2}}, {{0, 1, 1}, {1, 2, 1}, {2, 0, 1}}));
  EXPECT_THROW(TriMesh(v, {{0, 1, 2}}, {{0, 1, 1}, {1, 2, 1}}), Error);
  EXPECT_THROW(TriMesh(v, {{0, 1, 2}}, {{1, 0, 1}, {1, 2, 1}, {2, 0, 1}}), Error);
}

TEST(Mesh, RoundTripIsIdentity) {
  for (const auto& m : {make_disk(1.0, 0.2), make_lshape(1.0, 0.2, {0.3, 0.2}),
                        make_annulus(0.5, 1.0, 0.2, {0.1, 0.0})}) {
    std::stringstream ss;
    write_mesh(ss, m);
    const auto back = read_mesh(ss);
    EXPECT_TRUE(back == m);
  }
}

TEST(Mesh, ParseErrors) {
  std::stringstream bad("notamesh v1 1 1 1");
  EXPECT_THROW(read_mesh(bad), Error);
  std::stringstream truncated("symmmesh v1 3 1 3\n0 0\n1 0\n");
  EXPECT_THROW(read_mesh(truncated), Error);
}

TEST(Mesh, RefineTwiceGivesSixteenfoldTriangles) {
  const auto m = make_disk(1.0, 0.2);
  const auto r2 = refine(refine(m));
  EXPECT_EQ(r2.num_triangles(), 16 * m.num_triangles());
  EXPECT_EQ(r2.boundary().size(), 4 * m.boundary().size());
  EXPECT_NEAR(total_area(r2), total_area(m), 1e-12);
}

TEST(Mesh, DiskMeshMeasureWithinTolerance) {
  const auto m = make_disk(1.0, 0.05);
  EXPECT_NEAR(weighted_measure(m, -1.0), 2.0 * std::numbers::pi, 1e-3);
  EXPECT_LE(m.max_edge(), 0.05 * 1.8);
}

TEST(Mesh, SquareDoesNotTouchOrigin) {
  const auto m = make_square(1.0, 0.1);
  const Vec2 o{};
  for (const auto& e : m.boundary())
    EXPECT_GT(segment_distance(o, m.vertex(e.from), m.vertex(e.to)), m.geometry_tolerance());
}
