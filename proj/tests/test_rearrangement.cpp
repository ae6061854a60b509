#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "symmcomp/rearrangement.hpp"
#include "symmcomp/weighted_geometry.hpp"

using namespace symmcomp;

namespace {

constexpr double pi = std::numbers::pi;

const WeightParams kParams = WeightParams::make(2, 2.0, -1.0);

ScalarField cone(const TriMesh& mesh) {
  return interpolate(mesh, [](Vec2 x) { return 1.0 - norm(x); });
}

ScalarField random_field(const TriMesh& mesh, unsigned seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  ScalarField f;
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i) f.values.push_back(d(rng));
  return f;
}

DistributionCurve analytic_cone_curve() {
  DistributionCurve c;
  c.curve.x = {0.0, 1.0};
  c.curve.y = {2.0 * pi, 0.0};
  c.domain_measure = 2.0 * pi;
  return c;
}

}  // namespace

TEST(Distribution, ConstantFieldIsAStep) {
  const auto mesh = make_disk(1.0, 0.2);
  const double c = 0.7;
  const auto mu = distribution_function(constant_field(mesh, c), mesh, kParams);
  const double total = weighted_measure(mesh, -1.0);
  EXPECT_NEAR(mu.domain_measure, total, 1e-12);
  for (double t : {0.0, 0.1, 0.5, 0.699999}) EXPECT_NEAR(mu(t), total, 1e-10 * total) << t;
  EXPECT_EQ(mu(c), 0.0);
  EXPECT_EQ(mu(1.0), 0.0);

  const auto us = decreasing_rearrangement(mu);
  for (double s : {0.0, 1.0, 3.0, total * 0.999999}) EXPECT_DOUBLE_EQ(us(s), c) << s;
  EXPECT_EQ(us(total), 0.0);
  EXPECT_NEAR(lorentz_norm(mu, 1.0, std::numeric_limits<double>::infinity()), c * total, 1e-9);
}

TEST(Distribution, ZeroFieldHasEmptySuperLevelSets) {
  const auto mesh = make_disk(1.0, 0.3);
  const auto mu = distribution_function(constant_field(mesh, 0.0), mesh, kParams);
  EXPECT_EQ(mu(0.0), 0.0);
  const auto us = decreasing_rearrangement(mu);
  EXPECT_EQ(us(0.5), 0.0);
}

TEST(Distribution, ConeOnUnitDisk) {
  // {1 - |x| > t} is the ball of radius 1 - t, of weighted measure 2 pi (1 - t).
  double prev = 0.0;
  for (double h : {0.1, 0.05, 0.025}) {
    const auto mesh = make_disk(1.0, h);
    const auto mu = distribution_function(cone(mesh), mesh, kParams);
    double err = 0.0;
    for (int i = 0; i <= 20; ++i) {
      const double t = i / 20.0;
      err = std::max(err, std::abs(mu(t) - 2.0 * pi * (1.0 - t)));
    }
    // The innermost ring is a coarse polygon, so the sup error is first order.
    EXPECT_LT(err, 0.6 * h) << h;
    if (prev > 0.0) EXPECT_LT(err, 0.6 * prev);
    prev = err;
  }
}

TEST(Distribution, NonincreasingAndRightContinuous) {
  const auto mesh = make_square(1.0, 0.1, {0.3, 0.2});
  const auto mu = distribution_function(random_field(mesh, 3), mesh, kParams);
  for (std::size_t i = 1; i < mu.curve.size(); ++i) {
    EXPECT_LE(mu.curve.x[i - 1], mu.curve.x[i]);
    EXPECT_LE(mu.curve.y[i], mu.curve.y[i - 1]);
  }
  EXPECT_EQ(mu.curve.x.front(), 0.0);
  EXPECT_LE(mu(0.0), mu.domain_measure * (1.0 + 1e-12));
}

TEST(Distribution, PlateauGivesAJump) {
  // u = min(1, 2(1 - |x|)) is flat on the disk of radius 1/2.
  const auto mesh = make_disk(1.0, 0.05);
  const auto u = interpolate(mesh, [](Vec2 x) { return std::min(1.0, 2.0 * (1.0 - norm(x))); });
  const auto mu = distribution_function(u, mesh, kParams);
  EXPECT_EQ(mu(1.0), 0.0);
  EXPECT_GT(mu(1.0 - 1e-9), 0.8 * pi);  // weighted measure of B_{1/2} is pi
  const auto us = decreasing_rearrangement(mu);
  EXPECT_DOUBLE_EQ(us(0.0), 1.0);
  EXPECT_DOUBLE_EQ(us(0.5), 1.0);
  EXPECT_LT(us(1.1 * pi), 1.0);
}

TEST(Distribution, MatchesMonteCarlo) {
  const auto mesh = make_rectangle(1.0, 0.75, 0.4, {0.2, 0.1});
  ASSERT_GE(mesh.num_triangles(), 40u);
  ASSERT_LE(mesh.num_triangles(), 80u);
  const auto u = random_field(mesh, 11);
  const std::vector<double> levels{0.0, 0.1, 0.3, 0.5, 0.7, 0.9};
  const auto mu = distribution_function(u, mesh, kParams);
  const auto mc = oracle::mc_level_measures(mesh, u.values, -1.0, levels, 1000000, 2024);
  for (std::size_t i = 0; i < levels.size(); ++i)
    EXPECT_LE(std::abs(mu(levels[i]) - mc[i].value), 3.0 * mc[i].sigma + 1e-12) << levels[i];
}

TEST(Distribution, EmptyMeshRejected) {
  EXPECT_THROW(distribution_function(ScalarField{}, TriMesh{}, kParams), Error);
}

TEST(Rearrangement, InverseOfLinearCurve) {
  const auto us = decreasing_rearrangement(analytic_cone_curve());
  for (int i = 0; i <= 10; ++i) {
    const double s = 2.0 * pi * i / 10.0;
    EXPECT_NEAR(us(s), 1.0 - s / (2.0 * pi), 1e-14) << s;
  }
}

TEST(Rearrangement, InfConventionOnFlatPieces) {
  // mu is flat at 3 on [0.2, 0.6]: u takes no values in that range.
  DistributionCurve mu;
  mu.curve.x = {0.0, 0.2, 0.6, 1.0};
  mu.curve.y = {5.0, 3.0, 3.0, 0.0};
  mu.domain_measure = 5.0;
  const auto us = decreasing_rearrangement(mu);
  EXPECT_DOUBLE_EQ(us(3.0), 0.2);
  EXPECT_NEAR(us(3.0 - 1e-9), 0.6, 1e-8);
  EXPECT_DOUBLE_EQ(us(5.0), 0.0);
}

TEST(Rearrangement, RoundTripEquimeasurable) {
  const auto mesh = make_disk(1.0, 0.1, {0.2, -0.1});
  const auto mu = distribution_function(random_field(mesh, 5), mesh, kParams);
  const auto us = decreasing_rearrangement(mu);
  EXPECT_NEAR(us(0.0), mu.sup(), 1e-15);
  for (int i = 0; i < 200; ++i) {
    const double t = mu.sup() * (i + 0.5) / 200.0;
    EXPECT_NEAR(profile_distribution(us, t), mu(t), 1e-12 * mu.domain_measure) << t;
  }
}

TEST(Rearrangement, MonotoneInTheField) {
  const auto mesh = make_square(1.0, 0.1, {0.1, 0.3});
  const auto u = random_field(mesh, 8, 0.0, 1.0);
  ScalarField w = u;
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> d(0.0, 0.3);
  for (auto& v : w.values) v += d(rng);
  LevelGrid grid;
  for (int i = 1; i < 400; ++i) grid.explicit_levels.push_back(1.3 * i / 400.0);
  const auto us = decreasing_rearrangement(distribution_function(u, mesh, kParams, grid));
  const auto ws = decreasing_rearrangement(distribution_function(w, mesh, kParams, grid));
  for (int i = 0; i <= 500; ++i) {
    const double s = us.domain_measure * i / 500.0;
    EXPECT_LE(us(s), ws(s) + 1e-9) << s;
  }
}

TEST(WeightedRearrangement, MeasureSubstitution) {
  DecreasingProfile us;
  us.curve.x = {0.0, 2.0 * pi};
  us.curve.y = {1.0, 0.0};
  us.domain_measure = 2.0 * pi;
  const auto rs = weighted_rearrangement(us, kParams);
  EXPECT_NEAR(rs.radius, 1.0, 1e-14);
  for (int i = 0; i <= 10; ++i) EXPECT_NEAR(rs(i / 10.0), 1.0 - i / 10.0, 1e-14);
}

TEST(WeightedRearrangement, RadialDecreasingFieldIsFixed) {
  const auto mesh = make_disk(1.0, 0.025);
  const auto rs = weighted_rearrangement(decreasing_rearrangement(distribution_function(cone(mesh), mesh, kParams)),
                                         kParams);
  EXPECT_NEAR(rs.radius, 1.0, 1e-4);
  for (int i = 0; i <= 10; ++i) EXPECT_NEAR(rs(i / 10.0 * rs.radius), 1.0 - i / 10.0, 2e-3) << i;
}

TEST(WeightedRearrangement, EquimeasurableFieldsOnDifferentMeshes) {
  // A rotated copy of mesh and field has the same distribution for a radial weight.
  const auto mesh = make_ellipse(1.2, 0.8, 0.08, {0.2, 0.1});
  const double a = 0.7;
  const auto rot = [a](Vec2 x) { return Vec2{std::cos(a) * x.x - std::sin(a) * x.y, std::sin(a) * x.x + std::cos(a) * x.y}; };
  std::vector<Vec2> vs;
  for (const auto& v : mesh.vertices()) vs.push_back(rot(v));
  const TriMesh turned(vs, {mesh.triangles().begin(), mesh.triangles().end()},
                       {mesh.boundary().begin(), mesh.boundary().end()});
  const auto u = random_field(mesh, 21, 0.0, 1.0);
  const auto r1 = weighted_rearrangement(decreasing_rearrangement(distribution_function(u, mesh, kParams)), kParams);
  const auto r2 = weighted_rearrangement(decreasing_rearrangement(distribution_function(u, turned, kParams)), kParams);
  EXPECT_NEAR(r1.radius, r2.radius, 1e-9);
  for (int i = 0; i <= 100; ++i) {
    const double r = r1.radius * i / 100.0;
    EXPECT_NEAR(r1(r), r2(r), 1e-6) << r;
  }
}

TEST(Norms, Examples) {
  const auto mesh = make_disk(1.0, 0.025);
  EXPECT_NEAR(weighted_lp_norm(mesh, constant_field(mesh, 1.0), -1.0, 1.0), 2.0 * pi, 2e-3);
  EXPECT_NEAR(weighted_lp_norm(mesh, cone(mesh), -1.0, 1.0), pi, 2e-3);
  EXPECT_THROW(weighted_lp_norm(mesh, cone(mesh), -1.0, 0.5), Error);
}

TEST(Norms, EquimeasurabilityAndCavalieri) {
  for (double ell : {-1.0, 0.0, 0.8}) {
    const auto par = WeightParams::make(2, 3.0, ell);
    const auto mesh = make_disk(1.0, 0.08, {0.3, 0.1});
    const auto u = random_field(mesh, 17);
    const MeshQuadrature quad(mesh, ell);
    const auto mu = distribution_function(u, mesh, par);
    const auto us = decreasing_rearrangement(mu);
    const auto rs = weighted_rearrangement(us, par);
    for (double q : {1.0, 2.0, 3.0}) {
      const double direct = weighted_lp_norm(mesh, quad, u, q);
      EXPECT_NEAR(lp_norm(us, q), direct, 2e-5 * direct) << ell << ' ' << q;
      EXPECT_NEAR(weighted_lp_norm(rs, q), direct, 2e-5 * direct) << ell << ' ' << q;
      EXPECT_NEAR(cavalieri(mu, q), std::pow(direct, q), 5e-5 * std::pow(direct, q)) << ell << ' ' << q;
    }
  }
}

TEST(Lorentz, Examples) {
  EXPECT_NEAR(lorentz_norm(analytic_cone_curve(), 1.0, 1.0), pi, 1e-12);
  const auto mesh = make_disk(1.0, 0.1);
  const auto u = random_field(mesh, 4);
  const auto mu = distribution_function(u, mesh, kParams);
  const MeshQuadrature quad(mesh, -1.0);
  for (double p : {1.0, 2.0, 3.0}) {
    const double lp = weighted_lp_norm(mesh, quad, u, p);
    EXPECT_NEAR(lorentz_norm(mu, p, p), lp, 1e-5 * lp) << p;
  }
  EXPECT_THROW(lorentz_norm(mu, 0.0, 1.0), Error);
  EXPECT_THROW(lorentz_norm(mu, 1.0, -1.0), Error);
}

TEST(HardyLittlewood, WholeDomainIsEquality) {
  const auto mesh = make_square(1.0, 0.1, {0.2, 0.2});
  const auto u = random_field(mesh, 31, 0.0, 1.0);
  const auto r = hardy_littlewood_check(u, mesh, {}, kParams);
  EXPECT_NEAR(r.lhs, r.rhs, 1e-6 * r.rhs);
  EXPECT_NEAR(r.lhs, weighted_lp_norm(mesh, u, -1.0, 1.0), 1e-12 * r.lhs);
}

TEST(HardyLittlewood, SuperLevelSetsSaturate) {
  const auto mesh = make_square(1.0, 0.1, {0.2, 0.2});
  const auto u = random_field(mesh, 32, 0.0, 1.0);
  for (double t : {0.2, 0.5, 0.8}) {
    Subregion e;
    e.clip_to_level = true;
    e.level = t;
    const auto r = hardy_littlewood_check(u, mesh, e, kParams);
    EXPECT_NEAR(r.lhs, r.rhs, 1e-5 * r.rhs) << t;
  }
}

TEST(HardyLittlewood, RandomSubsetsAreBounded) {
  const auto mesh = make_disk(1.0, 0.1, {0.1, 0.0});
  std::mt19937 rng(41);
  for (unsigned trial = 0; trial < 10; ++trial) {
    const auto u = random_field(mesh, 50 + trial, 0.0, 1.0);
    Subregion e;
    e.triangles.resize(mesh.num_triangles());
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) e.triangles[t] = rng() % 3 == 0;
    const auto r = hardy_littlewood_check(u, mesh, e, kParams);
    EXPECT_LE(r.lhs, r.rhs + 1e-9 * r.rhs) << trial;
    EXPECT_GT(r.lhs, 0.0);
  }
}

TEST(Csv, WritesHeaderAndRows) {
  std::ostringstream os;
  write_csv(os, analytic_cone_curve());
  EXPECT_EQ(os.str().substr(0, 5), "t,mu\n");
  EXPECT_NE(os.str().find("6.28318"), std::string::npos);
}
