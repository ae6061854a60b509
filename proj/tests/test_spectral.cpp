#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/tools/roots.hpp>

#include "symmcomp/spectral.hpp"

using namespace symmcomp;

namespace {

constexpr double pi = std::numbers::pi;

// l = -1, n = 2, p = 2: w = J0(2 sqrt(lambda r)), and w'(1) + beta w(1) = 0
// reads -sqrt(lambda) J1(2 sqrt(lambda)) + beta J0(2 sqrt(lambda)) = 0 on R = 1.
double bessel_eigenvalue(double beta) {
  using boost::math::cyl_bessel_j;
  const auto g = [&](double lam) {
    const double s = std::sqrt(lam);
    return -s * cyl_bessel_j(1, 2.0 * s) + beta * cyl_bessel_j(0, 2.0 * s);
  };
  std::uintmax_t it = 200;
  const auto br = boost::math::tools::toms748_solve(g, 1e-12, 1.4, boost::math::tools::eps_tolerance<double>(52), it);
  return 0.5 * (br.first + br.second);
}

Vector ones(const TriMesh& m) { return Vector::Ones(static_cast<Eigen::Index>(m.num_vertices())); }

}  // namespace

TEST(Rayleigh, ConstantOnUnitDisk) {
  const auto par = WeightParams::make(2, 2.0, -1.0);
  const auto mesh = make_disk(1.0, 0.05);
  const double q = rayleigh_quotient(constant_field(mesh, 1.0), mesh, RobinCoefficient::constant(1.0), par);
  // Polygon perimeter over polygon weighted measure; both tend to 2 pi.
  EXPECT_NEAR(q, 1.0, 0.05 * 0.05);
}

TEST(Rayleigh, ZeroHomogeneous) {
  const auto par = WeightParams::make(2, 3.0, -0.5);
  const auto mesh = make_square(1.0, 0.1);
  const auto beta = RobinCoefficient::expression("1 + x^2");
  const auto psi = interpolate(mesh, [](Vec2 x) { return 1.0 + x.x * x.y + 0.3 * std::sin(x.x); });
  const double q = rayleigh_quotient(psi, mesh, beta, par);
  for (double c : {-3.0, 1e-3, 7.5}) {
    auto scaled = psi;
    for (double& v : scaled.values) v *= c;
    EXPECT_NEAR(rayleigh_quotient(scaled, mesh, beta, par), q, 1e-12 * q);
  }
}

TEST(Rayleigh, ZeroFieldRejected) {
  const auto par = WeightParams::make(2, 2.0, -1.0);
  const auto mesh = make_disk(1.0, 0.2);
  EXPECT_THROW(rayleigh_quotient(constant_field(mesh, 0.0), mesh, RobinCoefficient::constant(1.0), par), Error);
}

TEST(RadialEigen, MatchesBesselRoot) {
  const auto par = WeightParams::make(2, 2.0, -1.0);
  for (double beta : {0.5, 1.0, 2.0}) {
    const auto r = radial_eigen(SymmetrizedBall{1.0, par}, beta, par);
    EXPECT_NEAR(r.lambda, bessel_eigenvalue(beta), 1e-9) << beta;
  }
}

TEST(RadialEigen, EigenfieldIsPositiveNormalizedAndSelfConsistent) {
  for (double p : {2.0, 3.0}) {
    const auto par = WeightParams::make(2, p, -1.0);
    const auto r = radial_eigen(SymmetrizedBall{1.3, par}, 0.8, par);
    ASSERT_TRUE(r.profile);
    for (double y : r.profile->curve.y) EXPECT_GT(y, 0.0);
    EXPECT_NEAR(weighted_lp_norm(*r.profile, p), 1.0, 1e-10);
    EXPECT_NEAR(radial_rayleigh_quotient(*r.profile, 0.8), r.lambda, 1e-6 * r.lambda) << p;
  }
}

TEST(RadialEigen, MinimizesRadialQuotient) {
  // Any radial trial field bounds the eigenvalue from above.
  const auto par = WeightParams::make(2, 3.0, -0.5);
  const double R = 1.0, beta = 1.5;
  const auto r = radial_eigen(SymmetrizedBall{R, par}, beta, par);
  for (double a : {0.0, 0.1, 0.3, 0.6}) {
    RadialProfile w;
    w.params = par;
    w.radius = R;
    w.curve.x = radial_grid(R, 2048);
    for (double x : w.curve.x) w.curve.y.push_back(1.0 - a * x * x);
    EXPECT_GE(radial_rayleigh_quotient(w, beta), r.lambda * (1.0 - 1e-9)) << a;
  }
}

TEST(RadialEigen, VanishingRobinConstant) {
  const auto par = WeightParams::make(2, 2.0, -1.0);
  EXPECT_LT(radial_eigen(SymmetrizedBall{1.0, par}, 1e-4, par).lambda, 1e-3);
}

TEST(RadialEigen, DecreasesWithRadius) {
  for (double p : {2.0, 3.0}) {
    const auto par = WeightParams::make(2, p, -1.0);
    EXPECT_GT(radial_eigen(SymmetrizedBall{1.0, par}, 1.0, par).lambda,
              radial_eigen(SymmetrizedBall{1.5, par}, 1.0, par).lambda);
  }
}

TEST(RadialEigen, RejectsNonPositiveConstant) {
  const auto par = WeightParams::make(2, 2.0, -1.0);
  EXPECT_THROW(radial_eigen(SymmetrizedBall{1.0, par}, 0.0, par), Error);
}

TEST(MinRayleigh, DiskQuadraticMatchesRadial) {
  const auto par = WeightParams::make(2, 2.0, -1.0);
  const double exact = bessel_eigenvalue(1.0);
  ASSERT_GT(exact, 0.0);
  ASSERT_LT(exact, 1.0);
  double previous = 0.0;
  for (double h : {0.1, 0.05}) {
    const auto mesh = make_disk(1.0, h);
    const auto r = min_rayleigh(mesh, RobinCoefficient::constant(1.0), par);
    const double gap = std::abs(r.lambda - exact) / exact;
    EXPECT_LT(gap, h) << h;
    if (previous > 0.0) EXPECT_LT(gap, previous);
    previous = gap;
  }
}

TEST(MinRayleigh, EigenfieldProperties) {
  for (double p : {2.0, 3.0}) {
    const auto par = WeightParams::make(2, p, -1.0);
    const auto mesh = make_square(1.0, 0.1);
    const auto beta = RobinCoefficient::expression("1 + x^2");
    const auto r = min_rayleigh(mesh, beta, par);
    ASSERT_TRUE(r.field);
    for (double v : r.field->values) EXPECT_GT(v, 0.0);
    EXPECT_NEAR(weighted_lp_norm(mesh, *r.field, par.ell, p), 1.0, 1e-3);
    EXPECT_NEAR(rayleigh_quotient(*r.field, mesh, beta, par), r.lambda, 1e-8 * r.lambda);
    EXPECT_LE(r.residual, 1e-8);
  }
}

TEST(MinRayleigh, MonotoneInBeta) {
  for (double p : {2.0, 3.0}) {
    const auto par = WeightParams::make(2, p, -1.0);
    const auto mesh = make_disk(1.0, 0.1);
    double last = 0.0;
    for (double beta : {0.5, 1.0, 2.0}) {
      const double lam = min_rayleigh(mesh, RobinCoefficient::constant(beta), par).lambda;
      EXPECT_GT(lam, last) << p << ' ' << beta;
      last = lam;
    }
  }
}

TEST(MinRayleigh, GeneralPOnDiskMatchesRadial) {
  const auto par = WeightParams::make(2, 3.0, -1.0);
  const double exact = radial_eigen(SymmetrizedBall{1.0, par}, 1.0, par).lambda;
  const double h = 0.05;
  const auto r = min_rayleigh(make_disk(1.0, h), RobinCoefficient::constant(1.0), par);
  EXPECT_LT(std::abs(r.lambda - exact) / exact, h);
  EXPECT_EQ(r.certification, "upper bound certified, global minimum heuristic");
}

TEST(MinRayleigh, BelowConstantTrialField) {
  const auto par = WeightParams::make(2, 2.5, -0.5);
  const auto mesh = make_lshape(1.0, 0.1, {0.3, 0.3});
  const auto beta = RobinCoefficient::constant(1.0);
  const double trial = rayleigh_quotient(constant_field(mesh, 1.0), mesh, beta, par);
  EXPECT_LT(min_rayleigh(mesh, beta, par).lambda, trial);
}

TEST(Eigen, JsonAndCsv) {
  const auto par = WeightParams::make(2, 2.0, -1.0);
  const auto r = radial_eigen(SymmetrizedBall{1.0, par}, 1.0, par, EigenConfig{.radial_points = 16});
  const auto j = to_json(r);
  EXPECT_DOUBLE_EQ(j.at("lambda").get<double>(), r.lambda);
  EXPECT_TRUE(j.contains("residual"));
  EXPECT_TRUE(j.contains("iterations"));
  std::ostringstream os;
  write_eigenfield_csv(os, r);
  EXPECT_EQ(os.str().substr(0, 8), "r,value\n");
  EXPECT_THROW(write_eigenfield_csv(os, EigenResult{}), Error);
}
