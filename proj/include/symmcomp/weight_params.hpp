#pragma once

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "symmcomp/error.hpp"

namespace symmcomp {

/// Exponents of the weighted p-Poisson problem: dimension n, operator
/// exponent p and weight exponent ell of the density |x|^ell.
///
/// Construction only rejects inputs for which nothing is defined (n < 2,
/// p <= 1, ell <= -n). Whether the comparison hypotheses hold is reported by
/// the predicates below so ell = 0 can run as a classical cross-check.
struct WeightParams {
  int n = 2;
  double p = 2.0;
  double ell = 0.0;

  static WeightParams make(int n, double p, double ell) {
    if (n < 2) throw Error(ErrorKind::invalid_argument, "dimension n must be >= 2");
    if (!(p > 1.0) || !std::isfinite(p))
      throw Error(ErrorKind::invalid_argument, "exponent p must be finite and > 1");
    if (!std::isfinite(ell))
      throw Error(ErrorKind::invalid_argument, "weight exponent must be finite");
    if (ell <= -n) {
      std::ostringstream os;
      os << "non-integrable weight: ell = " << ell << " <= -n = " << -n;
      throw Error(ErrorKind::non_integrable_weight, os.str());
    }
    return WeightParams{n, p, ell};
  }

  double p_conjugate() const { return p / (p - 1.0); }

  /// Lebesgue volume of the unit ball in R^n.
  double omega_n() const {
    return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
  }

  /// Surface measure n * omega_n of the unit sphere.
  double sphere_area() const { return n * omega_n(); }

  /// Weight exponent carried by the perimeter in the isoperimetric pair.
  double perimeter_exponent() const { return ell / p_conjugate(); }

  /// Power of the weighted measure in the isoperimetric inequality.
  double isoperimetric_power() const {
    return (ell * (p - 1.0) + (n - 1.0) * p) / (p * (n + ell));
  }

  /// Sharp constant of P_{ell/p'}(E) >= gamma * |E|_ell^{isoperimetric_power}.
  double gamma() const {
    return std::pow(sphere_area(), (ell + p) / (p * (n + ell))) *
           std::pow(ell + n, isoperimetric_power());
  }

  /// |B_r|_ell = n omega_n r^{n+ell} / (n+ell).
  double ball_measure(double r) const {
    return sphere_area() * std::pow(r, n + ell) / (n + ell);
  }

  /// Inverse of ball_measure.
  double ball_radius(double measure) const {
    return std::pow((n + ell) * measure / sphere_area(), 1.0 / (n + ell));
  }

  bool h1() const { return p >= n; }
  bool h2() const { return -n < ell && ell < 0.0; }
  bool classical() const { return ell == 0.0; }

  /// Admissibility of the pointwise comparison for f = 1.
  bool pointwise_condition() const {
    if (p == 2.0 && n == 2) return true;
    if (p > 2.0) return ell <= -n + (p - n) / (p - 2.0);
    return false;
  }

  std::string describe() const {
    std::ostringstream os;
    os << "(n=" << n << ", p=" << p << ", ell=" << ell << ")";
    return os.str();
  }
};

}  // namespace symmcomp
