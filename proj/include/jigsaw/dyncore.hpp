#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "jigsaw/angle.hpp"

namespace jigsaw {

using cplx = std::complex<double>;

struct CriticalPoint {
  cplx point;
  int multiplicity = 1;
};

// Polynomial of degree >= 2 with coefficients stored highest degree first.
class PolynomialMap {
 public:
  static PolynomialMap from_coefficients(std::vector<cplx> highest_first);
  static PolynomialMap quadratic(cplx c);

  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  const std::vector<cplx>& coefficients() const { return coeffs_; }
  const std::vector<CriticalPoint>& critical_points() const { return critical_; }

  bool is_monic() const;
  // True for z^2 + c exactly; c() is then the parameter.
  bool is_unicritical_quadratic() const;
  cplx c() const { return coeffs_.back(); }

  cplx operator()(cplx z) const;
  cplx derivative(cplx z) const;
  // Returns f(z) and writes f'(z).
  cplx eval(cplx z, cplx& deriv) const;

  double escape_radius() const { return escape_radius_; }
  int budget() const { return budget_; }
  void set_budget(int budget) { budget_ = budget; }
  // log|a_d|/(d-1): shifts the potential so G(z) ~ log|z| + this at infinity.
  double leading_log_shift() const;

 private:
  std::vector<cplx> coeffs_;
  std::vector<CriticalPoint> critical_;
  double escape_radius_ = 4.0;
  int budget_ = 1024;
};

// Roots of a polynomial (highest degree first) by Aberth iteration plus Newton polish.
std::vector<cplx> polynomial_roots(const std::vector<cplx>& highest_first);

struct FixedPointPair {
  cplx alpha;
  cplx beta;
  cplx alpha_multiplier;
  cplx beta_multiplier;
  bool both_repelling = false;
};

FixedPointPair fixed_points(const PolynomialMap& map);

// Potential (Green's function) with the iteration budget of the map.
double green(const PolynomialMap& map, cplx z);

struct RayConfig {
  int substeps = 8;            // potential levels per halving (per factor d)
  int top_exponent = 4;        // rays start at potential scale * d^top_exponent
  double level_scale = 1.0;    // potential levels are scale * d^(top - j/s)
  double newton_radius = 12.0; // iterate until d^n * g >= this before solving
  int max_newton = 40;
  int max_halvings = 12;
  int landing_points = 16;
  double landing_diameter = 1e-8;
  double landing_tolerance = 1e-6;
  double potential_floor = 1e-200;
};

struct RayTrace {
  Angle angle;
  std::vector<cplx> polyline;      // decreasing potential
  std::vector<double> potentials;  // matching polyline
  std::optional<cplx> landing_point;
  bool landed = false;
};

// Traces the ray from the top potential down to G_stop. When landing detection is
// requested the descent continues below G_stop until convergence or the floor.
RayTrace trace_ray(const PolynomialMap& map, const Angle& angle, double G_stop,
                   const RayConfig& cfg = {}, bool detect_landing = true);

// Single Newton solve for the point of potential g and angle theta (theta given
// as an exact angle plus a small real offset), started from `guess`.
std::optional<cplx> boettcher_point(const PolynomialMap& map, double g, const Angle& base,
                                    double offset, cplx guess, const RayConfig& cfg = {});

struct AlphaCycle {
  int q = 0;
  std::vector<Angle> angles;  // sorted
  cplx alpha;
};

AlphaCycle alpha_ray_cycle(const PolynomialMap& map, int max_period = 20,
                           const RayConfig& cfg = {});

struct CriticalOrbit {
  std::vector<cplx> points;
  bool escaped = false;
  std::optional<int> escape_index;
};

CriticalOrbit critical_orbit(const PolynomialMap& map, int n);
CriticalOrbit critical_orbit(const PolynomialMap& map, int n, cplx start);

}  // namespace jigsaw
