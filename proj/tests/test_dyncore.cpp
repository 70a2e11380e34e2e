#include <cmath>
#include <random>

#include "doctest.h"
#include "jigsaw/dyncore.hpp"
#include "jigsaw/errors.hpp"

using namespace jigsaw;

TEST_CASE("fixed points of z^2") {
  auto fp = fixed_points(PolynomialMap::quadratic(0.0));
  CHECK(std::abs(fp.beta - 1.0) < 1e-12);
  CHECK(std::abs(fp.alpha) < 1e-12);
  CHECK(std::abs(fp.alpha_multiplier) < 1e-12);
  CHECK_FALSE(fp.both_repelling);
}

TEST_CASE("fixed points of z^2 - 2") {
  auto m = PolynomialMap::quadratic(-2.0);
  auto fp = fixed_points(m);
  CHECK(std::abs(fp.beta - 2.0) < 1e-12);
  CHECK(std::abs(fp.alpha + 1.0) < 1e-12);
  CHECK(std::abs(fp.beta_multiplier - 4.0) < 1e-12);
  CHECK(std::abs(fp.alpha_multiplier + 2.0) < 1e-12);
  CHECK(fp.both_repelling);
}

TEST_CASE("fixed points of z^2 + i match the closed form") {
  const cplx c(0.0, 1.0);
  auto m = PolynomialMap::quadratic(c);
  auto fp = fixed_points(m);
  for (cplx p : {fp.alpha, fp.beta}) CHECK(std::abs(p * p - p + c) < 1e-12);
  CHECK(std::abs(fp.alpha_multiplier - 2.0 * fp.alpha) < 1e-12);
  CHECK(fp.both_repelling);
  // The 0-ray lands at beta, which is the root with positive real part here.
  CHECK(fp.beta.real() > fp.alpha.real());
}

TEST_CASE("multiple fixed point is rejected") {
  CHECK_THROWS_AS(fixed_points(PolynomialMap::quadratic(0.25)), Error);
}

TEST_CASE("green function values") {
  CHECK(std::abs(green(PolynomialMap::quadratic(0.0), 2.0) - std::log(2.0)) < 1e-12);
  CHECK(green(PolynomialMap::quadratic(-1.0), 0.0) == 0.0);
  auto m = PolynomialMap::quadratic(-2.0);
  CHECK(std::abs(green(m, m(3.0)) - 2.0 * green(m, 3.0)) < 1e-9);
}

TEST_CASE("green functional equation on random samples") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (cplx c : {cplx(0.0, 1.0), cplx(-1.6, 0.0), cplx(0.3, 0.5)}) {
    auto m = PolynomialMap::quadratic(c);
    int tested = 0;
    while (tested < 100) {
      cplx z(u(rng), u(rng));
      double g = green(m, z);
      if (g < 1e-4 || g > 10) continue;
      ++tested;
      CHECK(std::abs(green(m, m(z)) - 2.0 * g) < 1e-8);
    }
  }
}

TEST_CASE("non-monic cubic potential obeys the functional equation") {
  auto m = PolynomialMap::from_coefficients({10.0, -13.0, 4.0, 0.0});
  for (cplx z : {cplx(1.0, 0.3), cplx(-0.2, 0.4), cplx(0.9, -0.1)}) {
    double g = green(m, z);
    if (g > 1e-4) CHECK(std::abs(green(m, m(z)) - 3.0 * g) < 1e-8);
  }
}

TEST_CASE("critical points with multiplicity") {
  auto m = PolynomialMap::from_coefficients({1.0, 0.0, 0.0, 1.0});  // z^3 + 1
  REQUIRE(m.critical_points().size() == 1);
  CHECK(m.critical_points()[0].multiplicity == 2);
  const cplx a(-1.10692, 0.63601);
  auto f17 = PolynomialMap::from_coefficients({1.0, a, 0.0, 1.0});
  REQUIRE(f17.critical_points().size() == 2);
  bool has0 = false, has_other = false;
  for (auto& c : f17.critical_points()) {
    if (std::abs(c.point) < 1e-10) has0 = true;
    if (std::abs(c.point + 2.0 * a / 3.0) < 1e-10) has_other = true;
  }
  CHECK(has0);
  CHECK(has_other);
}

TEST_CASE("rays of z^2 are radial and land at the unit circle") {
  auto m = PolynomialMap::quadratic(0.0);
  RayTrace r = trace_ray(m, Angle(0, 1), 1e-3);
  REQUIRE(r.landed);
  CHECK(std::abs(*r.landing_point - 1.0) < 1e-6);
  for (cplx p : r.polyline) CHECK(std::abs(p.imag()) < 1e-9);
  for (std::size_t i = 1; i < r.potentials.size(); ++i) CHECK(r.potentials[i] < r.potentials[i - 1]);
}

TEST_CASE("rays of z^2 - 2 follow the Joukowski parametrization") {
  auto m = PolynomialMap::quadratic(-2.0);
  const Angle t(3, 7);
  RayTrace r = trace_ray(m, t, 1e-4, {}, false);
  for (std::size_t i = 0; i < r.polyline.size(); ++i) {
    cplx zeta = std::exp(cplx(r.potentials[i], 2.0 * M_PI * t.value()));
    cplx expect = zeta + 1.0 / zeta;
    CHECK(std::abs(r.polyline[i] - expect) < 1e-9 * (1.0 + std::abs(expect)));
  }
  RayTrace half = trace_ray(m, Angle(1, 2), 1e-3);
  REQUIRE(half.landed);
  CHECK(std::abs(*half.landing_point + 2.0) < 1e-6);
}

TEST_CASE("ray equivariance under the map") {
  auto m = PolynomialMap::quadratic(cplx(0.0, 1.0));
  const Angle t(3, 28);
  RayTrace r = trace_ray(m, t, 1e-3, {}, false);
  RayTrace r2 = trace_ray(m, t.times(2), 1e-3, {}, false);
  // Level j of ray t has potential g; f maps it to potential 2g = level j - s of ray 2t.
  const int s = RayConfig{}.substeps;
  for (std::size_t j = s; j < r.polyline.size(); ++j) {
    cplx image = m(r.polyline[j]);
    CHECK(std::abs(image - r2.polyline[j - s]) < 1e-8);
  }
}

TEST_CASE("alpha ray cycle for c = i") {
  auto cyc = alpha_ray_cycle(PolynomialMap::quadratic(cplx(0.0, 1.0)));
  CHECK(cyc.q == 3);
  REQUIRE(cyc.angles.size() == 3);
  CHECK(cyc.angles[0] == Angle(1, 7));
  CHECK(cyc.angles[1] == Angle(2, 7));
  CHECK(cyc.angles[2] == Angle(4, 7));
  RayTrace r = trace_ray(PolynomialMap::quadratic(cplx(0.0, 1.0)), Angle(1, 7), 1e-3);
  REQUIRE(r.landed);
  CHECK(std::abs(*r.landing_point - cyc.alpha) < 1e-6);
}

TEST_CASE("alpha ray cycles on the real line") {
  for (double c : {-1.0, -1.75}) {
    auto cyc = alpha_ray_cycle(PolynomialMap::quadratic(c));
    CHECK(cyc.q == 2);
    CHECK(cyc.angles[0] == Angle(1, 3));
    CHECK(cyc.angles[1] == Angle(2, 3));
  }
  auto cyc = alpha_ray_cycle(PolynomialMap::quadratic(-1.0));
  CHECK(std::abs(cyc.alpha - (1.0 - std::sqrt(5.0)) / 2.0) < 1e-12);
}

TEST_CASE("alpha cycle angles form one doubling orbit") {
  auto cyc = alpha_ray_cycle(PolynomialMap::quadratic(cplx(-0.1, 0.8)));
  Angle a = cyc.angles[0];
  for (int i = 0; i < cyc.q; ++i) {
    CHECK(std::find(cyc.angles.begin(), cyc.angles.end(), a) != cyc.angles.end());
    a = a.times(2);
  }
  CHECK(a == cyc.angles[0]);
}

TEST_CASE("critical orbits") {
  auto o0 = critical_orbit(PolynomialMap::quadratic(0.0), 5);
  for (cplx p : o0.points) CHECK(p == cplx(0.0));
  auto o1 = critical_orbit(PolynomialMap::quadratic(-1.0), 6);
  for (std::size_t i = 0; i < o1.points.size(); ++i)
    CHECK(o1.points[i] == cplx(i % 2 == 0 ? 0.0 : -1.0));
  auto o = critical_orbit(PolynomialMap::quadratic(-1.6), 8);
  long double x = 0.0L;
  for (std::size_t i = 0; i < o.points.size(); ++i) {
    CHECK(std::abs(static_cast<double>(x) - o.points[i].real()) < 1e-12);
    x = x * x - 1.6L;
  }
  CHECK_FALSE(o.escaped);
  auto esc = critical_orbit(PolynomialMap::quadratic(4.0), 10);
  CHECK(esc.escaped);
}

TEST_CASE("angle arithmetic is exact") {
  Angle a(1, 7);
  CHECK(a.times(2) == Angle(2, 7));
  CHECK(a.times_pow(2, 3) == a);
  CHECK(a.period(2) == 3);
  CHECK(Angle(1, 14).preperiod(2) == 1);
  CHECK(Angle(2, 4) == Angle(1, 2));
  CHECK(Angle::parse("3/28") == Angle(3, 28));
  CHECK(Angle(1, 3) < Angle(1, 2));
}
