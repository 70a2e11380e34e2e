#include <chrono>
#include <cmath>

#include "doctest.h"
#include "jigsaw/errors.hpp"
#include "jigsaw/modulus.hpp"

using namespace jigsaw;

namespace {
Polyline circle(double r, int n = 4000, cplx center = 0.0) {
  Polyline p;
  for (int k = 0; k < n; ++k) p.push_back(center + std::polar(r, 2.0 * M_PI * k / n));
  return p;
}
Polyline square(double half) {
  return {cplx(-half, -half), cplx(half, -half), cplx(half, half), cplx(-half, half)};
}
}  // namespace

TEST_CASE("round modulus closed form") {
  CHECK(std::abs(round_modulus(1.0, std::exp(2 * M_PI)).lo - 1.0) < 1e-12);
  auto m = round_modulus(1.0, 2.0);
  CHECK(std::abs(m.lo - 0.110318) < 1e-6);
  CHECK(m.lo == m.hi);
  CHECK_THROWS_AS(round_modulus(1.0, 1.0), Error);
}

TEST_CASE("grid estimate calibrates against round annuli") {
  for (double ratio : {1.5, 2.0, 5.0, 20.0}) {
    auto est = estimate_modulus(circle(1.0), circle(1.0 / ratio));
    const double exact = std::log(ratio) / (2 * M_PI);
    CHECK(std::abs(est.estimate - exact) < 0.05 * exact);
    CHECK(est.lo <= exact * 1.02);
    CHECK(est.hi >= exact * 0.98);
  }
}

TEST_CASE("off-centre annulus keeps a positive estimate") {
  auto est = estimate_modulus(circle(1.0), circle(0.3, 2000, cplx(0.2, 0.1)));
  CHECK(est.lo > 0.0);
  CHECK(est.estimate < std::log(1.0 / 0.3) / (2 * M_PI));
}

TEST_CASE("square annulus agrees with a finer reference run") {
  ModulusOptions coarse;
  auto est = estimate_modulus(square(1.5), square(0.5), coarse);
  ModulusOptions fine;
  fine.initial_grid = 4 * est.grid;
  fine.max_grid = 4 * est.grid;
  auto ref = estimate_modulus(square(1.5), square(0.5), fine);
  CHECK(ref.estimate >= est.lo);
  CHECK(ref.estimate <= est.hi);
}

TEST_CASE("touching boundaries are degenerate") {
  Polyline outer = circle(1.0);
  Polyline inner = circle(0.5, 400, cplx(0.5, 0.0));  // touches the outer circle at 1
  auto est = estimate_modulus(outer, inner);
  CHECK(est.is_degenerate());
}

TEST_CASE("monotonicity at fixed resolution") {
  ModulusOptions fixed;
  fixed.initial_grid = 128;
  fixed.max_grid = 128;
  auto small = estimate_modulus(circle(1.0), circle(0.4), fixed);
  auto larger = estimate_modulus(circle(1.2), circle(0.4), fixed);
  auto thinner = estimate_modulus(circle(1.0), circle(0.3), fixed);
  CHECK(larger.lo >= small.lo);
  CHECK(thinner.lo >= small.lo);
}

TEST_CASE("Groetzsch combination") {
  ModulusInterval a;
  a.lo = 0.1;
  a.hi = 0.12;
  auto s = groetzsch_combine({a, a});
  CHECK(std::abs(s.lo - 0.2) < 1e-15);
  CHECK(s.hi_infinite());
  auto eq = groetzsch_combine({round_modulus(1, 2), round_modulus(2, 4)});
  CHECK(std::abs(eq.lo - round_modulus(1, 4).lo) < 1e-12);
  CHECK(groetzsch_combine({ModulusInterval::degenerate(), a}).lo == 0.1);
  // Superadditivity direction against a direct estimate of the containing annulus.
  auto whole = estimate_modulus(circle(4.0), circle(1.0));
  auto p1 = estimate_modulus(circle(2.0), circle(1.0));
  auto p2 = estimate_modulus(circle(4.0), circle(2.0));
  CHECK(groetzsch_combine({p1, p2}).lo <= whole.hi + 1e-12);
}

TEST_CASE("McMullen bound arithmetic") {
  CHECK(mcmullen_bound(M_PI, ModulusInterval::degenerate()) == doctest::Approx(M_PI));
  ModulusInterval m;
  m.lo = 1.0 / (4 * M_PI);
  CHECK(mcmullen_bound(1.0, m) == doctest::Approx(0.5));
}
