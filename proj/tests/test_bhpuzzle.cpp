#include <cmath>
#include <numbers>

#include "doctest.h"
#include "jigsaw/bhpuzzle.hpp"
#include "jigsaw/errors.hpp"
#include "json.hpp"

using namespace jigsaw;

namespace {

// x (x - 0.76)^2 / 0.24^2
PolynomialMap disconnected_cubic() {
  const double s = 0.24 * 0.24;
  return PolynomialMap::from_coefficients({1 / s, -1.52 / s, 0.5776 / s, 0.0});
}
// x (2x - 1)(5x - 4)
PolynomialMap renormalizable_cubic() { return PolynomialMap::from_coefficients({10.0, -13.0, 4.0, 0.0}); }
const cplx kPeriodOneA{-1.1069243111212884, 0.6360098247570345};
PolynomialMap period_one_cubic() { return PolynomialMap::from_coefficients({1.0, kPeriodOneA, 0.0, 1.0}); }
PolynomialMap escaping_cubic() { return PolynomialMap::from_coefficients({1.0, 0.0, 3.0, 3.0}); }

const BHPuzzle& p_dis() {
  static BHPuzzle p = bh_build(disconnected_cubic(), 7);
  return p;
}
const BHPuzzle& p_ren() {
  static BHPuzzle p = bh_build(renormalizable_cubic(), 6);
  return p;
}
const BHPuzzle& p_one() {
  static BHPuzzle p = bh_build(period_one_cubic(), 4);
  return p;
}
const BHPuzzle& pesc() {
  static BHPuzzle p = bh_build(escaping_cubic(), 6);
  return p;
}

Tableau critical_tableau(const BHPuzzle& p, int depth, int width) {
  return bh_tableau(p, bh_orbit(p.map(), *p.bounded_critical(), width), depth);
}

void check_structure(const BHPuzzle& P) {
  const int d = P.degree();
  for (int k = 1; k <= P.max_depth(); ++k) {
    // Each piece is covered with total degree d.
    std::vector<int> cover(P.pieces(k - 1).size(), 0);
    for (const auto& p : P.pieces(k)) cover[p.image_id] += p.degree;
    for (int c : cover) CHECK(c == d);
  }
  for (int k = 0; k <= P.max_depth(); ++k) {
    double flux = 0.0;
    for (const auto& p : P.pieces(k)) {
      flux += p.flux;
      // Degree counted independently from critical-point membership.
      int deg = 1;
      for (const auto& w : P.map().critical_points())
        if (P.piece_index(w.point, k) == p.id) deg += w.multiplicity;
      CHECK(deg == p.degree);
      CHECK(P.piece_index(p.seed, k) == p.id);
      if (k > 0) CHECK(P.piece_index(P.map()(p.seed), k - 1) == p.image_id);
    }
    CHECK(flux == doctest::Approx(1.0).epsilon(1e-9));
  }
}

}  // namespace

TEST_CASE("disconnected cubic: c0 = 0.76 -> 0 -> 0 and J in [0, 1]") {
  const auto f = disconnected_cubic();
  CHECK(std::abs(f(0.76)) < 1e-12);
  CHECK(std::abs(f(0.0)) == 0.0);
  const auto& P = p_dis();
  REQUIRE(P.bounded_critical());
  CHECK(std::abs(*P.bounded_critical() - 0.76) < 1e-9);
  REQUIRE(P.escaping_critical().size() == 1);
  for (cplx z : bh_samples(f, 40, 3)) {
    CHECK(std::abs(z.imag()) < 1e-9);
    CHECK(z.real() >= -1e-9);
    CHECK(z.real() <= 1 + 1e-9);
  }
}

TEST_CASE("renormalizable cubic: 2/3 escapes to -infinity") {
  const auto f = renormalizable_cubic();
  cplx z = 2.0 / 3.0;
  for (int i = 0; i < 6; ++i) z = f(z);
  CHECK(z.real() < -1e6);
  CHECK(std::abs(z.imag()) < 1e-9 * std::abs(z));
  CHECK(green(f, 2.0 / 3.0) > 0.0);
  REQUIRE(p_ren().bounded_critical());
  CHECK(std::abs(*p_ren().bounded_critical() - 0.2) < 1e-9);
}

TEST_CASE("level choice and errors") {
  const auto& P = p_dis();
  const double gw = green(disconnected_cubic(), P.escaping_critical()[0].point);
  CHECK(P.G0() < 3 * gw);
  CHECK(P.epsilon() > 0.0);
  CHECK(P.G0() - P.epsilon() > P.G0() / 3);
  CHECK((gw < P.G0() - P.epsilon() || gw > P.G0()));
  BHConfig bad;
  bad.G0 = 3.5 * gw;
  CHECK_THROWS_AS(bh_build(disconnected_cubic(), 1, bad), Error);
  bad.G0 = gw;  // of the form G(w)/d^0
  try {
    bh_build(disconnected_cubic(), 1, bad);
    FAIL("expected BadLevel");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::BadLevel);
  }
  BHConfig wide;
  wide.G0 = 1.2 * gw;
  wide.epsilon = 0.5 * gw;  // band would contain G(w)
  CHECK_THROWS_AS(bh_build(disconnected_cubic(), 1, wide), Error);
  CHECK_THROWS_AS(bh_build(PolynomialMap::quadratic({0.0, 1.0}), 1), Error);
}

TEST_CASE("structure: coverings, degrees, flux shares") {
  check_structure(p_dis());
  check_structure(p_ren());
  check_structure(pesc());
  CHECK(p_dis().pieces(0).size() == 1);
  CHECK(p_dis().pieces(1).size() == 2);
  CHECK(pesc().pieces(3).size() == 27);
}

TEST_CASE("pieces of one depth are disjoint and map onto their images") {
  const auto& P = p_dis();
  for (int k = 1; k <= 4; ++k) {
    const auto& ps = P.pieces(k);
    for (const auto& a : ps)
      for (const auto& b : ps)
        if (a.id != b.id) CHECK_FALSE(b.grid.contains(a.seed));
    for (const auto& p : ps) {
      const auto& g = p.grid;
      int inside = 0, mapped = 0;
      for (int j = 1; j + 1 < g.ny; j += 3)
        for (int i = 1; i + 1 < g.nx; i += 3) {
          bool interior = true;
          for (int dj = -1; dj <= 1; ++dj)
            for (int di = -1; di <= 1; ++di) interior = interior && g.mask[(j + dj) * g.nx + i + di];
          if (!interior) continue;
          ++inside;
          if (P.piece_index(P.map()(g.center(i, j)), k - 1) == p.image_id) ++mapped;
        }
      CHECK(mapped >= 0.95 * inside);
    }
  }
}

TEST_CASE("thin annuli: closed form against the flux oracle and the grid") {
  for (const BHPuzzle* P : {&p_dis(), &p_ren(), &pesc()}) {
    const double eps = P->epsilon();
    const int d = P->degree();
    // One depth-0 piece carries all of the flux.
    REQUIRE(P->pieces(0).size() == 1);
    CHECK(P->thin(0, 0).modulus.lo == doctest::Approx(eps / (2 * std::numbers::pi)).epsilon(1e-9));
    // A depth-1 piece of degree m carries m/d of it.
    for (const auto& p : P->pieces(1))
      CHECK(P->thin(1, p.id).modulus.lo ==
            doctest::Approx(eps / d / (2 * std::numbers::pi * p.degree / d)).epsilon(1e-9));
    const auto grid = P->thin_modulus_numeric(0, 0, {64, 256, 0.10, 1e-10, 3});
    CHECK(grid.lo <= P->thin(0, 0).modulus.hi * 1.03);
    CHECK(grid.hi >= P->thin(0, 0).modulus.lo * 0.97);
  }
  // Depth-1 grid check where the band is a few cells wide.
  const auto& P = p_ren();
  for (const auto& p : P.pieces(1)) {
    const auto grid = P.thin_modulus_numeric(1, p.id, {64, 256, 0.10, 1e-10, 3});
    CHECK(grid.lo <= P.thin(1, p.id).modulus.hi * 1.03);
    CHECK(grid.hi >= P.thin(1, p.id).modulus.lo * 0.97);
  }
}

TEST_CASE("depth-0 annulus modulus is positive") {
  const auto& P = p_dis();
  for (const auto& c : P.pieces(1)) CHECK(P.annulus_modulus(0, c.id, {48, 192, 0.2, 1e-9, 3}).lo > 0.0);
}

TEST_CASE("McMullen: round-annulus calibration") {
  // Disks of radius 1 and 1/2: mod = log 2 / 2 pi.
  const double mod = std::log(2.0) / (2 * std::numbers::pi);
  McMullenCheck m;
  m.children_area = std::numbers::pi / 4;
  m.bound = std::numbers::pi / (1 + 4 * std::numbers::pi * mod);
  m.slack = m.bound - m.children_area;
  CHECK(m.holds());
  CHECK(1 + 4 * std::numbers::pi * mod == doctest::Approx(1 + 2 * std::log(2.0)));
}

TEST_CASE("disconnected cubic: McMullen checks, eta and area decay") {
  const auto A = area_certificate(p_dis());
  CHECK(A.checks.size() > 100);
  for (const auto& m : A.checks) CHECK_MESSAGE(m.holds(), "depth " << m.depth << " piece " << m.piece_id);
  REQUIRE(A.eta.size() == 8);
  CHECK(A.eta[0] == 1.0);
  for (std::size_t k = 1; k < A.eta.size(); ++k) CHECK(A.eta[k] > A.eta[k - 1]);
  for (std::size_t k = 1; k < A.area_sums.size(); ++k) {
    CHECK(A.area_sums[k] < A.area_sums[k - 1]);
    CHECK(A.area_sums[k] <= A.area_bound[k] * (1 + 1e-9));
  }
  CHECK(A.leaves.empty());
}

TEST_CASE("fully escaping cubic: area sums under the uniform floor bound") {
  const auto A = area_certificate(pesc());
  const double c = A.thin_floor;
  CHECK(c > 0.0);
  double tol = 0.0;
  for (const auto& p : pesc().pieces(0)) tol += p.area_uncertainty;
  for (std::size_t k = 1; k < A.area_sums.size(); ++k) {
    double unc = 0.0;
    for (const auto& p : pesc().pieces(static_cast<int>(k))) unc += p.area_uncertainty;
    CHECK(A.area_sums[k] - unc <= (A.area_sums[0] + tol) / std::pow(1 + 4 * std::numbers::pi * c, k));
  }
}

TEST_CASE("disconnected cubic: tableau, total disconnection, no polynomial-like restriction") {
  const auto& P = p_dis();
  const auto T = critical_tableau(P, 6, 18);
  CHECK(T.truncated(0));
  CHECK(T.scd(1) == 0);  // c_1 = 0 leaves P_1(c0) at once
  for (const auto& v : validate(T, T, 2))
    CHECK_MESSAGE(v.rule.rfind("rule", 0) != 0, v.rule << " at " << v.depth << "," << v.column);
  CHECK(classify(T).kind != TableauClass::Periodic);
  auto samples = bh_samples(P.map(), 8, 11);
  auto pre = precritical_points(P.map(), *P.bounded_critical(), 1);
  samples.insert(samples.end(), pre.begin(), pre.end());
  const auto R = classify_components(P, T, samples, 6);
  CHECK(R.totally_disconnected);
  CHECK_FALSE(R.critical_component_nontrivial);
  for (const auto& s : R.samples) {
    CHECK_MESSAGE(s.kind == ComponentKind::Singleton, s.reason);
    for (std::size_t k = 1; k < s.diameters.size(); ++k) CHECK(s.diameters[k] <= s.diameters[k - 1] * (1 + 1e-9));
  }
  try {
    polylike_extract(P, T, 1);
    FAIL("expected ContainmentFails");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ContainmentFails);
  }
  CHECK_THROWS_AS(bernoulli_coding(P, 3), Error);
}

TEST_CASE("renormalizable cubic: [0, 1/2] stays in the critical pieces") {
  const auto& P = p_ren();
  for (int k = 0; k <= P.max_depth(); ++k) {
    const int crit = P.piece_index(*P.bounded_critical(), k);
    REQUIRE(crit >= 0);
    CHECK(P.piece(k, crit).contains_c0);
    for (int i = 0; i <= 50; ++i) CHECK(P.piece_index(i / 100.0, k) == crit);
  }
}

TEST_CASE("renormalizable cubic: periodic tableau, non-trivial component, degree-2 restriction") {
  const auto& P = p_ren();
  const auto T = critical_tableau(P, 5, 15);
  const auto cls = classify(T);
  CHECK(cls.kind == TableauClass::Periodic);
  CHECK(cls.period == 1);
  std::vector<cplx> samples{0.0, 0.1, 0.3, 0.5};
  const auto R = classify_components(P, T, samples, 5);
  CHECK(R.critical_component_nontrivial);
  CHECK_FALSE(R.totally_disconnected);
  for (const auto& s : R.samples) CHECK(s.kind == ComponentKind::NonTrivial);
  const auto L = polylike_extract(P, T, cls.period);
  CHECK(L.degree == 2);
  CHECK(L.critical_count == 1);
  CHECK(L.chain_degree == 2);
  CHECK(L.orbit_contained);
  CHECK(L.connected);
}

TEST_CASE("complex cubic: parameter, p = 1, preimages of c0 non-trivial") {
  // The printed five-digit parameter lets both critical orbits escape; the
  // refined one puts 0 on a preperiodic orbit c_4 = c_2.
  const auto printed = PolynomialMap::from_coefficients({1.0, cplx(-1.10692, 0.63601), 0.0, 1.0});
  CHECK(green(printed, 0.0) > 0.0);
  const auto f = period_one_cubic();
  CHECK(std::abs(f(f(f(f(0.0)))) - f(f(0.0))) < 1e-12);
  const auto& P = p_one();
  REQUIRE(P.bounded_critical());
  CHECK(std::abs(*P.bounded_critical()) < 1e-12);
  const auto T = critical_tableau(P, 3, 12);
  const auto cls = classify(T);
  CHECK(cls.kind == TableauClass::Periodic);
  CHECK(cls.period == 1);
  const auto L = polylike_extract(P, T, 1);
  CHECK(L.degree == 2);
  CHECK(L.connected);
  auto pre = precritical_points(f, 0.0, 2);
  const auto R = classify_components(P, T, pre, 3);
  CHECK(R.critical_component_nontrivial);
  for (const auto& s : R.samples) CHECK(s.kind == ComponentKind::NonTrivial);
}

TEST_CASE("Bernoulli coding for fully escaping maps") {
  const auto f = escaping_cubic();
  for (const auto& w : f.critical_points()) CHECK(green(f, w.point) > 0.0);
  const auto C = bernoulli_coding(pesc(), 6);
  CHECK(C.alphabet_depth == 1);
  for (int k = 0; k <= 6; ++k) {
    CHECK(C.counts[k] == static_cast<int>(std::pow(3, k)));
    CHECK(C.injective[k]);
    if (k > 0) CHECK(C.max_diameter[k] < C.max_diameter[k - 1]);
  }
  // Quadratic Cantor set.
  const auto q = bh_build(PolynomialMap::quadratic(4.0), 5);
  const auto Q = bernoulli_coding(q, 5);
  CHECK(Q.alphabet_depth == 1);
  for (int k = 1; k <= 5; ++k) {
    CHECK(Q.counts[k] == (1 << k));
    CHECK(Q.injective[k]);
  }
}

TEST_CASE("puzzle and report JSON") {
  auto j = nlohmann::json::parse(p_dis().json());
  CHECK(j["degree"] == 3);
  CHECK(j["depths"].size() == 8);
  CHECK(p_dis().json() == p_dis().json());
  const auto T = critical_tableau(p_ren(), 3, 9);
  auto r = nlohmann::json::parse(classify_components(p_ren(), T, {0.25}, 3).json());
  CHECK(r["periodic"] == true);
  CHECK(r["samples"][0]["kind"] == "non_trivial");
}
