#include <cmath>

#include "doctest.h"
#include "jigsaw/errors.hpp"
#include "jigsaw/lcert.hpp"
#include "json.hpp"

using namespace jigsaw;

namespace {

const PuzzleTower& tower_i() {
  static PuzzleTower t = PuzzleTower::build(PolynomialMap::quadratic({0.0, 1.0}), 9);
  return t;
}

void check_step_arithmetic(const ModulusLedger& L) {
  for (const auto& s : L.steps) {
    CHECK(s.bound == std::ldexp(s.source_bound, -s.halvings));
    switch (s.rule) {
      case LedgerRule::Seed:
      case LedgerRule::Copy:
      case LedgerRule::IsomorphicTransport: CHECK(s.halvings == 0); break;
      case LedgerRule::Half:
      case LedgerRule::SemiHalf: CHECK(s.halvings >= 1); break;
    }
  }
  for (std::size_t k = 1; k < L.partial_sums.size(); ++k) CHECK(L.partial_sums[k] >= L.partial_sums[k - 1]);
}

}  // namespace

TEST_CASE("seed: c = i visits P_1(-c_1) at c_3 = -i") {
  const auto& t = tower_i();
  auto crit = tableau_from_orbit(t, 0.0, 20, 8);
  auto s = seed_positive_modulus(t, crit, 8);
  CHECK(s.visit_column == 3);
  CHECK(s.minus_index == 1);
  CHECK(s.depth0.lo > 0.0);
  CHECK(s.losses == 1);
  CHECK(s.bound == s.depth0.lo / 2);
}

TEST_CASE("degenerate seed request is rejected") {
  auto m = seed_request(tower_i(), 0.0);
  CHECK(m.is_degenerate());
  CHECK(seed_request(tower_i(), cplx(0, -1)).lo > 0.0);
}

TEST_CASE("lemma tests") {
  const auto& t = tower_i();
  CHECK_FALSE(lemma3_test(t, critical_orbit(t.map(), 200)).has_value());
  CHECK_FALSE(lemma2_test(tableau_from_orbit(t, 0.0, 20, 8)).has_value());
  CHECK_FALSE(lemma2_test(fibonacci_tableau(18, 56)).has_value());

  // Basilica: orbit {0, -1} sits in the two alpha pieces (|0| < |alpha|, -1 < alpha).
  auto b = PuzzleTower::build(PolynomialMap::quadratic(-1.0), 6);
  CHECK(lemma3_test(b, critical_orbit(b.map(), 200)) == 2);
  CHECK(lemma2_test(tableau_from_orbit(b, 0.0, 12, 5)) == 2);
}

TEST_CASE("c = -1.75: period 3 and divergence not claimed") {
  auto t = PuzzleTower::build(PolynomialMap::quadratic(-1.75), 13);
  auto crit = tableau_from_orbit(t, 0.0, 30, 12);
  CHECK(lemma2_test(crit) == 3);
  // Real-line oracle: P_1(-c_1) is the interval beyond -alpha; c_2 = 1.3125 lies there.
  const double alpha = (1 - std::sqrt(1 + 4 * 1.75)) / 2;
  const double c2 = 1.75 * 1.75 - 1.75;
  REQUIRE(c2 > -alpha);
  CHECK_FALSE(lemma3_test(t, critical_orbit(t.map(), 200)).has_value());
  auto s = seed_positive_modulus(t, crit, 12);
  CHECK(s.visit_column == 2);
  auto L = certify_divergence(t, crit, crit, 0.0, 12);
  CHECK_FALSE(L.certified);
  CHECK_THROWS_AS(require_divergence(L), Error);
  auto v = analyze(t, {}, 12, 30);
  CHECK(v.kind == VerdictKind::Renormalizable);
  CHECK(v.period == 3);
}

TEST_CASE("Fibonacci ledger from the combinatorial tableau") {
  auto t = PuzzleTower::build(PolynomialMap::quadratic(-1.8705286321646448), 6);
  auto fib = fibonacci_tableau(18, 56);
  auto L = certify_divergence(t, fib, fib, 0.0, 18);
  check_step_arithmetic(L);
  // A_d(0) is nondegenerate exactly when c_d is semi-critical at depth 0.
  int expected = 0;
  for (int d = 0; d <= 18; ++d) expected += fib.scd(d) == 0;
  CHECK(static_cast<int>(L.steps.size()) == expected);
  for (const auto& s : L.steps) {
    CHECK(s.bound > 0);
    CHECK(L.partial_sums[s.depth] > (s.depth ? L.partial_sums[s.depth - 1] : 0.0));
  }
  REQUIRE(L.generations.size() >= 3);
  CHECK(L.generations[0] == std::vector<int>{2});
  // Each descendant in generation k carries exactly the root bound / 2^k.
  const double root = L.generation_sums[0];
  for (std::size_t k = 0; k < L.generations.size(); ++k)
    CHECK(L.generation_sums[k] == std::ldexp(root, -static_cast<int>(k)) * L.generations[k].size());
}

TEST_CASE("ledger bounds against numeric moduli, c = i") {
  const auto& t = tower_i();
  auto crit = tableau_from_orbit(t, 0.0, 20, 8);
  auto L = certify_divergence(t, crit, crit, 0.0, 7);
  check_step_arithmetic(L);
  REQUIRE(L.steps.size() >= 3);
  for (const auto& s : L.steps) {
    auto a = annulus(t, 0.0, s.depth, true);
    CHECK(s.bound <= a.modulus.hi + 1e-3);
    if (s.rule == LedgerRule::Half) {
      // Child transport: exactly half of the source annulus.
      auto src = s.source_depth == 0 ? annulus(t, t.critical_orbit_points()[s.source_column], 0, true)
                                     : annulus(t, 0.0, s.source_depth, true);
      CHECK(a.modulus.hi + 1e-3 >= src.modulus.lo / 2);
      CHECK(a.modulus.lo - 1e-3 <= src.modulus.hi / 2);
    }
  }
  CHECK_FALSE(L.certified);
}

TEST_CASE("off-critical transport and semi-critical strictness, c = i") {
  const auto& t = tower_i();
  // -i is off-critical at depth 1 (its P_1 is P_1(-c_1)), so A_1(-i) ~ A_0(f(-i)).
  const cplx z(0, -1);
  auto a1 = annulus(t, z, 1, true);
  auto a0 = annulus(t, t.map()(z), 0, true);
  CHECK(a1.criticality == Criticality::OffCritical);
  if (!a1.degenerate && !a0.degenerate) {
    CHECK(a1.modulus.lo <= a0.modulus.hi + 1e-3);
    CHECK(a0.modulus.lo <= a1.modulus.hi + 1e-3);
  }
}

TEST_CASE("semi-critical strictness on the Fibonacci map") {
  // A semi-critical annulus has more than half the modulus of its image.
  auto t = PuzzleTower::build(PolynomialMap::quadratic(-1.8705286321646448), 7);
  const auto orbit = critical_orbit(t.map(), 24).points;
  int semis = 0;
  for (int m = 1; m < 14; ++m)
    for (int d = 1; d <= 5; ++d) {
      auto a = annulus(t, orbit[m], d, false);
      if (a.criticality != Criticality::SemiCritical || a.degenerate) continue;
      auto up = annulus(t, orbit[m], d, true);
      auto down = annulus(t, orbit[m + 1], d - 1, true);
      CHECK(up.modulus.hi > down.modulus.lo / 2);
      ++semis;
    }
  CHECK(semis >= 1);
}

TEST_CASE("shrink checks") {
  const auto& t = tower_i();
  auto sh = shrink_check(t, {t.alpha()}, 8);
  REQUIRE(sh.size() == 1);
  CHECK(sh[0].diameters.size() == 3);
  CHECK(sh[0].monotone);
  for (const auto& seq : sh[0].diameters) CHECK(seq.back() < seq.front());

  auto m = PuzzleTower::build(PolynomialMap::quadratic(-1.6), 10);
  auto s1 = shrink_check(m, {1.0}, 10);
  CHECK(s1[0].monotone);
  CHECK(s1[0].diameters[0].front() >= 4 * s1[0].diameters[0].back());
}

TEST_CASE("alpha gate refuses orbits near alpha") {
  LcertConfig cfg;
  cfg.alpha_gate = 10.0;
  const auto& t = tower_i();
  auto crit = tableau_from_orbit(t, 0.0, 20, 8);
  try {
    certify_divergence(t, crit, crit, 0.0, 5, cfg);
    FAIL("expected OrbitHitsAlpha");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::OrbitHitsAlpha);
  }
}

TEST_CASE("verdict JSON") {
  const auto& t = tower_i();
  auto v = analyze(t, {t.alpha()}, 8, 20);
  CHECK(v.kind == VerdictKind::Inconclusive);
  auto j = nlohmann::json::parse(v.json());
  CHECK(j["kind"] == "inconclusive");
  CHECK(j["depth_used"] == 8);
  CHECK(j["partial_sums"].size() == 9);
  CHECK(j["steps"].size() >= 3);
  CHECK(j["shrink"][0]["diameters"].size() == 3);
}
