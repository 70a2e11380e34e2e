// Prints library-level JSON documents, one per line as "<schema> <json>", for
// schema validation.
#include <iostream>

#include "jigsaw/bhpuzzle.hpp"
#include "jigsaw/lcert.hpp"
#include "jigsaw/puzzle.hpp"

using namespace jigsaw;

int main() {
  const auto tower = PuzzleTower::build(PolynomialMap::quadratic({0.0, 1.0}), 4);
  for (int d = 0; d <= 2; ++d)
    for (const auto& p : tower.pieces(d)) std::cout << "puzzle_piece " << tower.piece_json(d, p.id) << "\n";
  const Verdict v = analyze(tower, {cplx{0.3, 0.2}}, 3, 10);
  std::cout << "verdict " << v.json() << "\n";

  const auto f = PolynomialMap::from_coefficients({10.0, -13.0, 4.0, 0.0});
  const auto P = bh_build(f, 4);
  std::cout << "bh_puzzle " << P.json() << "\n";
  const cplx c0 = *P.bounded_critical();
  const Tableau T = bh_tableau(P, bh_orbit(f, c0, 8), 3);
  std::cout << "component_report " << classify_components(P, T, bh_samples(f, 3, 1), 3).json() << "\n";
}
