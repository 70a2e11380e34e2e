#pragma once

#include <optional>
#include <string>
#include <vector>

#include "jigsaw/puzzle.hpp"
#include "jigsaw/tableau.hpp"

namespace jigsaw {

enum class LedgerRule { Seed, Copy, Half, SemiHalf, IsomorphicTransport };
const char* to_string(LedgerRule r);

// One derived bound: mod A_depth(z_column) >= bound, obtained from the source
// annulus by `halvings` factors of two along a diagonal of the tableau.
struct LedgerStep {
  int depth = 0;
  int column = 0;
  LedgerRule rule = LedgerRule::Copy;
  int source_depth = 0;
  int source_column = 0;
  double source_bound = 0.0;
  int halvings = 0;
  double bound = 0.0;
};

struct ModulusLedger {
  std::vector<ModulusInterval> bounds;  // per depth, lower bounds for mod A_d(z0)
  std::vector<double> partial_sums;     // cumulative over depth
  std::vector<LedgerStep> steps;        // one per depth with a positive bound
  // Descendant tree of the seed depth (critical column only).
  std::vector<std::vector<int>> generations;
  std::vector<double> generation_sums;
  bool certified = false;  // partial sums passed the threshold with a rising trend
  std::string note;
};

struct Seed {
  int visit_column = -1;  // first n >= 1 with c_n in some P_1(-c_i)
  int minus_index = -1;   // that i
  ModulusInterval depth0;  // numeric mod A_0(c_n)
  int depth = -1;          // seed depth m = n for A_m(0)
  int losses = 0;          // critical or semi-critical steps on the way back
  double bound = 0.0;      // depth0.lo / 2^losses
};

struct LcertConfig {
  double divergence_threshold = 2.0;
  int trend_window = 3;
  double shrink_fraction = 0.5;  // final/initial diameter needed for a shrink confirmation
  double alpha_gate = 1e-7;
  int lemma3_orbit = 200;
  ModulusOptions modulus;
};

// Numeric moduli of the q-1 nondegenerate depth-0 annuli P_0(0) \ P_1(-c_i).
std::vector<ModulusInterval> depth0_moduli(const PuzzleTower& tower, const ModulusOptions& opt = {});

Seed seed_positive_modulus(const PuzzleTower& tower, const Tableau& critical, int depth_budget,
                           const LcertConfig& cfg = {});
// Rejects degenerate seed requests: returns [0,0] when A_0(z) is degenerate.
ModulusInterval seed_request(const PuzzleTower& tower, cplx z, const ModulusOptions& opt = {});

std::optional<int> lemma3_test(const PuzzleTower& tower, const CriticalOrbit& orbit);
std::optional<int> lemma2_test(const Tableau& critical);

// Lower bounds for mod A_d(z0), d <= depth_budget, propagated along tableau
// diagonals from the numeric depth-0 moduli. `orbit_tableau` is the tableau of
// z0 (pass the critical tableau again for z0 = 0). Tableaux may be deeper than
// the tower; the tower is only used for the depth-0 annuli and the landing
// piece of each diagonal.
ModulusLedger certify_divergence(const PuzzleTower& tower, const Tableau& critical,
                                 const Tableau& orbit_tableau, cplx z0, int depth_budget,
                                 const LcertConfig& cfg = {});
// Throws InconclusiveAtBudget unless the ledger is certified.
void require_divergence(const ModulusLedger& ledger);

struct ShrinkData {
  cplx z;
  // One sequence for a generic point, q sequences at alpha and its preimages.
  std::vector<std::vector<double>> diameters;
  bool monotone = true;
  bool shrinks = false;
};

std::vector<ShrinkData> shrink_check(const PuzzleTower& tower, const std::vector<cplx>& samples, int depth,
                                     double shrink_fraction = 0.5);

enum class VerdictKind { LcCertified, Renormalizable, Inconclusive };
const char* to_string(VerdictKind k);

struct Verdict {
  VerdictKind kind = VerdictKind::Inconclusive;
  std::optional<int> period;        // tableau period (lemma2_test)
  std::optional<int> lemma3_period;  // alpha-piece containment period
  int depth_used = 0;
  ModulusLedger ledger;
  Classification classification;
  std::vector<ShrinkData> shrink;
  std::string note;
  std::string json() const;
};

// Full pipeline for the critical point plus sampled points.
Verdict analyze(const PuzzleTower& tower, const std::vector<cplx>& samples, int depth, int width,
                const LcertConfig& cfg = {});

}  // namespace jigsaw
