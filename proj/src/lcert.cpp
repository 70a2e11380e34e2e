#include "jigsaw/lcert.hpp"

#include <algorithm>
#include <cmath>

#include "jigsaw/errors.hpp"
#include "json.hpp"

namespace jigsaw {

const char* to_string(LedgerRule r) {
  switch (r) {
    case LedgerRule::Seed: return "seed";
    case LedgerRule::Copy: return "copy";
    case LedgerRule::Half: return "half";
    case LedgerRule::SemiHalf: return "semi_half";
    case LedgerRule::IsomorphicTransport: return "isomorphic_transport";
  }
  return "?";
}

const char* to_string(VerdictKind k) {
  switch (k) {
    case VerdictKind::LcCertified: return "lc_certified";
    case VerdictKind::Renormalizable: return "renormalizable";
    case VerdictKind::Inconclusive: return "inconclusive";
  }
  return "?";
}

namespace {

// Depth-1 ids of the pieces P_1(-c_i), index i-1.
std::vector<int> minus_ids(const PuzzleTower& tower) {
  std::vector<int> ids;
  const auto& c = tower.critical_orbit_points();
  for (int i = 1; i < tower.q(); ++i) ids.push_back(tower.piece(1, tower.piece_index(c[i], 1)).negation_id);
  return ids;
}

int minus_index_of(const PuzzleTower& tower, const std::vector<int>& ids, cplx z) {
  try {
    const int id = tower.piece_index(z, 1);
    for (std::size_t i = 0; i < ids.size(); ++i)
      if (ids[i] == id) return static_cast<int>(i) + 1;
  } catch (const Error&) {
  }
  return -1;
}

std::vector<cplx> forward_orbit(const PolynomialMap& f, cplx z, int n) {
  std::vector<cplx> out{z};
  for (int k = 0; k < n; ++k) out.push_back(f(out.back()));
  return out;
}

}  // namespace

std::vector<ModulusInterval> depth0_moduli(const PuzzleTower& tower, const ModulusOptions& opt) {
  std::vector<ModulusInterval> out;
  const auto& c = tower.critical_orbit_points();
  for (int i = 1; i < tower.q(); ++i) out.push_back(annulus(tower, -c[i], 0, true, opt).modulus);
  return out;
}

ModulusInterval seed_request(const PuzzleTower& tower, cplx z, const ModulusOptions& opt) {
  auto a = annulus(tower, z, 0, false);
  if (a.degenerate) return ModulusInterval::degenerate();
  return annulus(tower, z, 0, true, opt).modulus;
}

Seed seed_positive_modulus(const PuzzleTower& tower, const Tableau& critical, int depth_budget,
                           const LcertConfig& cfg) {
  const int budget = std::min({depth_budget, critical.width() - 1, critical.depth()});
  const auto ids = minus_ids(tower);
  const auto orbit = forward_orbit(tower.map(), 0.0, budget);
  for (int n = 1; n <= budget; ++n) {
    if (critical.cell(0, n) != Criticality::SemiCritical) continue;
    Seed s;
    s.visit_column = n;
    s.minus_index = minus_index_of(tower, ids, orbit[n]);
    if (s.minus_index < 0) continue;
    s.depth0 = annulus(tower, -tower.critical_orbit_points()[s.minus_index], 0, true, cfg.modulus).modulus;
    s.depth = n;
    // A_n(0) -> A_0(c_n) along the diagonal; each non-off cell halves.
    for (int k = 0; k < n; ++k) {
      auto cell = critical.cell(n - k, k);
      if (!cell) throw Error(ErrorKind::NoVisitFound, "diagonal leaves the tableau", n);
      if (*cell != Criticality::OffCritical) ++s.losses;
    }
    s.bound = std::ldexp(s.depth0.lo, -s.losses);
    return s;
  }
  throw Error(ErrorKind::NoVisitFound, "critical orbit never visits a P_1(-c_i) within the budget", budget);
}

std::optional<int> lemma3_test(const PuzzleTower& tower, const CriticalOrbit& orbit) {
  std::vector<int> alpha_pieces;
  const auto& c = tower.critical_orbit_points();
  for (int i = 0; i < tower.q(); ++i) alpha_pieces.push_back(tower.piece_index(c[i], 1));
  for (cplx z : orbit.points) {
    int id;
    try {
      id = tower.piece_index(z, 1);
    } catch (const Error&) {
      return std::nullopt;
    }
    if (std::find(alpha_pieces.begin(), alpha_pieces.end(), id) == alpha_pieces.end()) return std::nullopt;
  }
  return tower.q();
}

std::optional<int> lemma2_test(const Tableau& critical) {
  auto cl = classify(critical);
  if (cl.kind == TableauClass::Periodic) return cl.period;
  return std::nullopt;
}

namespace {

struct Walk {
  bool resolved = false;
  bool hit_critical = false;
  int depth = 0, column = 0;
  int halvings = 0, semis = 0;
  double source = 0.0;
};

// Follows the diagonal from (d, k) until a critical cell (k >= first_stop) or
// depth 0. `crit` holds bounds for the critical column at smaller depths.
Walk walk(const Tableau& tab, int d, int k, int halvings, int first_stop, const std::vector<double>& crit,
          const std::vector<cplx>& orbit, const PuzzleTower& tower, const std::vector<int>& ids,
          const std::vector<ModulusInterval>& mu, double mu_floor) {
  Walk w;
  w.halvings = halvings;
  for (;; --d, ++k) {
    auto cell = tab.cell(d, k);
    if (!cell) return w;
    if (*cell == Criticality::Critical && k >= first_stop) {
      if (d >= static_cast<int>(crit.size())) return w;
      w.resolved = w.hit_critical = true;
      w.depth = d;
      w.column = k;
      w.source = crit[d];
      return w;
    }
    if (d == 0) {
      w.resolved = true;
      w.depth = 0;
      w.column = k;
      if (*cell == Criticality::SemiCritical) {
        const int i = k < static_cast<int>(orbit.size()) ? minus_index_of(tower, ids, orbit[k]) : -1;
        w.source = i > 0 ? mu[i - 1].lo : mu_floor;
      }
      return w;
    }
    if (*cell != Criticality::OffCritical) {
      ++w.halvings;
      if (*cell == Criticality::SemiCritical) ++w.semis;
    }
  }
}

LedgerRule rule_of(const Walk& w) {
  if (w.semis > 0) return LedgerRule::SemiHalf;
  if (w.halvings > 0) return LedgerRule::Half;
  return w.hit_critical ? LedgerRule::IsomorphicTransport : LedgerRule::Copy;
}

}  // namespace

ModulusLedger certify_divergence(const PuzzleTower& tower, const Tableau& critical, const Tableau& orbit_tableau,
                                 cplx z0, int depth_budget, const LcertConfig& cfg) {
  const auto orbit0 = critical_orbit(tower.map(), 400).points;
  for (cplx z : orbit0)
    if (std::abs(z - tower.alpha()) < cfg.alpha_gate)
      throw Error(ErrorKind::OrbitHitsAlpha, "critical orbit passes within the alpha gate");

  const int budget = std::min({depth_budget, critical.depth(), orbit_tableau.depth()});
  const auto ids = minus_ids(tower);
  const auto mu = depth0_moduli(tower, cfg.modulus);
  double mu_floor = mu.empty() ? 0.0 : mu[0].lo;
  for (const auto& m : mu) mu_floor = std::min(mu_floor, m.lo);

  const auto corbit = forward_orbit(tower.map(), 0.0, critical.width() + budget + 1);
  std::vector<double> crit{0.0};
  std::vector<Walk> crit_walk{Walk{}};
  for (int D = 1; D <= budget; ++D) {
    Walk w = walk(critical, D - 1, 1, 1, 1, crit, corbit, tower, ids, mu, mu_floor);
    crit_walk.push_back(w);
    crit.push_back(w.resolved ? std::ldexp(w.source, -w.halvings) : 0.0);
  }

  const bool at_critical = std::abs(z0) == 0.0;
  ModulusLedger L;
  std::vector<Walk> walks = crit_walk;
  std::vector<double> bound = crit;
  if (!at_critical) {
    const auto zorbit = forward_orbit(tower.map(), z0, orbit_tableau.width() + budget + 1);
    walks.clear();
    bound.clear();
    for (int D = 0; D <= budget; ++D) {
      Walk w = walk(orbit_tableau, D, 0, 0, 0, crit, zorbit, tower, ids, mu, mu_floor);
      walks.push_back(w);
      bound.push_back(w.resolved ? std::ldexp(w.source, -w.halvings) : 0.0);
    }
  }

  double sum = 0.0;
  for (int D = 0; D <= budget; ++D) {
    L.bounds.push_back(bound[D] > 0 ? ModulusInterval::lower_bound(bound[D]) : ModulusInterval::degenerate(ModulusMethod::Propagated));
    sum += bound[D];
    L.partial_sums.push_back(sum);
    if (bound[D] <= 0) continue;
    const Walk& w = walks[D];
    LedgerStep s;
    s.depth = D;
    s.column = 0;
    s.source_depth = w.depth;
    s.source_column = w.hit_critical ? 0 : w.column;
    s.source_bound = w.source;
    s.halvings = w.halvings;
    s.bound = bound[D];
    s.rule = (w.depth == 0 && !w.hit_critical && w.halvings == 0) ? LedgerRule::Seed : rule_of(w);
    L.steps.push_back(s);
  }

  // Descendant generations of the first positive critical depth.
  int root = -1;
  for (int D = 0; D <= budget && root < 0; ++D)
    if (crit[D] > 0) root = D;
  if (root >= 0) {
    const auto g = genealogy(critical);
    std::vector<int> cur{root};
    while (!cur.empty()) {
      L.generations.push_back(cur);
      double gs = 0.0;
      for (int d : cur) gs += crit[d];
      L.generation_sums.push_back(gs);
      std::vector<int> next;
      for (int d : cur) {
        auto it = g.children.find(d);
        if (it == g.children.end()) continue;
        for (int ch : it->second)
          if (ch <= budget) next.push_back(ch);
      }
      std::sort(next.begin(), next.end());
      next.erase(std::unique(next.begin(), next.end()), next.end());
      cur = std::move(next);
    }
  }

  // Rising trend: enough positive terms in the upper half of the budget.
  int late = 0;
  for (const auto& s : L.steps) late += s.depth > budget / 2;
  const bool trend = late >= cfg.trend_window;
  const bool renormal = lemma2_test(critical).has_value();
  L.certified = !renormal && sum >= cfg.divergence_threshold && trend;
  if (renormal) L.note = "tableau is periodic; divergence is not claimed";
  else if (!L.certified) L.note = "partial sum " + std::to_string(sum) + " below threshold at depth " + std::to_string(budget);
  return L;
}

void require_divergence(const ModulusLedger& ledger) {
  if (!ledger.certified)
    throw Error(ErrorKind::InconclusiveAtBudget, ledger.note, static_cast<int>(ledger.partial_sums.size()) - 1);
}

std::vector<ShrinkData> shrink_check(const PuzzleTower& tower, const std::vector<cplx>& samples, int depth,
                                     double shrink_fraction) {
  depth = std::min(depth, tower.max_depth());
  std::vector<ShrinkData> out;
  for (cplx z : samples) {
    ShrinkData s;
    s.z = z;
    auto star = star_pieces(tower, z, depth);
    std::vector<int> finals;
    if (star.size() > 1)
      for (const auto& p : star) finals.push_back(p.id);
    else
      finals.push_back(tower.piece_index(z, depth));
    for (int id : finals) {
      std::vector<double> seq(depth + 1);
      for (int d = depth; d >= 0; --d) {
        seq[d] = diameter(tower.boundary(d, id));
        id = tower.piece(d, id).parent_id;
      }
      for (int d = 1; d <= depth; ++d) s.monotone = s.monotone && seq[d] <= seq[d - 1] + 1e-9;
      s.diameters.push_back(std::move(seq));
    }
    s.shrinks = true;
    for (const auto& seq : s.diameters) s.shrinks = s.shrinks && seq.back() < shrink_fraction * seq.front();
    s.shrinks = s.shrinks && s.monotone;
    out.push_back(std::move(s));
  }
  return out;
}

Verdict analyze(const PuzzleTower& tower, const std::vector<cplx>& samples, int depth, int width,
                const LcertConfig& cfg) {
  Verdict v;
  depth = std::min(depth, tower.max_depth() - 1);
  v.depth_used = depth;
  const auto orbit = critical_orbit(tower.map(), cfg.lemma3_orbit);
  for (cplx z : orbit.points)
    if (std::abs(z - tower.alpha()) < cfg.alpha_gate)
      throw Error(ErrorKind::OrbitHitsAlpha, "critical orbit passes within the alpha gate; use the star pieces");

  const Tableau crit = tableau_from_orbit(tower, 0.0, width, depth);
  v.classification = classify(crit);
  v.period = lemma2_test(crit);
  v.lemma3_period = lemma3_test(tower, orbit);
  if (v.period || v.lemma3_period) {
    v.kind = VerdictKind::Renormalizable;
    v.note = "renormalization detected; local connectivity is not claimed";
    return v;
  }
  try {
    seed_positive_modulus(tower, crit, depth, cfg);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NoVisitFound) throw;
    v.note = e.what();
    return v;
  }
  v.ledger = certify_divergence(tower, crit, crit, 0.0, depth, cfg);
  v.shrink = shrink_check(tower, samples, depth, cfg.shrink_fraction);
  bool shrinks = true;
  for (const auto& s : v.shrink) shrinks = shrinks && s.shrinks;
  if (v.ledger.certified && shrinks) v.kind = VerdictKind::LcCertified;
  else v.note = v.ledger.certified ? "pieces did not shrink enough at this depth" : v.ledger.note;
  return v;
}

std::string Verdict::json() const {
  nlohmann::json j;
  j["kind"] = to_string(kind);
  if (period) j["period"] = *period;
  if (lemma3_period) j["lemma3_period"] = *lemma3_period;
  j["depth_used"] = depth_used;
  j["classification"] = {{"kind", to_string(classification.kind)},
                         {"persistent", classification.persistent},
                         {"period", classification.period}};
  j["partial_sums"] = ledger.partial_sums;
  j["generation_sums"] = ledger.generation_sums;
  j["certified_divergence"] = ledger.certified;
  auto steps = nlohmann::json::array();
  for (const auto& s : ledger.steps)
    steps.push_back({{"d", s.depth},
                     {"rule", to_string(s.rule)},
                     {"bound", s.bound},
                     {"source_depth", s.source_depth},
                     {"source_column", s.source_column},
                     {"halvings", s.halvings}});
  j["steps"] = steps;
  auto sh = nlohmann::json::array();
  for (const auto& s : shrink) sh.push_back({{"z", {s.z.real(), s.z.imag()}}, {"diameters", s.diameters}, {"monotone", s.monotone}});
  j["shrink"] = sh;
  j["note"] = note;
  return j.dump();
}

}  // namespace jigsaw
