#include "jigsaw/puzzle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "jigsaw/errors.hpp"
#include "json.hpp"
#include "ray_stepper.hpp"

namespace jigsaw {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

// Pullback of w under z^2 + c on the branch nearest `near`; ambiguous picks
// (both roots comparably close) are reported through `ratio`.
cplx pull(cplx w, cplx c, cplx near, double* ratio = nullptr) {
  const cplx r = std::sqrt(w - c);
  const double dp = std::abs(r - near), dm = std::abs(r + near);
  if (ratio) *ratio = std::min(dp, dm) / std::max(std::max(dp, dm), 1e-300);
  return dp <= dm ? r : -r;
}
}  // namespace

struct PuzzleTower::RayData {
  int level = 0;
  int j0 = 0;  // index of the first sample; index j has potential G0 * 2^(-j/s)
  std::vector<cplx> pts;
  cplx landing;
};

struct PuzzleTower::DepthData {
  std::vector<std::uint64_t> cuts;  // sorted cut numerators
  std::vector<int> arc_gap;         // piece id per arc (arc i starts at cuts[i])
  std::vector<PuzzlePiece> pieces;
  std::vector<std::vector<int>> preimages;  // by image id at depth-1
  std::vector<int> orbit_row;               // P_d(c_j)
};

std::string PuzzlePiece::label() const {
  std::string out;
  for (const auto& l : labels) out += (out.empty() ? "" : ",") + l;
  return out;
}

double PuzzlePiece::min_angle() const { return arcs.empty() ? 0.0 : static_cast<double>(arcs.front().first); }

PuzzleTower PuzzleTower::build(const PolynomialMap& map, int max_depth, const PuzzleConfig& cfg) {
  PuzzleConfig c = cfg;
  c.max_depth = std::max(c.max_depth, max_depth);
  AlphaCycle cycle = alpha_ray_cycle(map, c.max_alpha_period, c.ray);
  PuzzleTower t(map, cycle, c);
  while (t.max_depth() < max_depth) t.add_depth();
  return t;
}

PuzzleTower::PuzzleTower(const PolynomialMap& map, const AlphaCycle& cycle, const PuzzleConfig& cfg)
    : map_(map), cfg_(cfg), q_(cycle.q), alpha_(cycle.alpha), alpha_angles_(cycle.angles) {
  if (!map.is_unicritical_quadratic()) throw Error(ErrorKind::BadInput, "the Yoccoz puzzle needs z^2 + c");
  if (q_ < 2) throw Error(ErrorKind::BadInput, "alpha cycle needs q >= 2");
  if (q_ + cfg_.max_depth + 3 > 62) throw Error(ErrorKind::BadInput, "angle denominator overflow");
  const std::uint64_t base = (std::uint64_t{1} << q_) - 1;
  N_ = base << (cfg_.max_depth + 2);
  std::sort(alpha_angles_.begin(), alpha_angles_.end());
  for (const Angle& a : alpha_angles_) {
    if (base % a.den() != 0) throw Error(ErrorKind::BadInput, "alpha angle is not of period q");
    theta_.push_back(a.num() * (N_ / a.den()));
  }
  const int orbit_len = std::max(64, 4 * (cfg_.max_depth + 2) + q_);
  CriticalOrbit orb = critical_orbit(map_, orbit_len, 0.0);
  if (orb.escaped) throw Error(ErrorKind::BadInput, "critical orbit escapes; the puzzle needs a connected Julia set");
  orbit_ = orb.points;
  for (std::size_t j = 0; j < orbit_.size(); ++j)
    if (std::abs(orbit_[j] - alpha_) < 1e-9)
      throw Error(ErrorKind::OrbitHitsAlpha, "critical orbit meets alpha", static_cast<int>(j));

  Group g;
  g.members = theta_;
  g.level = 0;
  groups_.push_back(g);
  for (auto t : theta_) group_of_[t] = 0;
  add_depth();
}

PuzzleTower PuzzleTower::refine() const {
  PuzzleTower t = *this;
  t.add_depth();
  return t;
}

double PuzzleTower::level(int d) const { return cfg_.G0 * std::ldexp(1.0, -d); }

const std::vector<PuzzlePiece>& PuzzleTower::pieces(int d) const {
  if (d < 0 || d > max_depth()) throw Error(ErrorKind::BadInput, "depth outside the tower", d);
  return depths_[d]->pieces;
}

const std::vector<int>& PuzzleTower::preimages(int d, int image_id) const {
  if (d < 1 || d > max_depth()) throw Error(ErrorKind::BadInput, "depth outside the tower", d);
  return depths_[d]->preimages.at(image_id);
}

void PuzzleTower::add_depth() {
  const int d = static_cast<int>(depths_.size());
  if (d > cfg_.max_depth) throw Error(ErrorKind::BadInput, "refinement beyond the configured depth cap", d);
  auto data = std::make_shared<DepthData>();

  if (d > 0) {
    // Pull back the groups that appeared at depth d-1, splitting each set of
    // halved angles by the diameter through half an angle of P_{d-1}(c_1).
    const DepthData& prev = *depths_[d - 1];
    const PuzzlePiece& pc1 = prev.pieces.at(prev.orbit_row.at(1));
    const auto [a, b] = pc1.arcs.front();
    const std::uint64_t m = b > a ? (a + b) / 2 : ((a + b + N_) / 2) % N_;
    const std::uint64_t twoN = 2 * N_;
    const std::size_t count = groups_.size();
    for (std::size_t gi = 0; gi < count; ++gi) {
      if (groups_[gi].level != d - 1) continue;
      std::vector<std::uint64_t> side[2];
      for (std::uint64_t t : groups_[gi].members) {
        if (t % 2 != 0) throw Error(ErrorKind::BadInput, "angle resolution exhausted", d);
        for (std::uint64_t h : {t / 2, t / 2 + N_ / 2}) {
          const std::uint64_t rel = (2 * h + twoN - m) % twoN;
          side[rel < N_ ? 0 : 1].push_back(h);
        }
      }
      for (auto& s : side) {
        if (static_cast<int>(s.size()) != q_)
          throw Error(ErrorKind::PullbackBranchClash, "preimage group does not split into q rays", d);
        std::sort(s.begin(), s.end());
        auto it = group_of_.find(s.front());
        if (it != group_of_.end()) {
          if (groups_[it->second].members != s)
            throw Error(ErrorKind::PullbackBranchClash, "inconsistent preimage group", d);
          continue;
        }
        Group g;
        g.members = s;
        g.level = d;
        const int id = static_cast<int>(groups_.size());
        groups_.push_back(g);
        for (auto t : s) group_of_[t] = id;
      }
    }
  }

  for (const auto& g : groups_)
    if (g.level <= d) data->cuts.insert(data->cuts.end(), g.members.begin(), g.members.end());
  std::sort(data->cuts.begin(), data->cuts.end());
  const auto& cuts = data->cuts;
  const int M = static_cast<int>(cuts.size());
  auto index_of = [&](std::uint64_t t) {
    auto it = std::lower_bound(cuts.begin(), cuts.end(), t);
    if (it == cuts.end() || *it != t) throw Error(ErrorKind::BadInput, "angle is not a cut", d);
    return static_cast<int>(it - cuts.begin());
  };

  // Walk the gaps: after the arc ending at b, continue from the member of b's
  // group that precedes b counterclockwise.
  std::vector<int> next(M);
  for (int i = 0; i < M; ++i) {
    const std::uint64_t b = cuts[(i + 1) % M];
    const auto& mem = groups_[group_of_.at(b)].members;
    const int pos = static_cast<int>(std::find(mem.begin(), mem.end(), b) - mem.begin());
    next[i] = index_of(mem[(pos + q_ - 1) % q_]);
  }
  std::vector<int> seen(M, -1);
  std::vector<std::vector<int>> cycles;
  for (int i = 0; i < M; ++i) {
    if (seen[i] >= 0) continue;
    std::vector<int> cyc;
    for (int k = i; seen[k] < 0; k = next[k]) {
      seen[k] = static_cast<int>(cycles.size());
      cyc.push_back(k);
    }
    cycles.push_back(cyc);  // starts at its smallest arc because i ascends
  }
  const int expected = (q_ - 1) * (1 << d) + 1;
  if (static_cast<int>(cycles.size()) != expected)
    throw Error(ErrorKind::PullbackBranchClash, "unexpected piece count", d);

  data->arc_gap.assign(M, -1);
  for (std::size_t id = 0; id < cycles.size(); ++id) {
    PuzzlePiece p;
    p.depth = d;
    p.id = static_cast<int>(id);
    for (int k : cycles[id]) {
      data->arc_gap[k] = p.id;
      p.arcs.push_back({cuts[k], cuts[(k + 1) % M]});
      p.corners.push_back(group_of_.at(cuts[(k + 1) % M]));
    }
    data->pieces.push_back(p);
  }
  for (auto& p : data->pieces) {
    const std::uint64_t s = p.arcs.front().first;
    if (d > 0) {
      p.negation_id = data->arc_gap[index_of((s + N_ / 2) % N_)];
      const DepthData& prev = *depths_[d - 1];
      auto it = std::upper_bound(prev.cuts.begin(), prev.cuts.end(), s);
      const int pi = it == prev.cuts.begin() ? static_cast<int>(prev.cuts.size()) - 1
                                             : static_cast<int>(it - prev.cuts.begin()) - 1;
      p.parent_id = prev.arc_gap[pi];
      const std::uint64_t img = (2 * s) % N_;
      auto jt = std::lower_bound(prev.cuts.begin(), prev.cuts.end(), img);
      p.image_id = prev.arc_gap[jt - prev.cuts.begin()];
    }
  }
  if (d > 0) {
    data->preimages.assign(depths_[d - 1]->pieces.size(), {});
    for (const auto& p : data->pieces) data->preimages[p.image_id].push_back(p.id);
  }
  depths_.push_back(data);

  // Locate the critical orbit at this depth.
  auto& row = depths_[d]->orbit_row;
  const int len = static_cast<int>(orbit_.size()) - d;
  row.resize(len);
  if (d == 0) {
    for (int j = 0; j < len; ++j) row[j] = piece_index(orbit_[j], 0);
  } else {
    const auto& up = depths_[d - 1]->orbit_row;
    for (int j = 0; j < len; ++j) {
      const auto& cand = depths_[d]->preimages.at(up[j + 1]);
      if (cand.size() == 1) {
        row[j] = cand[0];
      } else {
        const bool in = polygon_contains(d, cand[0], orbit_[j]);
        const bool neg = polygon_contains(d, cand[0], -orbit_[j]);
        if (in == neg) throw Error(ErrorKind::LabelAmbiguity, "orbit point is not separated from its negative", d);
        row[j] = in ? cand[0] : cand[1];
      }
    }
  }
  if (d == 0) {
    std::set<int> distinct(row.begin(), row.begin() + q_);
    if (static_cast<int>(distinct.size()) != q_)
      throw Error(ErrorKind::LabelAmbiguity, "depth-0 pieces do not separate c_0..c_{q-1}");
  }
  critical_ids_.push_back(row[0]);
  auto& pcs = depths_[d]->pieces;
  for (int i = 0; i < q_; ++i) {
    const std::string di = std::to_string(d), ii = std::to_string(i);
    pcs[row[i]].labels.push_back("P_" + di + "(c_" + ii + ")");
    if (i > 0 && d > 0) pcs[pcs[row[i]].negation_id].labels.push_back("P_" + di + "(-c_" + ii + ")");
  }
}

int PuzzleTower::ray_level(std::uint64_t num) const {
  std::uint64_t t = num;
  for (int k = 0; k <= cfg_.max_depth + 2; ++k) {
    if (std::find(theta_.begin(), theta_.end(), t) != theta_.end()) return k;
    t = (2 * t) % N_;
  }
  throw Error(ErrorKind::BadInput, "angle is not a preimage of the alpha cycle");
}

const PuzzleTower::RayData& PuzzleTower::ray(std::uint64_t num) const {
  auto it = rays_.find(num);
  if (it != rays_.end()) return *it->second;
  const int s = cfg_.substeps;
  const int T = top_exponent();
  const cplx c = map_.c();
  const int level = ray_level(num);

  if (level == 0) {
    // Newton for the upper part of the cycle rays, then pull back in lock-step.
    RayConfig rc = cfg_.ray;
    rc.substeps = s;
    rc.level_scale = cfg_.G0;
    rc.top_exponent = T;
    std::vector<std::vector<cplx>> pts(q_);
    for (int i = 0; i < q_; ++i) {
      detail::RayStepper st(map_, Angle(theta_[i], N_), rc);
      pts[i].push_back(st.z());
      while (st.level() < s * (T + cfg_.newton_halvings)) {
        st.step();
        pts[i].push_back(st.z());
      }
    }
    std::vector<int> sigma(q_);
    for (int i = 0; i < q_; ++i)
      sigma[i] = static_cast<int>(std::find(theta_.begin(), theta_.end(), (2 * theta_[i]) % N_) - theta_.begin());
    const int cap = 200000;
    auto all_close = [&](double tol) {
      for (const auto& p : pts)
        if (std::abs(p.back() - alpha_) > tol) return false;
      return true;
    };
    while (!all_close(cfg_.landing_distance) && static_cast<int>(pts[0].size()) < cap) {
      const std::size_t j = pts[0].size();
      std::vector<cplx> nxt(q_);
      for (int i = 0; i < q_; ++i) {
        double ratio;
        nxt[i] = pull(pts[sigma[i]][j - s], c, pts[i][j - 1], &ratio);
        if (ratio > 0.5) throw Error(ErrorKind::PullbackBranchClash, "alpha ray pullback is ambiguous");
      }
      for (int i = 0; i < q_; ++i) pts[i].push_back(nxt[i]);
    }
    if (!all_close(1e-8)) throw Error(ErrorKind::TraceDiverged, "alpha rays do not converge to alpha");
    for (int i = 0; i < q_; ++i) {
      auto r = std::make_shared<RayData>();
      r->level = 0;
      r->j0 = 0;
      r->pts = std::move(pts[i]);
      r->landing = alpha_;
      rays_[theta_[i]] = r;
    }
    return *rays_.at(num);
  }

  // Every other cut ray is the pullback of its double; the branch is fixed at
  // the top sample, where the potential is at least 2 G0 and the inverse
  // Boettcher map is accurate.
  const RayData& parent = ray((2 * num) % N_);
  auto r = std::make_shared<RayData>();
  r->level = level;
  r->j0 = parent.j0 + s;
  const double g = cfg_.G0 * std::ldexp(1.0, T - level);
  std::optional<cplx> seed;
  if (T - level >= 1) {
    const cplx zeta = std::exp(cplx(g, kTwoPi * Angle(num, N_).value()));
    seed = detail::solve_boettcher(map_, g, Angle(num, N_), 0.0, zeta - c / (2.0 * zeta), cfg_.ray);
  } else {
    // Deep rays: short Newton descent from 2 G0.
    RayConfig rc = cfg_.ray;
    rc.substeps = s;
    rc.level_scale = cfg_.G0;
    rc.top_exponent = 1;
    detail::RayStepper st(map_, Angle(num, N_), rc);
    while (st.level() < (1 - T + level) * s) st.step();
    seed = st.z();
  }
  if (!seed) throw Error(ErrorKind::TraceDiverged, "ray seed failed");
  double ratio;
  cplx z = pull(parent.pts.front(), c, *seed, &ratio);
  if (ratio > 0.1) throw Error(ErrorKind::PullbackBranchClash, "ray seed does not select a branch");
  r->pts.reserve(parent.pts.size());
  r->pts.push_back(z);
  const cplx dir = std::polar(1.0, kTwoPi * Angle(num, N_).value());
  for (std::size_t k = 1; k < parent.pts.size(); ++k) {
    // High up the samples are far apart; the argument fixes the branch there.
    const double gk = cfg_.G0 * std::exp2(T - static_cast<double>(r->j0 + static_cast<int>(k)) / s);
    if (gk >= 4.0) {
      z = pull(parent.pts[k], c, std::abs(std::sqrt(parent.pts[k] - c)) * dir, &ratio);
      if (ratio > 0.2) throw Error(ErrorKind::PullbackBranchClash, "ray branch unclear at high potential");
      r->pts.push_back(z);
      continue;
    }
    z = pull(parent.pts[k], c, z, &ratio);
    if (ratio > 0.5) throw Error(ErrorKind::PullbackBranchClash, "ray pullback passes too close to 0");
    r->pts.push_back(z);
  }
  r->landing = pull(parent.landing, c, z);
  rays_[num] = r;
  return *r;
}

Polyline PuzzleTower::ray_segment(std::uint64_t num, int d) const {
  const RayData& r = ray(num);
  const int start = (top_exponent() + d) * cfg_.substeps - r.j0;
  if (start < 0) throw Error(ErrorKind::BadInput, "ray does not reach this depth", d);
  Polyline out(r.pts.begin() + start, r.pts.end());
  if (std::abs(out.back() - r.landing) > 0.0) out.push_back(r.landing);
  return out;
}

Polyline PuzzleTower::equipotential_arc(std::uint64_t a, std::uint64_t b, int d) const {
  // chain[i] is the point of potential G0/2^i and angle 2^(d-i) (a + offset);
  // only chain[0] is solved by Newton, the rest are continuity pullbacks.
  const cplx c = map_.c();
  std::vector<cplx> chain(d + 1);
  std::uint64_t t = a;
  for (int i = d; i >= 0; --i) {
    chain[i] = ray_segment(t, i).front();
    t = (2 * t) % N_;
  }
  const Angle base(t == 0 ? 0 : (a << d) % N_, N_);
  const double span = static_cast<double>((b + N_ - a) % N_) / static_cast<double>(N_);
  const double span0 = std::ldexp(span, d);  // turns on the depth-0 equipotential
  const int steps = std::max(cfg_.arc_min_points, static_cast<int>(std::ceil(span0 * 8 * cfg_.arc_steps_per_turn)));

  auto advance = [&](double off0) -> bool {
    auto w = detail::solve_boettcher(map_, cfg_.G0, base, off0, chain[0], cfg_.ray);
    if (!w || std::abs(*w - chain[0]) > 0.5 * (1.0 + std::abs(chain[0]))) return false;
    std::vector<cplx> next(d + 1);
    next[0] = *w;
    for (int i = 1; i <= d; ++i) {
      double ratio;
      next[i] = pull(next[i - 1], c, chain[i], &ratio);
      if (ratio > 0.3) return false;
    }
    chain = std::move(next);
    return true;
  };
  std::function<bool(double, double, int)> walk = [&](double from, double to, int depth) -> bool {
    if (advance(to)) return true;
    if (depth > 20) return false;
    const double mid = 0.5 * (from + to);
    return walk(from, mid, depth + 1) && walk(mid, to, depth + 1);
  };
  Polyline out{chain[d]};
  for (int k = 1; k <= steps; ++k) {
    if (!walk(span0 * (k - 1) / steps, span0 * k / steps, 0))
      throw Error(ErrorKind::PullbackBranchClash, "equipotential continuation failed", d);
    out.push_back(chain[d]);
  }
  const cplx end = ray_segment(b, d).front();
  if (std::abs(out.back() - end) > 1e-7 * (1.0 + std::abs(end)))
    throw Error(ErrorKind::PullbackBranchClash, "equipotential arc misses the next ray", d);
  out.back() = end;
  return out;
}

const Polyline& PuzzleTower::boundary(int d, int id) const {
  auto key = std::make_pair(d, id);
  auto it = boundaries_.find(key);
  if (it != boundaries_.end()) return it->second;
  const PuzzlePiece& p = piece(d, id);
  Polyline poly;
  for (const auto& [a, b] : p.arcs) {
    Polyline arc = equipotential_arc(a, b, d);
    poly.insert(poly.end(), arc.begin(), arc.end() - 1);
    Polyline down = ray_segment(b, d);
    poly.insert(poly.end(), down.begin(), down.end());
    const auto& mem = groups_[group_of_.at(b)].members;
    const int pos = static_cast<int>(std::find(mem.begin(), mem.end(), b) - mem.begin());
    Polyline up = ray_segment(mem[(pos + q_ - 1) % q_], d);
    // Skip the shared landing point and the next arc's starting point.
    for (int k = static_cast<int>(up.size()) - 2; k >= 1; --k) poly.push_back(up[k]);
  }
  return boundaries_[key] = clean_polyline(poly, 0.0);
}

bool PuzzleTower::polygon_contains(int d, int id, cplx z) const {
  const Polyline& poly = boundary(d, id);
  if (distance_to_polyline(poly, z) < cfg_.boundary_tolerance)
    throw Error(ErrorKind::OnBoundary, "point lies on a puzzle boundary", d);
  return point_in_polygon(poly, z);
}

int PuzzleTower::piece_index(cplx z, int d) const {
  if (d < 0 || d > max_depth()) throw Error(ErrorKind::BadInput, "depth outside the tower", d);
  if (green(map_, z) > level(d) * (1.0 + 1e-12))
    throw Error(ErrorKind::BadLevel, "point lies above the depth equipotential", d);
  if (d == 0) {
    int found = -1;
    for (const auto& p : pieces(0)) {
      if (polygon_contains(0, p.id, z)) {
        if (found >= 0) throw Error(ErrorKind::LabelAmbiguity, "point in two depth-0 pieces");
        found = p.id;
      }
    }
    if (found < 0) throw Error(ErrorKind::OnBoundary, "point outside every depth-0 polygon", 0);
    return found;
  }
  const int image = piece_index(map_(z), d - 1);
  const auto& cand = preimages(d, image);
  if (cand.size() == 1) return cand[0];
  const bool in = polygon_contains(d, cand[0], z);
  const bool neg = polygon_contains(d, cand[0], -z);
  if (in == neg) throw Error(ErrorKind::LabelAmbiguity, "point is not separated from its negative", d);
  return in ? cand[0] : cand[1];
}

std::vector<std::vector<int>> PuzzleTower::orbit_pieces(const std::vector<cplx>& orbit, int depth) const {
  if (depth > max_depth()) throw Error(ErrorKind::BadInput, "orbit table deeper than the tower", depth);
  std::vector<std::vector<int>> table(depth + 1);
  const int n = static_cast<int>(orbit.size());
  for (int j = 0; j < n; ++j) table[0].push_back(piece_index(orbit[j], 0));
  for (int d = 1; d <= depth; ++d) {
    for (int j = 0; j + d < n; ++j) {
      const auto& cand = preimages(d, table[d - 1][j + 1]);
      if (cand.size() == 1) {
        table[d].push_back(cand[0]);
        continue;
      }
      const bool in = polygon_contains(d, cand[0], orbit[j]);
      const bool neg = polygon_contains(d, cand[0], -orbit[j]);
      if (in == neg) throw Error(ErrorKind::LabelAmbiguity, "orbit point is not separated from its negative", d);
      table[d].push_back(in ? cand[0] : cand[1]);
    }
  }
  return table;
}

std::vector<int> PuzzleTower::groups_at(int d) const {
  std::vector<int> out;
  for (std::size_t g = 0; g < groups_.size(); ++g)
    if (groups_[g].level <= d) out.push_back(static_cast<int>(g));
  return out;
}

Corner PuzzleTower::corner(int group) const {
  const Group& g = groups_.at(group);
  Corner c;
  c.group = group;
  c.level = g.level;
  for (auto m : g.members) c.angles.emplace_back(m, N_);
  auto it = landing_.find(group);
  if (it != landing_.end()) {
    c.point = it->second;
  } else {
    c.point = g.level == 0 ? alpha_ : ray(g.members.front()).landing;
    landing_[group] = c.point;
  }
  std::uint64_t t = g.members.front();
  std::string itin = Angle(t, N_).str();
  for (int k = 0; k < g.level; ++k) {
    t = (2 * t) % N_;
    itin += " -> " + Angle(t, N_).str();
  }
  c.itinerary = itin;
  return c;
}

std::string PuzzleTower::piece_json(int d, int id) const {
  const PuzzlePiece& p = piece(d, id);
  nlohmann::json j;
  j["depth"] = d;
  j["id"] = id;
  j["label"] = p.labels.empty() ? nlohmann::json(nullptr) : nlohmann::json(p.label());
  j["image_id"] = p.image_id < 0 ? nlohmann::json(nullptr) : nlohmann::json(p.image_id);
  j["corners"] = nlohmann::json::array();
  for (int g : p.corners) {
    Corner c = corner(g);
    j["corners"].push_back({{"re", c.point.real()}, {"im", c.point.imag()}, {"itinerary", c.itinerary}});
  }
  j["boundary"] = nlohmann::json::array();
  for (cplx z : boundary(d, id)) j["boundary"].push_back({z.real(), z.imag()});
  return j.dump();
}

PuzzlePiece piece_containing(const PuzzleTower& tower, cplx z, int d) {
  return tower.piece(d, tower.piece_index(z, d));
}

std::vector<PuzzlePiece> star_pieces(const PuzzleTower& tower, cplx z, int d) {
  const double tol = 1e-6;
  cplx w = z;
  int hit = -1;
  for (int n = 0; n <= d; ++n) {
    if (std::abs(w - tower.alpha()) < tol) {
      hit = n;
      break;
    }
    w = tower.map()(w);
  }
  if (hit < 0) return {piece_containing(tower, z, d)};
  std::vector<PuzzlePiece> out;
  for (int g : tower.groups_at(d)) {
    Corner c = tower.corner(g);
    if (c.level != hit || std::abs(c.point - z) > tol) continue;
    for (const auto& p : tower.pieces(d))
      if (std::find(p.corners.begin(), p.corners.end(), g) != p.corners.end()) out.push_back(p);
    break;
  }
  if (out.empty()) throw Error(ErrorKind::OnBoundary, "no corner matches the alpha preimage", d);
  return out;
}

bool annulus_degenerate(const PuzzleTower& tower, int d, int outer_id, int inner_id) {
  const auto& a = tower.piece(d, outer_id).corners;
  const auto& b = tower.piece(d + 1, inner_id).corners;
  for (int g : b)
    if (std::find(a.begin(), a.end(), g) != a.end()) return true;
  return false;
}

PuzzleAnnulus annulus(const PuzzleTower& tower, cplx z, int d, bool with_modulus, const ModulusOptions& opt) {
  if (d + 1 > tower.max_depth()) throw Error(ErrorKind::BadInput, "annulus needs depth d+1 in the tower", d);
  std::vector<cplx> orbit{z};
  for (int k = 0; k <= d; ++k) orbit.push_back(tower.map()(orbit.back()));
  auto table = tower.orbit_pieces(orbit, d + 1);
  PuzzleAnnulus an;
  an.outer = tower.piece(d, table[d][0]);
  an.inner = tower.piece(d + 1, table[d + 1][0]);
  if (an.inner.id == tower.critical_piece(d + 1))
    an.criticality = Criticality::Critical;
  else if (an.outer.id == tower.critical_piece(d))
    an.criticality = Criticality::SemiCritical;
  else
    an.criticality = Criticality::OffCritical;
  an.degenerate = annulus_degenerate(tower, d, an.outer.id, an.inner.id);
  if (an.degenerate) {
    an.modulus = ModulusInterval::degenerate();
  } else if (with_modulus) {
    an.modulus = estimate_modulus(tower.boundary(d, an.outer.id), tower.boundary(d + 1, an.inner.id), opt);
  }
  return an;
}

namespace {

// Descends the ray of angle base+offset from G0 until it first enters the
// disk of radius eps about alpha; returns the polyline ending on the circle.
Polyline ray_to_disk(const PuzzleTower& tower, const Angle& base, double offset, double eps) {
  RayConfig rc = tower.config().ray;
  rc.substeps = tower.config().substeps;
  rc.level_scale = tower.config().G0;
  rc.top_exponent = 4;
  detail::RayStepper st(tower.map(), base, rc, offset);
  while (st.level() < 4 * rc.substeps) st.step();
  const double G0 = tower.config().G0;
  const cplx c = tower.map().c();
  const cplx alpha = tower.alpha();
  // chain[0] has potential in [G0, 2 G0); chain[i+1] pulls chain[i] back.
  std::vector<cplx> chain{st.z()};
  double g = G0;
  auto try_step = [&](double g_to) -> bool {
    int m = static_cast<int>(chain.size()) - 1;
    while (std::ldexp(g_to, m) < G0 * (1 - 1e-12)) {
      chain.insert(chain.begin(), tower.map()(chain.front()));
      ++m;
    }
    const Angle top = base.times_pow(2, m);
    auto w = detail::solve_boettcher(tower.map(), std::ldexp(g_to, m), top, std::ldexp(offset, m), chain[0], tower.config().ray);
    if (!w || std::abs(*w - chain[0]) > 0.5 * (1.0 + std::abs(chain[0]))) return false;
    std::vector<cplx> next(chain.size());
    next[0] = *w;
    for (std::size_t i = 1; i < chain.size(); ++i) {
      double ratio;
      next[i] = pull(next[i - 1], c, chain[i], &ratio);
      if (ratio > 0.3) return false;
    }
    chain = std::move(next);
    g = g_to;
    return true;
  };
  std::function<bool(double, int)> descend = [&](double g_to, int depth) -> bool {
    const double g_from = g;
    if (try_step(g_to)) return true;
    if (depth > 20) return false;
    const double mid = std::sqrt(g_from * g_to);
    return descend(mid, depth + 1) && descend(g_to, depth + 1);
  };
  Polyline out{chain.back()};
  double best = std::abs(chain.back() - alpha);
  const double ratio = std::exp2(-1.0 / rc.substeps);
  while (true) {
    if (!descend(g * ratio, 0)) throw Error(ErrorKind::TraceDiverged, "widened ray descent failed", 0);
    const cplx z = chain.back();
    const double r = std::abs(z - alpha);
    if (r < eps) {
      // Intersect the last segment with the circle.
      const cplx p = out.back(), v = z - p;
      const cplx w = p - alpha;
      const double A = std::norm(v), B = 2.0 * (w.real() * v.real() + w.imag() * v.imag()),
                   C = std::norm(w) - eps * eps;
      const double disc = std::max(0.0, B * B - 4 * A * C);
      const double t = (-B - std::sqrt(disc)) / (2 * A);
      out.push_back(p + std::clamp(t, 0.0, 1.0) * v);
      return out;
    }
    best = std::min(best, r);
    // A ray that has settled (or turned away) outside the disk misses it.
    const bool settled = out.size() > static_cast<std::size_t>(rc.substeps) &&
                         std::abs(z - out[out.size() - rc.substeps]) < 1e-3 * eps;
    if (r > 4.0 * best + eps || settled || g < 1e-60) return {};
    out.push_back(z);
  }
}

Polyline equipotential_offsets(const PuzzleTower& tower, const Angle& base, double from, double to, cplx start) {
  const double g = tower.config().G0;
  int n = 0;
  for (double sc = g; sc < tower.config().ray.newton_radius; sc *= 2) ++n;
  const int steps = std::max(tower.config().arc_min_points,
                             static_cast<int>(std::ceil(std::ldexp(to - from, n) * tower.config().arc_steps_per_turn)));
  Polyline out{start};
  cplx z = start;
  for (int k = 1; k <= steps; ++k) {
    const double off = from + (to - from) * k / steps;
    auto w = detail::solve_boettcher(tower.map(), g, base, off, z, tower.config().ray);
    if (!w) throw Error(ErrorKind::PullbackBranchClash, "thickened equipotential failed", 0);
    z = *w;
    out.push_back(z);
  }
  return out;
}

Polyline decimate(const Polyline& poly, double min_step) {
  Polyline out;
  for (cplx z : poly)
    if (out.empty() || std::abs(z - out.back()) >= min_step) out.push_back(z);
  return out;
}

// Lift of a closed curve through sqrt(w - c), densified near c. Returns the
// lifted closed curve; `doubled` reports a curve winding around c.
Polyline lift(const Polyline& curve, cplx c, bool winds) {
  Polyline dense;
  const std::size_t n = curve.size();
  for (std::size_t k = 0; k < n; ++k) {
    const cplx a = curve[k], b = curve[(k + 1) % n];
    dense.push_back(a);
    const double near = std::min(std::abs(a - c), std::abs(b - c));
    const double len = std::abs(b - a);
    const int extra = std::min(4096, static_cast<int>(std::ceil(len / (0.2 * std::max(near, 1e-12)))) - 1);
    for (int i = 1; i <= extra; ++i) dense.push_back(a + (b - a) * (static_cast<double>(i) / (extra + 1)));
  }
  Polyline out;
  cplx z = std::sqrt(dense[0] - c);
  const int laps = winds ? 2 : 1;
  for (int lap = 0; lap < laps; ++lap)
    for (std::size_t k = 0; k < dense.size(); ++k) {
      if (lap == 0 && k == 0) {
        out.push_back(z);
        continue;
      }
      z = pull(dense[k], c, z);
      out.push_back(z);
    }
  return out;
}

}  // namespace

std::vector<std::vector<ThickenedPiece>> thicken(const PuzzleTower& tower, double epsilon, double eta, int max_depth) {
  if (!(epsilon > 0.0) || !(eta > 0.0)) throw Error(ErrorKind::BadInput, "epsilon and eta must be positive");
  if (max_depth > tower.max_depth()) throw Error(ErrorKind::BadInput, "thickening deeper than the tower", max_depth);
  const std::uint64_t N = tower.angle_denominator();
  const cplx alpha = tower.alpha();
  std::vector<std::vector<ThickenedPiece>> out(max_depth + 1);
  double used_eta = eta;

  for (const auto& p : tower.pieces(0)) {
    const auto [a, b] = p.arcs.front();
    const Angle A(a, N);
    const double span = static_cast<double>((b + N - a) % N) / static_cast<double>(N);
    // eta shrinks until both widened rays meet the disk.
    double e = eta;
    Polyline left, right;
    for (int k = 0; k < 40; ++k, e /= 2) {
      left = ray_to_disk(tower, A, -e, epsilon);
      right = left.empty() ? Polyline{} : ray_to_disk(tower, A, span + e, epsilon);
      if (!right.empty()) break;
    }
    if (right.empty()) throw Error(ErrorKind::CautionViolated, "no widening meets the disk about alpha", 0);
    used_eta = std::min(used_eta, e);
    Polyline eq = equipotential_offsets(tower, A, -e, span + e, left.front());
    if (std::abs(eq.back() - right.front()) > 1e-7 * (1 + std::abs(right.front())))
      throw Error(ErrorKind::PullbackBranchClash, "thickened equipotential misses the widened ray", 0);
    Polyline poly(eq.begin(), eq.end() - 1);
    poly.insert(poly.end(), right.begin(), right.end());
    double phiB = std::arg(right.back() - alpha), phiA = std::arg(left.back() - alpha);
    double sweep = phiA - phiB;
    while (sweep <= 0) sweep += kTwoPi;
    const int ns = std::max(8, static_cast<int>(std::ceil(sweep / (kTwoPi / 256))));
    for (int k = 1; k < ns; ++k) poly.push_back(alpha + epsilon * std::polar(1.0, phiB + sweep * k / ns));
    for (auto it = left.rbegin(); it + 1 != left.rend(); ++it) poly.push_back(*it);
    ThickenedPiece tp;
    tp.base = p;
    tp.epsilon = epsilon;
    tp.eta = e;
    tp.boundary = clean_polyline(poly, 0.0);
    if (p.id != tower.critical_piece(0) && point_in_polygon(tp.boundary, 0.0))
      throw Error(ErrorKind::CautionViolated, "thickened depth-0 piece captures the critical point", 0);
    out[0].push_back(std::move(tp));
  }

  const cplx c = tower.map().c();
  for (int d = 1; d <= max_depth; ++d) {
    for (const auto& p : tower.pieces(d)) {
      const Polyline& image = out[d - 1][p.image_id].boundary;
      const bool winds = point_in_polygon(image, c);
      if (winds && p.id != tower.critical_piece(d))
        throw Error(ErrorKind::CautionViolated, "thickened piece captures the critical point", d);
      Polyline l = lift(image, c, winds);
      if (!winds) {
        const cplx probe = tower.corner(p.corners.front()).point;
        if (!point_in_polygon(l, probe))
          for (auto& z : l) z = -z;
      }
      ThickenedPiece tp;
      tp.base = p;
      tp.epsilon = epsilon;
      tp.eta = used_eta;
      tp.boundary = decimate(l, 1e-7 * diameter(image));
      out[d].push_back(std::move(tp));
    }
  }
  return out;
}

AutoThickening thicken_auto(const PuzzleTower& tower, int max_depth) {
  CriticalOrbit orb = critical_orbit(tower.map(), 200);
  double dist = std::numeric_limits<double>::infinity();
  for (cplx z : orb.points) dist = std::min(dist, std::abs(z - tower.alpha()));
  AutoThickening res;
  res.epsilon = dist / 10.0;
  res.eta = 1.0 / (std::ldexp(1.0, max_depth + 4) * tower.q());
  for (res.shrinks = 0;; ++res.shrinks) {
    try {
      res.pieces = thicken(tower, res.epsilon, res.eta, max_depth);
      return res;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::CautionViolated || res.shrinks >= 8) throw;
    }
    res.epsilon /= 2;
    res.eta /= 2;
  }
}

Tableau tableau_from_orbit(const PuzzleTower& tower, cplx z0, int width, int depth) {
  if (depth + 1 > tower.max_depth())
    throw Error(ErrorKind::BadInput, "tableau of depth D needs the tower to depth D+1", depth);
  std::vector<cplx> orbit{z0};
  while (static_cast<int>(orbit.size()) < width + depth + 1) orbit.push_back(tower.map()(orbit.back()));
  for (int j = 0; j < static_cast<int>(orbit.size()); ++j)
    if (std::abs(orbit[j] - tower.alpha()) < tower.config().boundary_tolerance)
      throw Error(ErrorKind::OrbitHitsAlpha, "orbit meets alpha", j);
  auto table = tower.orbit_pieces(orbit, depth + 1);
  std::vector<int> scd(width, -1);
  std::vector<bool> trunc(width, false);
  for (int j = 0; j < width; ++j) {
    for (int d = 0; d <= depth + 1; ++d)
      if (table[d][j] == tower.critical_piece(d)) scd[j] = d;
    trunc[j] = scd[j] == depth + 1;
  }
  return Tableau::from_scd(depth, scd, trunc);
}

}  // namespace jigsaw
