#include "jigsaw/bhpuzzle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <set>

#include "jigsaw/errors.hpp"
#include "json.hpp"

namespace jigsaw {

namespace {

constexpr double kBig = 1e10;

std::vector<cplx> preimages(const PolynomialMap& f, cplx w) {
  auto c = f.coefficients();
  c.back() -= w;
  return polynomial_roots(c);
}

struct Sampled {
  CellGrid grid;
  std::vector<double> G;
};

Sampled sample(const PolynomialMap& f, double x0, double y0, double h, int nx, int ny, double floor) {
  Sampled s;
  s.grid.x0 = x0;
  s.grid.y0 = y0;
  s.grid.h = h;
  s.grid.nx = nx;
  s.grid.ny = ny;
  s.G.resize(static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) s.G[static_cast<std::size_t>(j) * nx + i] = bh_potential(f, s.grid.center(i, j), floor);
  return s;
}

// 4-connected flood of {G <= level} from `start` (and optionally restricted to `within`).
std::vector<std::uint8_t> flood(const std::vector<double>& G, int nx, int ny, double level, int start,
                                bool* touches_border = nullptr, const std::vector<std::uint8_t>* within = nullptr) {
  std::vector<std::uint8_t> mask(G.size(), 0);
  if (touches_border) *touches_border = false;
  if (start < 0 || G[start] > level) return mask;
  std::vector<int> stack{start};
  mask[start] = 1;
  while (!stack.empty()) {
    const int c = stack.back();
    stack.pop_back();
    const int i = c % nx, j = c / nx;
    if (touches_border && (i == 0 || j == 0 || i == nx - 1 || j == ny - 1)) *touches_border = true;
    const int nb[4][2] = {{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
    for (const auto& n : nb) {
      if (n[0] < 0 || n[1] < 0 || n[0] >= nx || n[1] >= ny) continue;
      const int k = n[1] * nx + n[0];
      if (mask[k] || G[k] > level) continue;
      if (within && !(*within)[k]) continue;
      mask[k] = 1;
      stack.push_back(k);
    }
  }
  return mask;
}

// Components of {G <= level} inside `base`; returns per-cell labels (-1 outside) and the count.
int components(const std::vector<double>& G, int nx, int ny, double level, const std::vector<std::uint8_t>& base,
               std::vector<int>& label) {
  label.assign(G.size(), -1);
  int count = 0;
  for (std::size_t c = 0; c < G.size(); ++c) {
    if (!base[c] || G[c] > level || label[c] >= 0) continue;
    auto m = flood(G, nx, ny, level, static_cast<int>(c), nullptr, &base);
    for (std::size_t k = 0; k < m.size(); ++k)
      if (m[k]) label[k] = count;
    ++count;
  }
  return count;
}

int nearest_cell(const CellGrid& g, cplx z) {
  const int i = std::clamp(static_cast<int>(std::floor((z.real() - g.x0) / g.h)), 0, g.nx - 1);
  const int j = std::clamp(static_cast<int>(std::floor((z.imag() - g.y0) / g.h)), 0, g.ny - 1);
  return j * g.nx + i;
}

// Start cell for a flood: the cell at z, or the lowest-potential cell within a few cells.
int start_cell(const CellGrid& g, const std::vector<double>& G, cplx z, double level) {
  const int c = nearest_cell(g, z);
  if (G[c] <= level) return c;
  const int ci = c % g.nx, cj = c / g.nx;
  int best = -1;
  for (int dj = -3; dj <= 3; ++dj)
    for (int di = -3; di <= 3; ++di) {
      const int i = ci + di, j = cj + dj;
      if (i < 0 || j < 0 || i >= g.nx || j >= g.ny) continue;
      const int k = j * g.nx + i;
      if (G[k] <= level && (best < 0 || G[k] < G[best])) best = k;
    }
  return best;
}

BBox cells_box(const CellGrid& g, const std::vector<int>& label, int which) {
  BBox b{1e300, -1e300, 1e300, -1e300};
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (label[j * g.nx + i] == which) {
        b.xmin = std::min(b.xmin, g.x0 + i * g.h);
        b.xmax = std::max(b.xmax, g.x0 + (i + 1) * g.h);
        b.ymin = std::min(b.ymin, g.y0 + j * g.h);
        b.ymax = std::max(b.ymax, g.y0 + (j + 1) * g.h);
      }
  b.xmin -= g.h;
  b.xmax += g.h;
  b.ymin -= g.h;
  b.ymax += g.h;
  return b;
}

BBox mask_box(const CellGrid& g) {
  std::vector<int> lab(g.mask.begin(), g.mask.end());
  for (auto& v : lab) v = v ? 0 : -1;
  return cells_box(g, lab, 0);
}

// `box` is a first guess; `outer` is known to contain the
// piece (its parent's box) and replaces the guess when the flood reaches the border.
// Points in `apart` should land in other pieces; if the mask swallows one, the
// grid is refined (up to 8x) before accepting that they share a component.
// Several seeds are flooded together, for fragments known to share a piece.
BHPiece make_piece(const PolynomialMap& f, double level, double floor, const std::vector<cplx>& seeds, BBox box,
                   const BBox& outer, int M, const std::vector<cplx>& apart = {}) {
  const cplx seed = seeds.front();
  const int M0 = M;
  bool widened = false, grown = false;  // grown: stop zooming once zooming lost part of the piece
  for (int attempt = 0; attempt < 24; ++attempt) {
    const double w = std::max(box.width(), box.height());
    const double margin = 0.15 * w;
    const double h = (w + 2 * margin) / M;
    const int nx = std::max(4, static_cast<int>(std::ceil((box.width() + 2 * margin) / h)));
    const int ny = std::max(4, static_cast<int>(std::ceil((box.height() + 2 * margin) / h)));
    Sampled s = sample(f, box.xmin - margin, box.ymin - margin, h, nx, ny, floor);
    std::vector<int> starts;
    for (cplx z : seeds) starts.push_back(start_cell(s.grid, s.G, z, level));
    const int st = *std::min_element(starts.begin(), starts.end());
    if (st < 0 && seeds.size() > 1) {
      M *= 2;
      continue;
    }
    if (st < 0) {
      // The piece is smaller than a few cells: zoom in on the seed.
      const double r = w / 8;
      box = BBox{seed.real() - r, seed.real() + r, seed.imag() - r, seed.imag() + r};
      continue;
    }
    bool border = false;
    std::vector<std::uint8_t> mask(s.G.size(), 0);
    for (int c : starts) {
      if (mask[c]) continue;
      bool b = false;
      auto m = flood(s.G, nx, ny, level, c, &b);
      border = border || b;
      for (std::size_t k = 0; k < m.size(); ++k) mask[k] |= m[k];
    }
    if (border) {
      grown = grown || widened;
      if (!widened) {
        widened = true;
        box = outer;
      } else {
        const double cx = 0.5 * (box.xmin + box.xmax), cy = 0.5 * (box.ymin + box.ymax);
        box = BBox{cx - w, cx + w, cy - w, cy + w};
      }
      continue;
    }
    const long count = std::count(mask.begin(), mask.end(), 1);
    if (count < 64 && !grown && attempt + 1 < 24) {
      // Barely resolved: regrid on the cells found.
      std::vector<int> lab(mask.begin(), mask.end());
      for (auto& v : lab) v = v ? 0 : -1;
      box = cells_box(s.grid, lab, 0);
      continue;
    }
    BHPiece piece;
    piece.grid = s.grid;
    piece.grid.mask = std::move(mask);
    if (M < 8 * M0 && std::any_of(apart.begin(), apart.end(), [&](cplx z) { return piece.grid.contains(z); })) {
      M *= 2;
      continue;
    }
    const auto& mk = piece.grid.mask;
    long inner = 0, bin = 0, bout = 0;
    Polyline rim;
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const int k = j * nx + i;
        bool edge = false;
        const int nb[4][2] = {{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
        for (const auto& n : nb) {
          const bool in = n[0] >= 0 && n[1] >= 0 && n[0] < nx && n[1] < ny && mk[n[1] * nx + n[0]];
          if (in != static_cast<bool>(mk[k])) edge = true;
        }
        if (mk[k]) {
          if (edge) {
            ++bin;
            rim.push_back(piece.grid.center(i, j));
          } else {
            ++inner;
          }
        } else if (edge) {
          ++bout;
        }
      }
    piece.area = h * h * (inner + 0.5 * (bin + bout));
    piece.area_uncertainty = 0.5 * h * h * (bin + bout);
    piece.diameter = diameter(rim) + h * std::numbers::sqrt2;
    piece.seed = seed;
    return piece;
  }
  throw Error(ErrorKind::GridTooCoarse, "puzzle piece keeps touching its grid border");
}

// Node-grid rasterizer for the annulus between {G <= outer} (flooded from
// outer_seed) and {G <= inner} (flooded from inner_seed inside it, or every
// such node when inner_seed is empty).
RasterAnnulus level_raster(const PolynomialMap& f, const GridSpec& g, double outer, cplx outer_seed, double inner,
                           std::optional<cplx> inner_seed, double floor) {
  RasterAnnulus ra;
  ra.grid = g;
  const std::size_t total = static_cast<std::size_t>(g.nx) * g.ny;
  std::vector<double> G(total);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) G[static_cast<std::size_t>(j) * g.nx + i] = bh_potential(f, g.node(i, j), floor);
  CellGrid cg;
  cg.x0 = g.x0 - 0.5 * g.h;
  cg.y0 = g.y0 - 0.5 * g.h;
  cg.h = g.h;
  cg.nx = g.nx;
  cg.ny = g.ny;
  auto region = flood(G, g.nx, g.ny, outer, start_cell(cg, G, outer_seed, outer));
  std::vector<std::uint8_t> core(total, 0);
  if (inner_seed) {
    core = flood(G, g.nx, g.ny, inner, start_cell(cg, G, *inner_seed, inner), nullptr, &region);
  } else {
    for (std::size_t k = 0; k < total; ++k) core[k] = region[k] && G[k] < inner;
  }
  ra.label.assign(total, 1);
  for (std::size_t k = 0; k < total; ++k)
    if (region[k]) ra.label[k] = core[k] ? 0 : 2;
  ra.hx_first.assign(total, -1.0f);
  ra.hx_last.assign(total, -1.0f);
  ra.vy_first.assign(total, -1.0f);
  ra.vy_last.assign(total, -1.0f);
  auto crossing = [&](std::size_t a, std::size_t b) -> float {
    const std::uint8_t la = ra.label[a], lb = ra.label[b];
    if (la == lb || (la != 2 && lb != 2)) return -1.0f;
    const double lv = (la == 1 || lb == 1) ? outer : inner;
    const double ga = G[a], gb = G[b];
    if (ga == gb) return -1.0f;
    return static_cast<float>(std::clamp((lv - ga) / (gb - ga), 0.0, 1.0));
  };
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t a = static_cast<std::size_t>(j) * g.nx + i;
      if (i + 1 < g.nx) ra.hx_first[a] = ra.hx_last[a] = crossing(a, a + 1);
      if (j + 1 < g.ny) ra.vy_first[a] = ra.vy_last[a] = crossing(a, a + g.nx);
    }
  return ra;
}

}  // namespace

bool CellGrid::contains(cplx z) const {
  const double fi = (z.real() - x0) / h, fj = (z.imag() - y0) / h;
  if (!(fi >= 0 && fj >= 0 && fi < nx && fj < ny)) return false;
  return mask[static_cast<std::size_t>(fj) * nx + static_cast<std::size_t>(fi)] != 0;
}

double bh_potential(const PolynomialMap& map, cplx z, double floor) {
  const double d = map.degree();
  const double shift = map.leading_log_shift();
  const double cap = std::log(kBig) + std::abs(shift) + 2.0;
  double scale = 1.0;
  for (int n = 0; n < 400; ++n) {
    const double r = std::abs(z);
    if (r > kBig) return std::max(0.0, (std::log(r) + shift) * scale);
    if (cap * scale < floor * 1e-3) return 0.0;
    z = map(z);
    scale /= d;
  }
  return 0.0;
}

double BHPuzzle::level(int k) const { return G0_ / std::pow(static_cast<double>(degree()), k); }
double BHPuzzle::inner_level(int k) const { return (G0_ - eps_) / std::pow(static_cast<double>(degree()), k); }

namespace {

double mask_distance(const CellGrid& g, cplx z) {
  double best = std::numeric_limits<double>::infinity();
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (g.mask[static_cast<std::size_t>(j) * g.nx + i]) best = std::min(best, std::abs(g.center(i, j) - z));
  return best;
}

}  // namespace

// P_d(z) is the child of P_{d-1}(z) mapping onto P_{d-1}(f(z)), so indices
// fill a triangle over the orbit. Masks only separate siblings that share an
// image; a point no mask claims is given to the nearest one.
int BHPuzzle::piece_index(cplx z, int k) const {
  if (k < 0 || k > max_depth()) throw Error(ErrorKind::BadLevel, "depth outside the puzzle", k);
  const double g = bh_potential(map_, z, inner_level(max_depth() + 1));
  if (g > level(k)) return -1;
  auto pick = [&](const std::vector<int>& ids, int d, cplx w) {
    if (ids.size() == 1) return ids.front();
    for (int c : ids)
      if (pieces_[d][c].grid.contains(w)) return c;
    int best = -1;
    double bd = std::numeric_limits<double>::infinity();
    for (int c : ids) {
      const double dist = mask_distance(pieces_[d][c].grid, w);
      if (dist < bd) {
        bd = dist;
        best = c;
      }
    }
    return best;
  };
  std::vector<cplx> orbit{z};
  for (int j = 0; j < k; ++j) orbit.push_back(map_(orbit.back()));
  std::vector<int> roots;
  for (const auto& p : pieces_[0]) roots.push_back(p.id);
  std::vector<int> idx;
  for (cplx w : orbit) idx.push_back(pick(roots, 0, w));
  for (int d = 1; d <= k; ++d) {
    for (int j = 0; j + d <= k; ++j) {
      const int a = idx[j], b = idx[j + 1];
      if (a < 0 || b < 0) {
        idx[j] = -1;
        continue;
      }
      std::vector<int> cand;
      for (int c : pieces_[d - 1][a].children)
        if (pieces_[d][c].image_id == b) cand.push_back(c);
      idx[j] = cand.empty() ? -1 : pick(cand, d, orbit[j]);
    }
  }
  return idx[0];
}

ModulusInterval BHPuzzle::thin_modulus_numeric(int k, int id, const ModulusOptions& opt) const {
  const BHPiece& p = piece(k, id);
  const double floor = inner_level(max_depth() + 1);
  const double outer = level(k), inner = inner_level(k);
  Rasterizer r = [&](const GridSpec& g) { return level_raster(map_, g, outer, p.seed, inner, std::nullopt, floor); };
  return estimate_modulus(r, mask_box(p.grid), opt);
}

ModulusInterval BHPuzzle::annulus_modulus(int k, int child_id, const ModulusOptions& opt) const {
  const BHPiece& c = piece(k + 1, child_id);
  const BHPiece& p = piece(k, c.parent_id);
  const double floor = inner_level(max_depth() + 1);
  Rasterizer r = [&](const GridSpec& g) {
    return level_raster(map_, g, level(k), p.seed, level(k + 1), c.seed, floor);
  };
  return estimate_modulus(r, mask_box(p.grid), opt);
}

BHPuzzle bh_build(const PolynomialMap& map, int max_depth, const BHConfig& cfg) {
  if (max_depth < 0) throw Error(ErrorKind::BadInput, "negative depth");
  BHPuzzle P;
  P.map_ = map;
  P.cfg_ = cfg;
  const double d = map.degree();

  int bounded_mult = 0;
  std::vector<double> crit_g;
  for (const auto& w : map.critical_points()) {
    const double g = green(map, w.point);
    if (g > 1e-10) {
      P.escaping_.push_back(w);
      crit_g.push_back(g);
    } else {
      bounded_mult += w.multiplicity;
      P.c0_ = w.point;
    }
  }
  if (bounded_mult > 1)
    throw Error(ErrorKind::BadInput, "more than one bounded critical orbit (counted with multiplicity)");
  if (crit_g.empty()) throw Error(ErrorKind::BadInput, "no escaping critical orbit; the Julia set is connected");

  const double gmin = *std::min_element(crit_g.begin(), crit_g.end());
  auto forbidden_near = [&](double x, double tol) {
    for (double g : crit_g)
      for (int k = 0; k < 200; ++k) {
        const double v = g / std::pow(d, k);
        if (v < x * 1e-6) break;
        if (std::abs(v - x) <= tol) return true;
      }
    return false;
  };
  auto interval_clean = [&](double lo, double hi) {
    for (double g : crit_g)
      for (int k = 0; k < 200; ++k) {
        const double v = g / std::pow(d, k);
        if (v < lo * 1e-6) break;
        if (v >= lo && v <= hi) return false;
      }
    return true;
  };
  if (cfg.G0) {
    P.G0_ = *cfg.G0;
    if (!(P.G0_ > 0) || P.G0_ >= d * gmin) throw Error(ErrorKind::BadLevel, "G0 must lie in (0, min G(f(w)))");
    if (forbidden_near(P.G0_, 1e-3 * P.G0_)) throw Error(ErrorKind::BadLevel, "G0 is of the form G(w)/d^k");
  } else {
    P.G0_ = 0.9 * d * gmin;
    for (int j = 0; forbidden_near(P.G0_, 1e-3 * P.G0_) && j < 60; ++j) P.G0_ *= 1.0 - std::ldexp(1.0, -(j + 3));
  }
  if (cfg.epsilon) {
    P.eps_ = *cfg.epsilon;
    if (!(P.eps_ > 0) || P.eps_ >= P.G0_ * (1 - 1 / d) || !interval_clean(P.G0_ - P.eps_, P.G0_))
      throw Error(ErrorKind::BadLevel, "[G0 - eps, G0] must avoid the critical values of G");
  } else {
    // Widest clean band that stays above the next level G0/d, less 10%.
    double below = P.G0_ / d;
    for (double g : crit_g)
      for (int k = 0; k < 200; ++k) {
        const double v = g / std::pow(d, k);
        if (v < P.G0_) {
          below = std::max(below, v);
          break;
        }
      }
    P.eps_ = 0.9 * (P.G0_ - below);
  }

  const double floor = P.inner_level(max_depth + 1);
  // Root box: grow until its border is outside {G <= G0}.
  double R = 2.0;
  for (;; R *= 2) {
    if (R > 1e6) throw Error(ErrorKind::BadLevel, "depth-0 locus is unbounded at working precision");
    bool ok = true;
    for (int s = 0; s < 256 && ok; ++s) {
      const double t = -R + 2 * R * s / 256.0;
      for (cplx z : {cplx(t, -R), cplx(t, R), cplx(-R, t), cplx(R, t)}) ok = ok && bh_potential(map, z, floor) > P.G0_;
    }
    if (ok) break;
  }

  auto degree_of = [&](const BHPiece& p, double lv, bool& has_c0) {
    int deg = 1;
    has_c0 = false;
    for (const auto& w : map.critical_points()) {
      if (bh_potential(map, w.point, floor) > lv || !p.grid.contains(w.point)) continue;
      deg += w.multiplicity;
      if (P.c0_ && w.point == *P.c0_) has_c0 = true;
    }
    return deg;
  };

  {
    int M = cfg.root_grid;
    std::vector<int> label;
    Sampled s;
    int n = 0;
    for (;; M *= 2) {
      const double h = 2 * R / M;
      s = sample(map, -R, -R, h, M, M, floor);
      std::vector<std::uint8_t> all(s.G.size(), 1);
      n = components(s.G, M, M, P.G0_, all, label);
      std::vector<int> sizes(n, 0);
      for (int v : label)
        if (v >= 0) ++sizes[v];
      if (n > 0 && *std::min_element(sizes.begin(), sizes.end()) >= cfg.min_cells) break;
      if (M * 2 > cfg.max_grid) break;
    }
    s.grid.mask.assign(s.G.size(), 0);
    P.pieces_.emplace_back();
    for (int c = 0; c < n; ++c) {
      int best = -1;
      for (std::size_t k = 0; k < label.size(); ++k)
        if (label[k] == c && (best < 0 || s.G[k] < s.G[best])) best = static_cast<int>(k);
      BHPiece b = make_piece(map, P.G0_, floor, {s.grid.center(best % M, best / M)}, cells_box(s.grid, label, c), BBox{-R, R, -R, R}, cfg.grid);
      b.depth = 0;
      b.id = static_cast<int>(P.pieces_[0].size());
      b.degree = degree_of(b, P.G0_, b.contains_c0);
      P.pieces_[0].push_back(std::move(b));
    }
  }

  // Children by pullback: every component of f^-1(Q) inside P, for Q a child of
  // f(P), contains a preimage of Q's seed, however small the component is.
  for (int k = 0; k < max_depth; ++k) {
    const double lv = P.level(k + 1);
    std::vector<BHPiece> next;
    // pre_of[parent][q]: preimages of q's seed lying in parent.
    std::vector<std::vector<std::vector<cplx>>> pre_of(P.pieces_[k].size(),
                                                       std::vector<std::vector<cplx>>(P.pieces_[k].size()));
    for (const auto& q : P.pieces_[k])
      for (cplx z : preimages(map, q.seed)) {
        const int par = P.piece_index(z, k);
        if (par < 0) throw Error(ErrorKind::GridTooCoarse, "preimage of a seed is outside every piece", k);
        pre_of[par][q.id].push_back(z);
      }
    for (auto& parent : P.pieces_[k]) {
      const BBox outer = mask_box(parent.grid);
      for (const auto& q : P.pieces_[k]) {
        const auto& pre = pre_of[parent.id][q.id];
        if (pre.empty()) continue;
        // Critical points of f in the parent whose values lie in q decide how the
        // preimages group into components.
        std::vector<CriticalPoint> branch;
        int total = 1;
        for (const auto& w : map.critical_points())
          if (P.piece_index(w.point, k) == parent.id && P.piece_index(map(w.point), k) == q.id) {
            branch.push_back(w);
            total += w.multiplicity;
          }
        std::vector<BHPiece> group;
        if (total == static_cast<int>(pre.size()) && !branch.empty()) {
          BHPiece b = make_piece(map, lv, floor, pre, outer, outer, cfg.grid);
          b.degree = total;
          for (const auto& w : branch) b.contains_c0 = b.contains_c0 || (P.c0_ && w.point == *P.c0_);
          group.push_back(std::move(b));
        } else {
          for (cplx z : pre) {
            if (!branch.empty()) {
              bool dup = false;
              for (const auto& g : group) dup = dup || g.grid.contains(z);
              if (dup) continue;
            }
            const double fp = std::abs(map.derivative(z));
            const double r = 0.75 * q.diameter / std::max(fp, 1e-300);
            BBox guess{z.real() - r, z.real() + r, z.imag() - r, z.imag() + r};
            if (r > outer.width() && r > outer.height()) guess = outer;
            std::vector<cplx> apart;
            for (cplx y : pre)
              if (y != z) apart.push_back(y);
            group.push_back(make_piece(map, lv, floor, {z}, guess, outer, cfg.grid, apart));
            group.back().degree = 1;
          }
          // Only a parent with several branch points lands here with critical
          // children; the grid decides which preimages they hold.
          for (const auto& w : branch) {
            int merged_degree = 0;
            std::vector<std::size_t> hit;
            for (std::size_t i = 0; i < group.size(); ++i)
              if (group[i].grid.contains(w.point)) hit.push_back(i);
            if (hit.empty()) {
              double bd = std::numeric_limits<double>::infinity();
              for (std::size_t i = 0; i < group.size(); ++i)
                if (const double dd = mask_distance(group[i].grid, w.point); dd < bd) {
                  bd = dd;
                  hit = {i};
                }
            }
            if (hit.size() > 1) {
              std::vector<cplx> seeds;
              for (std::size_t i : hit) seeds.push_back(group[i].seed);
              for (std::size_t i : hit) merged_degree += group[i].degree - 1;
              BHPiece merged = make_piece(map, lv, floor, seeds, outer, outer, cfg.grid);
              merged.degree = 1 + merged_degree;
              merged.contains_c0 = false;
              for (auto it = hit.rbegin(); it != hit.rend(); ++it) {
                merged.contains_c0 = merged.contains_c0 || group[*it].contains_c0;
                group.erase(group.begin() + static_cast<long>(*it));
              }
              group.push_back(std::move(merged));
              hit = {group.size() - 1};
            }
            group[hit[0]].degree += w.multiplicity;
            group[hit[0]].contains_c0 = group[hit[0]].contains_c0 || (P.c0_ && w.point == *P.c0_);
          }
        }
        for (auto& b : group) {
          b.depth = k + 1;
          b.id = static_cast<int>(next.size());
          b.parent_id = parent.id;
          b.image_id = q.id;
          parent.children.push_back(b.id);
          next.push_back(std::move(b));
        }
      }
    }
    P.pieces_.push_back(std::move(next));
    // Each depth-k piece is covered with total degree d.
    std::vector<int> cover(P.pieces_[k].size(), 0);
    for (const auto& p : P.pieces_[k + 1]) cover[p.image_id] += p.degree;
    for (int c : cover)
      if (c != map.degree()) throw Error(ErrorKind::GridTooCoarse, "pullback degrees do not add up to d", k + 1);
  }

  // Flux shares: deg/d of the image's share; depth-0 pieces climb the levels
  // d^m G0 until the sublevel set is connected.
  const double gmax = *std::max_element(crit_g.begin(), crit_g.end());
  std::function<double(cplx, double)> upper = [&](cplx z, double L) -> double {
    if (L > gmax) return 1.0;
    double Ru = R;
    for (;; Ru *= 2) {
      bool ok = true;
      for (int s = 0; s < 256 && ok; ++s) {
        const double t = -Ru + 2 * Ru * s / 256.0;
        for (cplx w : {cplx(t, -Ru), cplx(t, Ru), cplx(-Ru, t), cplx(Ru, t)}) ok = ok && bh_potential(map, w, floor) > L;
      }
      if (ok || Ru > 1e6) break;
    }
    const int M = cfg.root_grid;
    Sampled s = sample(map, -Ru, -Ru, 2 * Ru / M, M, M, floor);
    const auto comp = flood(s.G, M, M, L, start_cell(s.grid, s.G, z, L));
    int deg = 1;
    for (std::size_t i = 0; i < P.escaping_.size(); ++i)
      if (crit_g[i] < L && comp[nearest_cell(s.grid, P.escaping_[i].point)]) deg += P.escaping_[i].multiplicity;
    if (P.c0_ && comp[nearest_cell(s.grid, *P.c0_)]) deg += 1;
    return deg / d * upper(map(z), d * L);
  };
  for (auto& p : P.pieces_[0]) p.flux = p.degree / d * upper(map(p.seed), d * P.G0_);
  for (int k = 1; k <= max_depth; ++k)
    for (auto& p : P.pieces_[k]) p.flux = p.degree / d * P.pieces_[k - 1][p.image_id].flux;

  for (int k = 0; k <= max_depth; ++k) {
    P.thin_.emplace_back();
    for (const auto& p : P.pieces_[k]) {
      ThinAnnulus t;
      t.depth = k;
      t.piece_id = p.id;
      const double m = P.eps_ / std::pow(d, k) / (2 * std::numbers::pi * p.flux);
      t.modulus.lo = m * (1 - 1e-12);
      t.modulus.hi = m * (1 + 1e-12);
      t.modulus.estimate = m;
      t.modulus.method = ModulusMethod::LevelFlux;
      P.thin_[k].push_back(t);
    }
  }
  return P;
}

std::string BHPuzzle::json() const {
  nlohmann::json j;
  j["degree"] = degree();
  j["G0"] = G0_;
  j["epsilon"] = eps_;
  auto depths = nlohmann::json::array();
  for (int k = 0; k <= max_depth(); ++k) {
    auto ps = nlohmann::json::array();
    for (const auto& p : pieces_[k])
      ps.push_back({{"id", p.id},
                    {"area", p.area},
                    {"parent", p.parent_id},
                    {"image", p.image_id},
                    {"contains_c0", p.contains_c0},
                    {"degree", p.degree},
                    {"thin_modulus_lo", thin_[k][p.id].modulus.lo}});
    depths.push_back({{"depth", k}, {"pieces", ps}});
  }
  j["depths"] = depths;
  return j.dump();
}

std::vector<cplx> bh_orbit(const PolynomialMap& map, cplx z, int n) {
  std::vector<cplx> out{z};
  for (int k = 1; k < n; ++k) out.push_back(map(out.back()));
  return out;
}

Tableau bh_tableau(const BHPuzzle& puzzle, const std::vector<cplx>& orbit, int depth) {
  if (!puzzle.bounded_critical()) throw Error(ErrorKind::BadInput, "no bounded critical point");
  if (depth + 1 > puzzle.max_depth()) throw Error(ErrorKind::BadLevel, "tableau needs one more puzzle depth", depth);
  const cplx c0 = *puzzle.bounded_critical();
  std::vector<int> c0_ids;
  for (int k = 0; k <= depth + 1; ++k) c0_ids.push_back(puzzle.piece_index(c0, k));
  std::vector<int> scd;
  std::vector<bool> trunc;
  for (cplx z : orbit) {
    int s = -1;
    for (int k = 0; k <= depth + 1; ++k) {
      const int id = puzzle.piece_index(z, k);
      if (id < 0 || id != c0_ids[k]) break;
      s = k;
    }
    scd.push_back(s);
    trunc.push_back(s == depth + 1);
  }
  return Tableau::from_scd(depth, scd, trunc);
}

AreaCertificate area_certificate(const BHPuzzle& puzzle) {
  AreaCertificate A;
  const int D = puzzle.max_depth();
  std::vector<std::vector<double>> mu(D + 1), prod(D + 1);
  for (int k = 0; k <= D; ++k) {
    double sum = 0.0, floor = std::numeric_limits<double>::infinity();
    mu[k].assign(puzzle.pieces(k).size(), 0.0);
    prod[k].assign(puzzle.pieces(k).size(), 0.0);
    for (const auto& p : puzzle.pieces(k)) {
      sum += p.area;
      floor = std::min(floor, puzzle.thin(k, p.id).modulus.lo);
      if (k == D) continue;
      if (p.children.empty()) {
        A.leaves.emplace_back(k, p.id);
        continue;
      }
      double ca = 0.0, cu = 0.0;
      for (int c : p.children) {
        ca += puzzle.piece(k + 1, c).area;
        cu += puzzle.piece(k + 1, c).area_uncertainty;
      }
      mu[k][p.id] = p.area / ca;
      prod[k][p.id] = mu[k][p.id] * (k ? prod[k - 1][p.parent_id] : 1.0);
      McMullenCheck m;
      m.depth = k;
      m.piece_id = p.id;
      m.children_area = ca;
      const double factor = 1.0 + 4.0 * std::numbers::pi * puzzle.thin(k, p.id).modulus.lo;
      m.bound = p.area / factor;
      m.slack = m.bound - ca;
      m.tolerance = p.area_uncertainty / factor + cu;
      A.checks.push_back(m);
    }
    A.area_sums.push_back(sum);
    A.thin_floor_by_depth.push_back(floor);
  }
  A.thin_floor = *std::min_element(A.thin_floor_by_depth.begin(), A.thin_floor_by_depth.end());
  A.eta.push_back(1.0);
  A.area_bound.push_back(A.area_sums[0]);
  for (int k = 1; k <= D; ++k) {
    double eta = std::numeric_limits<double>::infinity();
    for (const auto& p : puzzle.pieces(k - 1))
      if (!p.children.empty()) eta = std::min(eta, prod[k - 1][p.id]);
    A.eta.push_back(eta);
    A.area_bound.push_back(A.area_sums[0] / eta);
  }
  return A;
}

const char* to_string(ComponentKind k) {
  switch (k) {
    case ComponentKind::Singleton: return "singleton";
    case ComponentKind::NonTrivial: return "non_trivial";
    case ComponentKind::Inconclusive: return "inconclusive";
  }
  return "?";
}

ComponentReport classify_components(const BHPuzzle& puzzle, const Tableau& critical, const std::vector<cplx>& samples,
                                    int depth, double shrink_fraction) {
  ComponentReport R;
  depth = std::min({depth, critical.depth(), puzzle.max_depth() - 1});
  const auto cls = classify(critical);
  R.periodic = cls.kind == TableauClass::Periodic;
  R.period = cls.period;
  R.totally_disconnected = !R.periodic;
  R.critical_component_nontrivial = R.periodic;

  // Depth past which the periodic critical tableau has no semi-critical cells.
  int n_crit = 0;
  for (int j = 1; j < critical.width(); ++j)
    if (!critical.truncated(j)) n_crit = std::max(n_crit, critical.scd(j) + 1);
  double floor0 = std::numeric_limits<double>::infinity();
  for (const auto& t : puzzle.pieces(0)) floor0 = std::min(floor0, puzzle.thin(0, t.id).modulus.lo);

  const cplx c0 = *puzzle.bounded_critical();
  for (cplx z : samples) {
    SampleVerdict v;
    v.z = z;
    const Tableau tz = bh_tableau(puzzle, bh_orbit(puzzle.map(), z, critical.width()), depth);
    bool resolved = true;
    for (int k = 0; k <= depth; ++k) {
      const int id = puzzle.piece_index(z, k);
      if (id < 0) {
        resolved = false;
        break;
      }
      v.bounds.push_back(puzzle.thin(k, id).modulus.lo);
      v.diameters.push_back(puzzle.piece(k, id).diameter);
      v.partial_sum += v.bounds.back();
    }
    if (!resolved) {
      v.reason = "point outside the computed pieces";
      R.samples.push_back(v);
      continue;
    }
    const bool shrinks = v.diameters.back() < shrink_fraction * v.diameters.front();
    bool any_trunc = false;
    int N = 0;
    for (int j = 0; j < tz.width(); ++j) {
      if (tz.truncated(j)) any_trunc = true;
      else if (j >= 1) N = std::max(N, tz.scd(j) + 1);
    }
    bool tail_trunc = false;
    for (int j = 1; j < tz.width(); ++j) tail_trunc = tail_trunc || tz.truncated(j);

    if (R.periodic && any_trunc) {
      v.kind = ComponentKind::NonTrivial;
      v.reason = std::abs(z - c0) < 1e-12 ? "critical component" : "orbit meets the deepest critical piece";
    } else if (!tail_trunc && N <= depth) {
      // The orbit avoids P_N(c0), so every bound is at least floor0 / 2^(N+1).
      v.N = N;
      const double lemma5 = std::ldexp(floor0, -(N + 1));
      bool uniform = true;
      for (double b : v.bounds) uniform = uniform && b >= lemma5 * (1 - 1e-12);
      v.kind = uniform && shrinks ? ComponentKind::Singleton : ComponentKind::Inconclusive;
      v.reason = uniform ? "orbit avoids P_N(c0); uniform modulus floor" : "uniform floor not met";
    } else if (R.periodic) {
      // Case 2: rows k >= n_crit that are semi-critical at column m and off before it.
      int pairs = 0;
      for (int k = n_crit; k <= depth; ++k)
        for (int m = 0; m < tz.width(); ++m) {
          auto c = tz.cell(k, m);
          if (!c || *c == Criticality::Critical) break;
          if (*c == Criticality::SemiCritical) {
            ++pairs;
            break;
          }
        }
      v.kind = pairs > 0 && shrinks ? ComponentKind::Singleton : ComponentKind::Inconclusive;
      v.reason = pairs > 0 ? "semi-critical rows below the periodic depth" : "no semi-critical row found";
    } else {
      bool positive = true;
      for (double b : v.bounds) positive = positive && b > 0;
      v.kind = positive && shrinks ? ComponentKind::Singleton : ComponentKind::Inconclusive;
      v.reason = "orbit accumulates at c0; non-periodic tableau";
    }
    R.samples.push_back(v);
  }
  return R;
}

std::string ComponentReport::json() const {
  nlohmann::json j;
  j["periodic"] = periodic;
  if (periodic) j["period"] = period;
  j["totally_disconnected"] = totally_disconnected;
  j["critical_component_nontrivial"] = critical_component_nontrivial;
  auto s = nlohmann::json::array();
  for (const auto& v : samples)
    s.push_back({{"z", {v.z.real(), v.z.imag()}},
                 {"kind", to_string(v.kind)},
                 {"reason", v.reason},
                 {"N", v.N},
                 {"partial_sum", v.partial_sum},
                 {"diameters", v.diameters}});
  j["samples"] = s;
  return j.dump();
}

PolynomialLikeRestriction polylike_extract(const BHPuzzle& puzzle, const Tableau& critical, int p, int r_min) {
  if (!puzzle.bounded_critical()) throw Error(ErrorKind::BadInput, "no bounded critical point");
  if (p < 1) throw Error(ErrorKind::BadInput, "period must be positive");
  const cplx c0 = *puzzle.bounded_critical();
  const auto& f = puzzle.map();
  for (int r = std::max(r_min, p); r <= puzzle.max_depth(); ++r) {
    const int id = puzzle.piece_index(c0, r);
    if (id < 0) continue;
    int img = id, chain = 1;
    for (int i = 0; i < p; ++i) {
      chain *= puzzle.piece(r - i, img).degree;
      img = puzzle.piece(r - i, img).image_id;
    }
    if (img != puzzle.piece_index(c0, r - p)) continue;
    // Polynomial-like restriction also needs c_p, c_2p, ... to stay in P_r(c0).
    bool contained = critical.width() > p;
    for (int j = p; j < critical.width(); j += p)
      contained = contained && (critical.truncated(j) ? critical.depth() + 1 >= r : critical.scd(j) >= r);
    if (!contained) continue;
    PolynomialLikeRestriction out;
    out.period = p;
    out.depth = r;
    out.piece_id = id;
    out.image_piece_id = img;
    out.chain_degree = chain;
    // Critical points of f^p: iterated preimages (fewer than p steps) of critical points of f.
    const double floor = puzzle.inner_level(puzzle.max_depth() + 1);
    bool connected = true;
    for (const auto& w : f.critical_points()) {
      std::vector<cplx> layer{w.point};
      for (int i = 0; i < p; ++i) {
        for (cplx z : layer)
          if (puzzle.piece_index(z, r) == id) {
            out.critical_count += w.multiplicity;
            connected = connected && bh_potential(f, z, floor) == 0.0;
          }
        if (i + 1 == p) break;
        std::vector<cplx> up;
        for (cplx z : layer)
          for (cplx y : preimages(f, z)) up.push_back(y);
        layer = std::move(up);
      }
    }
    out.degree = 1 + out.critical_count;
    out.orbit_contained = true;
    out.connected = connected;
    return out;
  }
  throw Error(ErrorKind::ContainmentFails, "no depth r with f^p(P_r(c0)) around P_r(c0) and the critical orbit inside", puzzle.max_depth());
}

CodingTable bernoulli_coding(const BHPuzzle& puzzle, int depth) {
  if (puzzle.bounded_critical()) throw Error(ErrorKind::CriticalInPiece, "a critical orbit is bounded");
  depth = std::min(depth, puzzle.max_depth());
  CodingTable T;
  T.alphabet_depth = -1;
  for (int k = 0; k <= depth && T.alphabet_depth < 0; ++k) {
    bool conformal = true;
    for (const auto& p : puzzle.pieces(k)) conformal = conformal && p.degree == 1;
    if (conformal) T.alphabet_depth = k;
  }
  if (T.alphabet_depth < 0) throw Error(ErrorKind::CriticalInPiece, "every computed depth has a critical piece", depth);
  const int j0 = T.alphabet_depth;
  T.words.resize(depth + 1);
  T.injective.assign(depth + 1, true);
  for (int k = 0; k <= depth; ++k) {
    T.counts.push_back(static_cast<int>(puzzle.pieces(k).size()));
    double md = 0.0;
    for (const auto& p : puzzle.pieces(k)) md = std::max(md, p.diameter);
    T.max_diameter.push_back(md);
    if (k < j0) continue;
    std::set<std::vector<int>> seen;
    for (const auto& p : puzzle.pieces(k)) {
      if (p.degree != 1) throw Error(ErrorKind::CriticalInPiece, "critical point inside a coded piece", k);
      std::vector<int> word;
      int id = p.id;
      for (int lvl = k; lvl >= j0; --lvl) {
        int a = id;
        for (int up = lvl; up > j0; --up) a = puzzle.piece(up, a).parent_id;
        word.push_back(a);
        if (lvl > j0) id = puzzle.piece(lvl, id).image_id;
      }
      if (!seen.insert(word).second) T.injective[k] = false;
      T.words[k].push_back(std::move(word));
    }
  }
  return T;
}

std::vector<cplx> bh_samples(const PolynomialMap& map, int count, unsigned seed) {
  std::mt19937 rng(seed);
  auto c = map.coefficients();
  c[c.size() - 2] -= 1.0;
  auto fixed = polynomial_roots(c);
  cplx z = *std::min_element(fixed.begin(), fixed.end(),
                             [&](cplx a, cplx b) { return green(map, a) < green(map, b); });
  std::vector<cplx> out;
  for (int k = 0; k < 20 + count; ++k) {
    auto pre = preimages(map, z);
    z = pre[rng() % pre.size()];
    if (k >= 20) out.push_back(z);
  }
  return out;
}

std::vector<cplx> precritical_points(const PolynomialMap& map, cplx c0, int levels) {
  std::vector<cplx> out, layer{c0};
  for (int l = 0; l < levels; ++l) {
    std::vector<cplx> up;
    for (cplx w : layer)
      for (cplx y : preimages(map, w)) up.push_back(y);
    out.insert(out.end(), up.begin(), up.end());
    layer = std::move(up);
  }
  return out;
}

}  // namespace jigsaw
