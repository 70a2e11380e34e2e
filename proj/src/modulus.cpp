#include "jigsaw/modulus.hpp"

#include <algorithm>
#include <cmath>

#include "jigsaw/errors.hpp"

namespace jigsaw {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kMinFraction = 0.02;
}  // namespace

const char* to_string(ModulusMethod m) {
  switch (m) {
    case ModulusMethod::ExactRound: return "exact_round";
    case ModulusMethod::GridExtremalLength: return "grid_extremal_length";
    case ModulusMethod::Propagated: return "propagated";
    case ModulusMethod::LevelFlux: return "level_flux";
  }
  return "unknown";
}

ModulusInterval ModulusInterval::degenerate(ModulusMethod m) {
  ModulusInterval out;
  out.method = m;
  return out;
}

ModulusInterval ModulusInterval::lower_bound(double lo, ModulusMethod m) {
  ModulusInterval out;
  out.lo = std::max(0.0, lo);
  out.hi = std::numeric_limits<double>::infinity();
  out.estimate = out.lo;
  out.method = m;
  return out;
}

ModulusInterval round_modulus(double r, double R) {
  if (!(r > 0.0) || !(R > r)) throw Error(ErrorKind::BadRadii, "need 0 < r < R");
  ModulusInterval out;
  out.lo = out.hi = out.estimate = std::log(R / r) / kTwoPi;
  out.method = ModulusMethod::ExactRound;
  return out;
}

double grid_energy(const RasterAnnulus& ra, std::vector<double>* solution,
                   const std::vector<double>* warm, double cg_tolerance) {
  const int nx = ra.grid.nx, ny = ra.grid.ny;
  const auto at = [nx](int i, int j) { return static_cast<std::size_t>(j) * nx + i; };
  const bool have_h = !ra.hx_first.empty();
  const bool have_v = !ra.vy_first.empty();

  // Conductance of the free part of an edge between node a and a boundary node.
  // `from_low` tells whether the free node is the lower-index end.
  auto cut_conductance = [](float first, float last, bool from_low) {
    double theta = from_low ? first : 1.0 - last;
    if (first < 0.0f || !(theta > 0.0)) theta = 1.0;
    return 1.0 / std::max(kMinFraction, std::min(1.0, theta));
  };

  std::vector<int> index(static_cast<std::size_t>(nx) * ny, -1);
  std::vector<std::size_t> free_nodes;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      if (ra.label[at(i, j)] == 2) {
        index[at(i, j)] = static_cast<int>(free_nodes.size());
        free_nodes.push_back(at(i, j));
      }
  const std::size_t n = free_nodes.size();

  // Per free node: up to 4 free neighbours, diagonal and right-hand side.
  std::vector<int> nb(4 * n, -1);
  std::vector<double> diag(n, 0.0), rhs(n, 0.0);
  double boundary_energy = 0.0;  // direct 0-1 edges

  auto visit_edge = [&](std::size_t a, std::size_t b, float first, float last) {
    const std::uint8_t la = ra.label[a], lb = ra.label[b];
    if (la == 2 && lb == 2) {
      const int ia = index[a], ib = index[b];
      diag[ia] += 1.0;
      diag[ib] += 1.0;
      for (int k = 0; k < 4; ++k)
        if (nb[4 * ia + k] < 0) {
          nb[4 * ia + k] = ib;
          break;
        }
      for (int k = 0; k < 4; ++k)
        if (nb[4 * ib + k] < 0) {
          nb[4 * ib + k] = ia;
          break;
        }
    } else if (la == 2 || lb == 2) {
      const bool low_free = la == 2;
      const int i = index[low_free ? a : b];
      const double ub = (low_free ? lb : la) == 1 ? 1.0 : 0.0;
      const double c = cut_conductance(first, last, low_free);
      diag[i] += c;
      rhs[i] += c * ub;
    } else if (la != lb) {
      double gap = (first >= 0.0f && last >= 0.0f) ? static_cast<double>(last - first) : 1.0;
      boundary_energy += 1.0 / std::max(kMinFraction, gap);
    }
  };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const std::size_t a = at(i, j);
      if (i + 1 < nx)
        visit_edge(a, at(i + 1, j), have_h ? ra.hx_first[a] : -1.0f, have_h ? ra.hx_last[a] : -1.0f);
      if (j + 1 < ny)
        visit_edge(a, at(i, j + 1), have_v ? ra.vy_first[a] : -1.0f, have_v ? ra.vy_last[a] : -1.0f);
    }

  // Jacobi-preconditioned conjugate gradients on the free nodes.
  std::vector<double> u(n, 0.5);
  if (warm && warm->size() == static_cast<std::size_t>(nx) * ny)
    for (std::size_t k = 0; k < n; ++k) u[k] = (*warm)[free_nodes[k]];
  auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
    for (std::size_t k = 0; k < n; ++k) {
      double v = diag[k] * x[k];
      for (int m = 0; m < 4; ++m) {
        const int o = nb[4 * k + m];
        if (o >= 0) v -= x[o];
      }
      y[k] = v;
    }
  };
  std::vector<double> r(n), z(n), p(n), ap(n);
  apply(u, ap);
  double bnorm = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    r[k] = rhs[k] - ap[k];
    bnorm += rhs[k] * rhs[k];
  }
  bnorm = std::sqrt(bnorm);
  for (std::size_t k = 0; k < n; ++k) z[k] = r[k] / diag[k];
  p = z;
  double rz = 0.0;
  for (std::size_t k = 0; k < n; ++k) rz += r[k] * z[k];
  const int max_iter = static_cast<int>(20 * std::sqrt(static_cast<double>(n)) + 200) * 4;
  for (int it = 0; it < max_iter && n > 0; ++it) {
    double rnorm = 0.0;
    for (std::size_t k = 0; k < n; ++k) rnorm += r[k] * r[k];
    if (std::sqrt(rnorm) <= cg_tolerance * std::max(bnorm, 1e-300)) break;
    apply(p, ap);
    double pap = 0.0;
    for (std::size_t k = 0; k < n; ++k) pap += p[k] * ap[k];
    const double alpha = rz / pap;
    for (std::size_t k = 0; k < n; ++k) {
      u[k] += alpha * p[k];
      r[k] -= alpha * ap[k];
      z[k] = r[k] / diag[k];
    }
    double rz_new = 0.0;
    for (std::size_t k = 0; k < n; ++k) rz_new += r[k] * z[k];
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t k = 0; k < n; ++k) p[k] = z[k] + beta * p[k];
  }

  // Energy u^T A u - 2 b^T u + const, evaluated edge by edge for robustness.
  std::vector<double> full(static_cast<std::size_t>(nx) * ny);
  for (std::size_t k = 0; k < full.size(); ++k) full[k] = ra.label[k] == 1 ? 1.0 : 0.0;
  for (std::size_t k = 0; k < n; ++k) full[free_nodes[k]] = u[k];
  double energy = boundary_energy;
  auto edge_energy = [&](std::size_t a, std::size_t b, float first, float last) {
    const std::uint8_t la = ra.label[a], lb = ra.label[b];
    if (la == 2 && lb == 2) {
      const double d = full[a] - full[b];
      energy += d * d;
    } else if (la == 2 || lb == 2) {
      const bool low_free = la == 2;
      const double c = cut_conductance(first, last, low_free);
      const double d = full[a] - full[b];
      energy += c * d * d;
    }
  };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const std::size_t a = at(i, j);
      if (i + 1 < nx)
        edge_energy(a, at(i + 1, j), have_h ? ra.hx_first[a] : -1.0f, have_h ? ra.hx_last[a] : -1.0f);
      if (j + 1 < ny)
        edge_energy(a, at(i, j + 1), have_v ? ra.vy_first[a] : -1.0f, have_v ? ra.vy_last[a] : -1.0f);
    }
  if (solution) *solution = std::move(full);
  return energy;
}

namespace {

GridSpec make_grid(const BBox& b, int n, int margin) {
  GridSpec g;
  const double extent = std::max(b.width(), b.height());
  g.h = extent / std::max(1, n - 2 * margin - 1);
  g.x0 = b.xmin - margin * g.h + 0.5 * ((n - 2 * margin - 1) * g.h - b.width()) * 0.0;
  g.y0 = b.ymin - margin * g.h;
  g.nx = static_cast<int>(std::ceil(b.width() / g.h)) + 2 * margin + 1;
  g.ny = static_cast<int>(std::ceil(b.height() / g.h)) + 2 * margin + 1;
  return g;
}

std::vector<double> resample(const std::vector<double>& coarse, const GridSpec& cg, const GridSpec& fg) {
  std::vector<double> out(static_cast<std::size_t>(fg.nx) * fg.ny, 0.5);
  for (int j = 0; j < fg.ny; ++j)
    for (int i = 0; i < fg.nx; ++i) {
      const cplx p = fg.node(i, j);
      double x = (p.real() - cg.x0) / cg.h, y = (p.imag() - cg.y0) / cg.h;
      x = std::clamp(x, 0.0, cg.nx - 1.000001);
      y = std::clamp(y, 0.0, cg.ny - 1.000001);
      const int ix = static_cast<int>(x), iy = static_cast<int>(y);
      const double fx = x - ix, fy = y - iy;
      auto v = [&](int a, int b) { return coarse[static_cast<std::size_t>(b) * cg.nx + a]; };
      out[static_cast<std::size_t>(j) * fg.nx + i] =
          (1 - fx) * (1 - fy) * v(ix, iy) + fx * (1 - fy) * v(ix + 1, iy) + (1 - fx) * fy * v(ix, iy + 1) +
          fx * fy * v(ix + 1, iy + 1);
    }
  return out;
}

}  // namespace

ModulusInterval estimate_modulus(const Rasterizer& rasterize, const BBox& bounds, const ModulusOptions& opt) {
  std::vector<double> warm;
  GridSpec prev_grid;
  double prev = -1.0;
  ModulusInterval out;
  out.method = ModulusMethod::GridExtremalLength;
  for (int n = opt.initial_grid; n <= opt.max_grid; n *= 2) {
    const GridSpec g = make_grid(bounds, n, opt.margin);
    const RasterAnnulus ra = rasterize(g);
    std::vector<double> field;
    std::vector<double> start;
    if (!warm.empty()) start = resample(warm, prev_grid, g);
    const double energy = grid_energy(ra, &field, warm.empty() ? nullptr : &start, opt.cg_tolerance);
    const double m = energy > 0.0 ? 1.0 / energy : std::numeric_limits<double>::infinity();
    if (prev >= 0.0) {
      // One-refinement change, doubled, with a floor for grid-alignment noise.
      const double slack = std::max(2.0 * std::abs(m - prev), 0.01 * m);
      out.estimate = m;
      out.lo = std::max(0.0, m - slack);
      out.hi = m + slack;
      out.grid = n;
      if (slack <= opt.target_relative_slack * m) return out;
    } else if (opt.initial_grid * 2 > opt.max_grid) {
      out.estimate = m;
      out.lo = m;
      out.hi = m;
      out.grid = n;
      return out;
    }
    prev = m;
    warm = std::move(field);
    prev_grid = g;
  }
  out.resolution_capped = true;
  return out;
}

RasterAnnulus rasterize_polygons(const Polyline& outer, const Polyline& inner, const GridSpec& g) {
  RasterAnnulus ra;
  ra.grid = g;
  const std::size_t total = static_cast<std::size_t>(g.nx) * g.ny;
  ra.label.assign(total, 1);
  ra.hx_first.assign(total, -1.0f);
  ra.hx_last.assign(total, -1.0f);
  ra.vy_first.assign(total, -1.0f);
  ra.vy_last.assign(total, -1.0f);

  // Crossings of each polygon with node rows (horizontal lines) and node columns.
  auto row_crossings = [&](const Polyline& poly, bool rows) {
    const int lines = rows ? g.ny : g.nx;
    std::vector<std::vector<double>> out(lines);
    const std::size_t n = poly.size();
    for (std::size_t k = 0; k < n; ++k) {
      const cplx a = poly[k], b = poly[(k + 1) % n];
      const double ay = rows ? a.imag() : a.real(), by = rows ? b.imag() : b.real();
      const double ax = rows ? a.real() : a.imag(), bx = rows ? b.real() : b.imag();
      if (ay == by) continue;
      const double lo = std::min(ay, by), hi = std::max(ay, by);
      const double origin = rows ? g.y0 : g.x0;
      const double origin_x = rows ? g.x0 : g.y0;
      int j0 = static_cast<int>(std::ceil((lo - origin) / g.h));
      int j1 = static_cast<int>(std::ceil((hi - origin) / g.h)) - 1;
      j0 = std::max(j0, 0);
      j1 = std::min(j1, lines - 1);
      for (int j = j0; j <= j1; ++j) {
        const double y = origin + j * g.h;
        if (!(y >= lo && y < hi)) continue;
        const double x = ax + (y - ay) * (bx - ax) / (by - ay);
        out[j].push_back((x - origin_x) / g.h);  // in node units along the line
      }
    }
    for (auto& v : out) std::sort(v.begin(), v.end());
    return out;
  };

  const auto out_rows = row_crossings(outer, true), in_rows = row_crossings(inner, true);
  const auto out_cols = row_crossings(outer, false), in_cols = row_crossings(inner, false);

  auto merged = [](const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> m;
    m.reserve(a.size() + b.size());
    std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(m));
    return m;
  };

  for (int j = 0; j < g.ny; ++j) {
    const auto& xo = out_rows[j];
    const auto& xi = in_rows[j];
    std::size_t po = 0, pi = 0;
    for (int i = 0; i < g.nx; ++i) {
      while (po < xo.size() && xo[po] < i) ++po;
      while (pi < xi.size() && xi[pi] < i) ++pi;
      const bool in_outer = po % 2 == 1, in_inner = pi % 2 == 1;
      ra.label[static_cast<std::size_t>(j) * g.nx + i] = in_inner ? 0 : (in_outer ? 2 : 1);
    }
    const auto all = merged(xo, xi);
    std::size_t p = 0;
    for (int i = 0; i + 1 < g.nx; ++i) {
      while (p < all.size() && all[p] < i) ++p;
      if (p < all.size() && all[p] < i + 1) {
        std::size_t q = p;
        while (q + 1 < all.size() && all[q + 1] < i + 1) ++q;
        ra.hx_first[static_cast<std::size_t>(j) * g.nx + i] = static_cast<float>(all[p] - i);
        ra.hx_last[static_cast<std::size_t>(j) * g.nx + i] = static_cast<float>(all[q] - i);
      }
    }
  }
  for (int i = 0; i < g.nx; ++i) {
    const auto all = merged(out_cols[i], in_cols[i]);
    std::size_t p = 0;
    for (int j = 0; j + 1 < g.ny; ++j) {
      while (p < all.size() && all[p] < j) ++p;
      if (p < all.size() && all[p] < j + 1) {
        std::size_t q = p;
        while (q + 1 < all.size() && all[q + 1] < j + 1) ++q;
        ra.vy_first[static_cast<std::size_t>(j) * g.nx + i] = static_cast<float>(all[p] - j);
        ra.vy_last[static_cast<std::size_t>(j) * g.nx + i] = static_cast<float>(all[q] - j);
      }
    }
  }
  return ra;
}

ModulusInterval estimate_modulus(const Polyline& outer, const Polyline& inner, const ModulusOptions& opt) {
  if (outer.size() < 3 || inner.size() < 3) return ModulusInterval::degenerate();
  // Inner must sit strictly inside the outer region.
  for (cplx p : inner)
    if (!point_in_polygon(outer, p) || distance_to_polyline(outer, p) == 0.0) return ModulusInterval::degenerate();
  const BBox b = bounding_box(outer);
  return estimate_modulus([&](const GridSpec& g) { return rasterize_polygons(outer, inner, g); }, b, opt);
}

ModulusInterval groetzsch_combine(const std::vector<ModulusInterval>& parts) {
  double lo = 0.0;
  for (const auto& p : parts) lo += p.lo;
  return ModulusInterval::lower_bound(lo, ModulusMethod::Propagated);
}

double mcmullen_bound(double outer_area, const ModulusInterval& mod) {
  return outer_area / (1.0 + 4.0 * M_PI * mod.lo);
}

}  // namespace jigsaw
