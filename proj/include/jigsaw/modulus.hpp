#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "jigsaw/geometry.hpp"

namespace jigsaw {

enum class ModulusMethod { ExactRound, GridExtremalLength, Propagated, LevelFlux };
const char* to_string(ModulusMethod m);

// Certified-lower-bound interval; hi = +inf marks a one-sided bound.
struct ModulusInterval {
  double lo = 0.0;
  double hi = 0.0;
  ModulusMethod method = ModulusMethod::GridExtremalLength;
  double estimate = 0.0;          // point estimate (grid value at the finest resolution)
  int grid = 0;                   // finest grid size used, 0 if not a grid estimate
  bool resolution_capped = false; // slack target not met at the resolution cap

  static ModulusInterval degenerate(ModulusMethod m = ModulusMethod::GridExtremalLength);
  static ModulusInterval lower_bound(double lo, ModulusMethod m = ModulusMethod::Propagated);
  bool is_degenerate() const { return lo == 0.0 && hi == 0.0; }
  bool hi_infinite() const { return hi == std::numeric_limits<double>::infinity(); }
};

ModulusInterval round_modulus(double r, double R);

// Regular grid of nodes (x0 + i h, y0 + j h), 0 <= i < nx, 0 <= j < ny.
struct GridSpec {
  double x0 = 0, y0 = 0, h = 1;
  int nx = 0, ny = 0;
  cplx node(int i, int j) const { return {x0 + i * h, y0 + j * h}; }
};

// Node labels: 0 on the inner complement (u=0), 1 outside the outer boundary
// (u=1), 2 for annulus nodes. Edge crossings are optional positions (in [0,1],
// measured from the lower-index node) of the first and last boundary crossing
// along each grid edge; negative values mean "unknown, use the node".
struct RasterAnnulus {
  GridSpec grid;
  std::vector<std::uint8_t> label;
  std::vector<float> hx_first, hx_last;  // edge (i,j)-(i+1,j), index j*nx+i
  std::vector<float> vy_first, vy_last;  // edge (i,j)-(i,j+1), index j*nx+i
};

using Rasterizer = std::function<RasterAnnulus(const GridSpec&)>;

struct ModulusOptions {
  int initial_grid = 96;
  int max_grid = 768;
  double target_relative_slack = 0.10;
  double cg_tolerance = 1e-10;
  int margin = 3;
};

// Dirichlet energy of the discrete harmonic function for one raster.
double grid_energy(const RasterAnnulus& raster, std::vector<double>* solution = nullptr,
                   const std::vector<double>* warm = nullptr, double cg_tolerance = 1e-10);

// Generic estimator: `bounds` is the region to grid (outer boundary box).
ModulusInterval estimate_modulus(const Rasterizer& rasterize, const BBox& bounds,
                                 const ModulusOptions& opt = {});
// Annulus between two closed polygons (inner strictly inside outer).
ModulusInterval estimate_modulus(const Polyline& outer, const Polyline& inner,
                                 const ModulusOptions& opt = {});
RasterAnnulus rasterize_polygons(const Polyline& outer, const Polyline& inner, const GridSpec& grid);

ModulusInterval groetzsch_combine(const std::vector<ModulusInterval>& parts);
double mcmullen_bound(double outer_area, const ModulusInterval& mod);

}  // namespace jigsaw
