#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "jigsaw/dyncore.hpp"
#include "jigsaw/geometry.hpp"
#include "jigsaw/modulus.hpp"
#include "jigsaw/tableau.hpp"

namespace jigsaw {

struct BHConfig {
  std::optional<double> G0;       // default 0.9 * min G(f(w)) over escaping critical points
  std::optional<double> epsilon;  // default 0.9 (G0 - largest critical value or G0/d below G0)
  int root_grid = 256;            // cells across the depth-0 box
  int grid = 96;                  // cells across each piece's own grid
  int max_grid = 768;
  int min_cells = 12;             // smaller children trigger a finer discovery grid
  ModulusOptions modulus{64, 256, 0.10, 1e-10, 3};
};

// Square-cell grid with a membership mask; cell (i, j) has center
// (x0 + (i + 1/2) h, y0 + (j + 1/2) h).
struct CellGrid {
  double x0 = 0, y0 = 0, h = 1;
  int nx = 0, ny = 0;
  std::vector<std::uint8_t> mask;
  cplx center(int i, int j) const { return {x0 + (i + 0.5) * h, y0 + (j + 0.5) * h}; }
  bool contains(cplx z) const;
};

struct BHPiece {
  int depth = 0;
  int id = -1;
  CellGrid grid;
  double area = 0.0;
  double area_uncertainty = 0.0;
  double diameter = 0.0;
  int parent_id = -1;
  int image_id = -1;
  bool contains_c0 = false;
  int degree = 1;  // 1 + critical points of f inside, with multiplicity
  double flux = 1.0;  // share of the flux of grad G (harmonic measure of K inside)
  cplx seed;       // deepest sampled point
  std::vector<int> children;
};

// G is harmonic on the band and constant on both of its boundaries, so
// mod A*(P_k) = (eps / d^k) / (2 pi flux(P_k)) exactly.
struct ThinAnnulus {
  int depth = 0;
  int piece_id = -1;
  ModulusInterval modulus;
};

class BHPuzzle {
 public:
  const PolynomialMap& map() const { return map_; }
  int degree() const { return map_.degree(); }
  double G0() const { return G0_; }
  double epsilon() const { return eps_; }
  double level(int k) const;        // G0 / d^k
  double inner_level(int k) const;  // (G0 - eps) / d^k
  int max_depth() const { return static_cast<int>(pieces_.size()) - 1; }
  const std::vector<BHPiece>& pieces(int k) const { return pieces_.at(k); }
  const BHPiece& piece(int k, int id) const { return pieces_.at(k).at(id); }
  const ThinAnnulus& thin(int k, int id) const { return thin_.at(k).at(id); }
  std::optional<cplx> bounded_critical() const { return c0_; }
  const std::vector<CriticalPoint>& escaping_critical() const { return escaping_; }

  // Index of P_k(z), or -1 when z lies outside every depth-k piece.
  int piece_index(cplx z, int k) const;
  // Grid modulus of A_k = P_k \ P_{k+1} for a child of a depth-k piece.
  ModulusInterval annulus_modulus(int k, int child_id, const ModulusOptions& opt = {}) const;
  // Grid estimate of the thin annulus, a check on the closed form.
  ModulusInterval thin_modulus_numeric(int k, int id, const ModulusOptions& opt = {}) const;
  std::string json() const;

  friend BHPuzzle bh_build(const PolynomialMap& map, int max_depth, const BHConfig& cfg);

 private:
  PolynomialMap map_ = PolynomialMap::quadratic(0.0);
  BHConfig cfg_;
  double G0_ = 0, eps_ = 0;
  std::optional<cplx> c0_;
  std::vector<CriticalPoint> escaping_;
  std::vector<std::vector<BHPiece>> pieces_;
  std::vector<std::vector<ThinAnnulus>> thin_;
};

// Potential with early exit: points that stay bounded long enough that their
// potential is below floor * 1e-3 report 0.
double bh_potential(const PolynomialMap& map, cplx z, double floor);

BHPuzzle bh_build(const PolynomialMap& map, int max_depth, const BHConfig& cfg = {});

// Tableau of the orbit (z_0, z_1, ...) against the bounded critical point;
// needs pieces one level deeper than `depth`.
Tableau bh_tableau(const BHPuzzle& puzzle, const std::vector<cplx>& orbit, int depth);
std::vector<cplx> bh_orbit(const PolynomialMap& map, cplx z, int n);

struct McMullenCheck {
  int depth = 0;
  int piece_id = -1;
  double children_area = 0.0;
  double bound = 0.0;  // area / (1 + 4 pi mod_lo)
  double slack = 0.0;  // bound - children_area
  double tolerance = 0.0;
  bool holds() const { return slack + tolerance >= 0.0; }
};

struct AreaCertificate {
  std::vector<double> area_sums;  // per depth
  std::vector<double> eta;        // eta_k, k = 1..max_depth (eta[0] = 1)
  std::vector<double> area_bound;  // sum area(P_0) / eta_k
  std::vector<McMullenCheck> checks;
  std::vector<std::pair<int, int>> leaves;  // pieces without children above the last depth
  double thin_floor = 0.0;                  // min thin-annulus lower bound
  std::vector<double> thin_floor_by_depth;
};

AreaCertificate area_certificate(const BHPuzzle& puzzle);

enum class ComponentKind { Singleton, NonTrivial, Inconclusive };
const char* to_string(ComponentKind k);

struct SampleVerdict {
  cplx z;
  ComponentKind kind = ComponentKind::Inconclusive;
  std::string reason;
  int N = -1;                   // depth whose piece the orbit avoids, when found
  std::vector<double> bounds;   // lower bounds for mod A_k(z)
  std::vector<double> diameters;
  double partial_sum = 0.0;
};

struct ComponentReport {
  bool periodic = false;
  int period = 0;
  bool totally_disconnected = false;
  bool critical_component_nontrivial = false;
  std::vector<SampleVerdict> samples;
  std::string json() const;
};

ComponentReport classify_components(const BHPuzzle& puzzle, const Tableau& critical, const std::vector<cplx>& samples,
                                    int depth, double shrink_fraction = 0.5);

struct PolynomialLikeRestriction {
  int period = 0;
  int depth = 0;  // r
  int piece_id = -1;
  int image_piece_id = -1;  // f^p(P_r(c0)) = P_{r-p}(c0)
  int degree = 0;           // 1 + critical points of f^p inside, with multiplicity
  int chain_degree = 0;     // product of piece degrees along the image chain
  int critical_count = 0;
  bool orbit_contained = false;
  bool connected = false;
};

PolynomialLikeRestriction polylike_extract(const BHPuzzle& puzzle, const Tableau& critical, int p, int r_min = 1);

struct CodingTable {
  int alphabet_depth = 0;
  std::vector<std::vector<std::vector<int>>> words;  // words[k][id]
  std::vector<bool> injective;
  std::vector<double> max_diameter;
  std::vector<int> counts;
};

CodingTable bernoulli_coding(const BHPuzzle& puzzle, int depth);

// Points of the filled Julia set: random backward orbits, and iterated preimages of c0.
std::vector<cplx> bh_samples(const PolynomialMap& map, int count, unsigned seed);
std::vector<cplx> precritical_points(const PolynomialMap& map, cplx c0, int levels);

}  // namespace jigsaw
