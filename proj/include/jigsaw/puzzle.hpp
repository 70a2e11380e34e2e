#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "jigsaw/dyncore.hpp"
#include "jigsaw/geometry.hpp"
#include "jigsaw/modulus.hpp"
#include "jigsaw/tableau.hpp"

namespace jigsaw {

struct PuzzleConfig {
  double G0 = 1.0;              // depth-0 equipotential; depth d uses G0 / 2^d
  int max_depth = 12;           // geometry cap
  int substeps = 8;             // ray samples per halving of the potential
  int newton_halvings = 10;     // Newton-traced part of the alpha rays, in halvings below G0
  int arc_min_points = 64;      // per equipotential arc
  int arc_steps_per_turn = 32;  // Newton continuation step, in turns of the far-out target
  double boundary_tolerance = 1e-9;
  double landing_distance = 1e-12;
  int max_alpha_period = 20;
  RayConfig ray;
};

// A landing point of q cut rays: alpha or one of its iterated preimages.
struct Corner {
  int group = -1;
  int level = 0;  // smallest n with f^n(point) = alpha
  cplx point;
  std::vector<Angle> angles;
  std::string itinerary;  // forward doubling orbit of the smallest angle down to the alpha cycle
};

struct PuzzlePiece {
  int depth = 0;
  int id = -1;
  // Boundary arcs on the circle at infinity in walk order, as numerators over
  // PuzzleTower::angle_denominator(); each arc runs counterclockwise first -> second.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> arcs;
  std::vector<int> corners;  // group indices, walk order
  int image_id = -1;         // id of f(piece) at depth-1
  int parent_id = -1;        // containing piece at depth-1
  int negation_id = -1;      // id of -piece at the same depth
  std::vector<std::string> labels;
  std::string label() const;
  double min_angle() const;
};

class PuzzleTower {
 public:
  // Builds the puzzle of the quadratic map through max_depth.
  static PuzzleTower build(const PolynomialMap& map, int max_depth, const PuzzleConfig& cfg = {});
  PuzzleTower(const PolynomialMap& map, const AlphaCycle& cycle, const PuzzleConfig& cfg = {});

  // Value-semantics refinement: a copy with one more depth.
  PuzzleTower refine() const;

  const PolynomialMap& map() const { return map_; }
  const PuzzleConfig& config() const { return cfg_; }
  int q() const { return q_; }
  int max_depth() const { return static_cast<int>(depths_.size()) - 1; }
  cplx alpha() const { return alpha_; }
  const std::vector<Angle>& alpha_angles() const { return alpha_angles_; }
  std::uint64_t angle_denominator() const { return N_; }
  double level(int d) const;

  const std::vector<PuzzlePiece>& pieces(int d) const;
  const PuzzlePiece& piece(int d, int id) const { return pieces(d).at(id); }
  // Preimages at depth d of the depth-(d-1) piece `image_id` (one or two pieces).
  const std::vector<int>& preimages(int d, int image_id) const;

  // Boundary polygon, computed on first use.
  const Polyline& boundary(int d, int id) const;
  Corner corner(int group) const;
  // Groups (landing points) present at depth d.
  std::vector<int> groups_at(int d) const;

  // Index of P_d(z). Throws OnBoundary within tolerance of a cut, BadLevel when
  // G(z) exceeds the depth-d equipotential.
  int piece_index(cplx z, int d) const;
  // table[d][j] = id of P_d(orbit[j]) for j + d < orbit.size().
  std::vector<std::vector<int>> orbit_pieces(const std::vector<cplx>& orbit, int depth) const;
  int critical_piece(int d) const { return critical_ids_.at(d); }
  // P_d(c_j) ids for the first columns used to label and split.
  const std::vector<cplx>& critical_orbit_points() const { return orbit_; }

  std::string piece_json(int d, int id) const;

  struct RayData;
  struct DepthData;

 private:
  PuzzleTower() = default;
  void add_depth();
  const RayData& ray(std::uint64_t num) const;
  int ray_level(std::uint64_t num) const;
  // Cycle rays start at potential G0 * 2^top; cut rays of level < top then
  // begin at >= 2 G0. Capped to keep exp() finite.
  int top_exponent() const { return std::min(cfg_.max_depth + 1, 9); }
  Polyline ray_segment(std::uint64_t num, int d) const;  // from level(d) down to the landing point
  Polyline equipotential_arc(std::uint64_t a, std::uint64_t b, int d) const;
  bool polygon_contains(int d, int id, cplx z) const;

  PolynomialMap map_ = PolynomialMap::quadratic(0.0);
  PuzzleConfig cfg_;
  int q_ = 0;
  cplx alpha_;
  std::vector<Angle> alpha_angles_;
  std::uint64_t N_ = 1;
  std::vector<std::uint64_t> theta_;  // alpha angles as numerators over N_
  std::vector<cplx> orbit_;          // critical orbit c_0, c_1, ...

  struct Group {
    std::vector<std::uint64_t> members;  // sorted
    int level = 0;
  };
  std::vector<Group> groups_;
  std::map<std::uint64_t, int> group_of_;
  std::vector<std::shared_ptr<DepthData>> depths_;
  std::vector<int> critical_ids_;

  mutable std::map<std::uint64_t, std::shared_ptr<RayData>> rays_;
  mutable std::map<std::pair<int, int>, Polyline> boundaries_;
  mutable std::map<int, cplx> landing_;
};

PuzzlePiece piece_containing(const PuzzleTower& tower, cplx z, int d);

// Pieces sharing z as a corner when z is alpha or one of its preimages of
// level <= d; otherwise the single piece P_d(z).
std::vector<PuzzlePiece> star_pieces(const PuzzleTower& tower, cplx z, int d);

struct PuzzleAnnulus {
  PuzzlePiece outer;
  PuzzlePiece inner;
  bool degenerate = false;
  Criticality criticality = Criticality::OffCritical;
  ModulusInterval modulus;
};

PuzzleAnnulus annulus(const PuzzleTower& tower, cplx z, int d, bool with_modulus = true,
                      const ModulusOptions& opt = {});
// Degeneracy and criticality by piece ids (no geometry beyond the ids).
bool annulus_degenerate(const PuzzleTower& tower, int d, int outer_id, int inner_id);

struct ThickenedPiece {
  PuzzlePiece base;
  double epsilon = 0.0;
  double eta = 0.0;
  Polyline boundary;
};

std::vector<std::vector<ThickenedPiece>> thicken(const PuzzleTower& tower, double epsilon, double eta,
                                                 int max_depth);

struct AutoThickening {
  double epsilon = 0.0;
  double eta = 0.0;
  int shrinks = 0;
  std::vector<std::vector<ThickenedPiece>> pieces;
};

// Starts from epsilon = dist(alpha, critical orbit)/10 and eta = 1/(2^(D+4) q),
// halving both on CautionViolated at most 8 times.
AutoThickening thicken_auto(const PuzzleTower& tower, int max_depth);

// Criticality tableau of the orbit of z0; needs the tower one level deeper than `depth`.
Tableau tableau_from_orbit(const PuzzleTower& tower, cplx z0, int width, int depth);

}  // namespace jigsaw
