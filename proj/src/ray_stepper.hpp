#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "jigsaw/dyncore.hpp"

namespace jigsaw::detail {

// Newton solve of f^n(z) = psi(exp(d^n g + 2 pi i d^n theta)) for the smallest n with d^n g >= L.
std::optional<cplx> solve_boettcher(const PolynomialMap& map, double g, const Angle& base,
                                    double offset, cplx guess, const RayConfig& cfg);

// Walks one external ray down the potential levels d^(top - j/s).
class RayStepper {
 public:
  // The ray angle is `angle + offset` (offset a small real shift).
  RayStepper(const PolynomialMap& map, const Angle& angle, const RayConfig& cfg, double offset = 0.0);

  cplx z() const { return z_; }
  double g() const { return g_; }
  int level() const { return level_; }
  double next_g() const { return level_potential(level_ + 1); }
  double level_potential(int j) const;
  void step();

 private:
  bool advance(double g_to, int depth);
  void check_critical(cplx z, double g) const;

  const PolynomialMap& map_;
  Angle angle_;
  double offset_ = 0.0;
  RayConfig cfg_;
  int level_ = 0;
  double g_ = 0.0;
  cplx z_;
  bool has_rate_ = false;
  double rate_ = 0.0;  // |dz| per unit of log-potential on the last accepted step
  std::vector<std::pair<cplx, double>> escaping_critical_;
};

}  // namespace jigsaw::detail
