#include "ray_stepper.hpp"

#include <algorithm>

#include "jigsaw/errors.hpp"

namespace jigsaw::detail {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

cplx inverse_boettcher(const PolynomialMap& map, cplx zeta) {
  const auto& a = map.coefficients();
  const int d = map.degree();
  cplx w = zeta - a[1] / static_cast<double>(d);
  if (map.is_unicritical_quadratic()) w -= a[2] / (2.0 * zeta);
  return w;
}
}  // namespace

std::optional<cplx> solve_boettcher(const PolynomialMap& map, double g, const Angle& base,
                                    double offset, cplx guess, const RayConfig& cfg) {
  const int d = map.degree();
  int n = 0;
  double scaled = g;
  while (scaled < cfg.newton_radius) {
    scaled *= d;
    ++n;
    if (n > 4000) return std::nullopt;
  }
  double theta = base.frac_times_pow(d, n) + offset * std::pow(static_cast<double>(d), n);
  theta -= std::floor(theta);
  const cplx zeta = std::exp(cplx(scaled, kTwoPi * theta));
  const cplx target = inverse_boettcher(map, zeta);

  cplx z = guess;
  for (int it = 0; it < cfg.max_newton; ++it) {
    cplx v = z, dv = 1.0;
    for (int k = 0; k < n; ++k) {
      cplx fd;
      v = map.eval(v, fd);
      dv *= fd;
    }
    const cplx step = (v - target) / dv;
    if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) return std::nullopt;
    z -= step;
    if (std::abs(step) <= 1e-14 * std::abs(z)) return z;
  }
  return std::nullopt;
}

RayStepper::RayStepper(const PolynomialMap& map, const Angle& angle, const RayConfig& cfg, double offset)
    : map_(map), angle_(angle), offset_(offset), cfg_(cfg) {
  if (!map.is_monic()) throw Error(ErrorKind::BadInput, "ray tracing expects a monic polynomial");
  for (const auto& c : map.critical_points()) {
    double gc = green(map, c.point);
    if (gc > 0.0) escaping_critical_.push_back({c.point, gc});
  }
  g_ = level_potential(0);
  const cplx zeta = std::exp(cplx(g_, kTwoPi * (angle.value() + offset)));
  cplx guess = inverse_boettcher(map, zeta);
  auto z = solve_boettcher(map, g_, angle, offset, guess, cfg);
  if (!z) throw Error(ErrorKind::TraceDiverged, "ray start failed for angle " + angle.str());
  z_ = *z;
}

double RayStepper::level_potential(int j) const {
  const int s = cfg_.substeps;
  const double d = map_.degree();
  const int whole = cfg_.top_exponent - (j / s);
  const int frac = j % s;
  double g = cfg_.level_scale * std::pow(d, whole);
  if (frac != 0) g *= std::pow(d, -static_cast<double>(frac) / s);
  return g;
}

void RayStepper::check_critical(cplx z, double g) const {
  if (escaping_critical_.empty()) return;
  const double d = map_.degree();
  cplx w = z;
  double gw = g;
  for (int k = 0; k < 4000 && gw < 64.0; ++k) {
    for (const auto& [c, gc] : escaping_critical_) {
      if (std::abs(gw - gc) < 1e-3 * gc && std::abs(w - c) < 1e-6 * (1.0 + std::abs(c)))
        throw Error(ErrorKind::RayNearCriticalValue, "ray " + angle_.str() + " meets a critical point of G");
    }
    w = map_(w);
    gw *= d;
  }
}

bool RayStepper::advance(double g_to, int depth) {
  const double dlog = std::log(g_ / g_to);
  cplx guess = z_;
  auto z = solve_boettcher(map_, g_to, angle_, offset_, guess, cfg_);
  bool ok = z.has_value();
  if (ok && has_rate_) {
    const double expected = rate_ * dlog;
    ok = std::abs(*z - z_) <= 4.0 * expected + 1e-300;
  }
  if (ok) {
    const double moved = std::abs(*z - z_);
    rate_ = moved / dlog;
    has_rate_ = true;
    z_ = *z;
    g_ = g_to;
    return true;
  }
  if (depth >= cfg_.max_halvings) return false;
  const double mid = std::sqrt(g_ * g_to);
  return advance(mid, depth + 1) && advance(g_to, depth + 1);
}

void RayStepper::step() {
  const double g_to = level_potential(level_ + 1);
  if (!advance(g_to, 0))
    throw Error(ErrorKind::TraceDiverged, "Newton continuation failed for angle " + angle_.str());
  ++level_;
  check_critical(z_, g_);
}

}  // namespace jigsaw::detail
