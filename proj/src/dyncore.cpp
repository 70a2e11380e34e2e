#include "jigsaw/dyncore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "jigsaw/errors.hpp"
#include "ray_stepper.hpp"

namespace jigsaw {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

cplx horner(const std::vector<cplx>& a, cplx z) {
  cplx v = a[0];
  for (std::size_t i = 1; i < a.size(); ++i) v = v * z + a[i];
  return v;
}

std::vector<cplx> derivative_coeffs(const std::vector<cplx>& a) {
  const int d = static_cast<int>(a.size()) - 1;
  std::vector<cplx> out;
  for (int i = 0; i < d; ++i) out.push_back(a[i] * static_cast<double>(d - i));
  return out;
}

}  // namespace

std::vector<cplx> polynomial_roots(const std::vector<cplx>& highest_first) {
  std::vector<cplx> a = highest_first;
  while (a.size() > 1 && std::abs(a[0]) == 0.0) a.erase(a.begin());
  const int n = static_cast<int>(a.size()) - 1;
  if (n < 1) return {};
  for (auto& v : a) v /= highest_first[highest_first.size() - 1 - n];
  const cplx lead = a[0];
  for (auto& v : a) v /= lead;
  if (n == 1) return {-a[1]};
  const std::vector<cplx> da = derivative_coeffs(a);

  // Cauchy bound for the initial circle.
  double bound = 0.0;
  for (int i = 1; i <= n; ++i) bound = std::max(bound, std::abs(a[i]));
  const double radius = 1.0 + bound;
  std::vector<cplx> z(n);
  for (int k = 0; k < n; ++k)
    z[k] = std::polar(radius * 0.5 + 0.1, kTwoPi * k / n + 0.4);

  for (int iter = 0; iter < 500; ++iter) {
    double worst = 0.0;
    for (int k = 0; k < n; ++k) {
      cplx p = horner(a, z[k]);
      cplx dp = horner(da, z[k]);
      if (p == cplx(0.0)) continue;
      cplx ratio = p / dp;
      cplx sum = 0.0;
      for (int j = 0; j < n; ++j)
        if (j != k) sum += 1.0 / (z[k] - z[j]);
      cplx step = ratio / (1.0 - ratio * sum);
      z[k] -= step;
      worst = std::max(worst, std::abs(step) / (1.0 + std::abs(z[k])));
    }
    if (worst < 1e-15) break;
  }
  // Newton polish for simple roots; clustered roots keep the Aberth values.
  for (auto& r : z) {
    for (int it = 0; it < 3; ++it) {
      cplx dp = horner(da, r);
      if (std::abs(dp) < 1e-10) break;
      cplx step = horner(a, r) / dp;
      if (std::abs(step) > 1e-6 * (1.0 + std::abs(r))) break;
      r -= step;
    }
  }
  std::sort(z.begin(), z.end(), [](cplx x, cplx y) {
    if (x.real() != y.real()) return x.real() < y.real();
    return x.imag() < y.imag();
  });
  return z;
}

PolynomialMap PolynomialMap::from_coefficients(std::vector<cplx> highest_first) {
  while (!highest_first.empty() && std::abs(highest_first.front()) == 0.0)
    highest_first.erase(highest_first.begin());
  if (highest_first.size() < 3)
    throw Error(ErrorKind::BadInput, "polynomial degree must be at least 2");
  PolynomialMap m;
  m.coeffs_ = std::move(highest_first);
  const int d = m.degree();

  double max_abs = 0.0, lower_sum = 0.0;
  for (int i = 0; i <= d; ++i) {
    max_abs = std::max(max_abs, std::abs(m.coeffs_[i]));
    if (i > 0) lower_sum += std::abs(m.coeffs_[i]);
  }
  const double lead = std::abs(m.coeffs_[0]);
  m.escape_radius_ = std::max({4.0, 2.0 * max_abs, (lower_sum + 2.0) / lead});

  // Critical points with multiplicity: cluster nearly equal roots of f'.
  std::vector<cplx> roots = polynomial_roots(derivative_coeffs(m.coeffs_));
  std::vector<bool> used(roots.size(), false);
  for (std::size_t i = 0; i < roots.size(); ++i) {
    if (used[i]) continue;
    cplx sum = roots[i];
    int mult = 1;
    used[i] = true;
    for (std::size_t j = i + 1; j < roots.size(); ++j) {
      if (!used[j] && std::abs(roots[j] - roots[i]) < 1e-5 * (1.0 + std::abs(roots[i]))) {
        used[j] = true;
        sum += roots[j];
        ++mult;
      }
    }
    cplx p = sum / static_cast<double>(mult);
    if (std::abs(p.real()) < 1e-14) p.real(0.0);
    if (std::abs(p.imag()) < 1e-14) p.imag(0.0);
    m.critical_.push_back({p, mult});
  }
  return m;
}

PolynomialMap PolynomialMap::quadratic(cplx c) {
  return from_coefficients({1.0, 0.0, c});
}

bool PolynomialMap::is_monic() const { return coeffs_.front() == cplx(1.0); }

bool PolynomialMap::is_unicritical_quadratic() const {
  return degree() == 2 && is_monic() && coeffs_[1] == cplx(0.0);
}

cplx PolynomialMap::operator()(cplx z) const { return horner(coeffs_, z); }

cplx PolynomialMap::derivative(cplx z) const {
  cplx d;
  eval(z, d);
  return d;
}

cplx PolynomialMap::eval(cplx z, cplx& deriv) const {
  cplx v = coeffs_[0];
  cplx dv = 0.0;
  for (std::size_t i = 1; i < coeffs_.size(); ++i) {
    dv = dv * z + v;
    v = v * z + coeffs_[i];
  }
  deriv = dv;
  return v;
}

double PolynomialMap::leading_log_shift() const {
  return std::log(std::abs(coeffs_.front())) / (degree() - 1);
}

FixedPointPair fixed_points(const PolynomialMap& map) {
  if (map.degree() != 2) throw Error(ErrorKind::BadInput, "fixed_points expects a quadratic");
  const auto& a = map.coefficients();
  // a0 z^2 + (a1 - 1) z + a2 = 0
  std::vector<cplx> roots = polynomial_roots({a[0], a[1] - 1.0, a[2]});
  if (roots.size() != 2) throw Error(ErrorKind::BadInput, "degenerate fixed point equation");
  // Closed form for better accuracy, then pick the Aberth ordering.
  const cplx disc = std::sqrt((a[1] - 1.0) * (a[1] - 1.0) - 4.0 * a[0] * a[2]);
  cplx r1 = (-(a[1] - 1.0) + disc) / (2.0 * a[0]);
  cplx r2 = (-(a[1] - 1.0) - disc) / (2.0 * a[0]);
  for (cplx* r : {&r1, &r2}) {
    for (int it = 0; it < 3; ++it) {
      cplx d;
      cplx v = map.eval(*r, d) - *r;
      if (std::abs(d - 1.0) < 1e-300) break;
      *r -= v / (d - 1.0);
    }
  }
  if (std::abs(r1 - r2) < 1e-10) throw Error(ErrorKind::MultipleFixedPoint, "fixed points coincide");

  // beta is the landing point of the 0-ray.
  cplx beta = r1, alpha = r2;
  bool decided = false;
  if (map.is_monic()) {
    try {
      RayConfig cfg;
      RayTrace ray = trace_ray(map, Angle(0, 1), 1e-6, cfg, false);
      cplx end = ray.polyline.back();
      if (std::abs(end - r2) < std::abs(end - r1)) std::swap(beta, alpha);
      decided = true;
    } catch (const Error&) {
    }
  }
  if (!decided && std::abs(r2) > std::abs(r1)) std::swap(beta, alpha);
  FixedPointPair out;
  out.alpha = alpha;
  out.beta = beta;
  out.alpha_multiplier = map.derivative(alpha);
  out.beta_multiplier = map.derivative(beta);
  out.both_repelling = std::abs(out.alpha_multiplier) > 1.0 && std::abs(out.beta_multiplier) > 1.0;
  return out;
}

double green(const PolynomialMap& map, cplx z) {
  const double big = std::max(1e20, map.escape_radius());
  const double d = map.degree();
  double scale = 1.0;
  for (int n = 0; n <= map.budget(); ++n) {
    const double r = std::abs(z);
    if (r > big) return std::max(0.0, (std::log(r) + map.leading_log_shift()) * scale);
    z = map(z);
    scale /= d;
  }
  return 0.0;
}

std::optional<cplx> boettcher_point(const PolynomialMap& map, double g, const Angle& base,
                                    double offset, cplx guess, const RayConfig& cfg) {
  return detail::solve_boettcher(map, g, base, offset, guess, cfg);
}

RayTrace trace_ray(const PolynomialMap& map, const Angle& angle, double G_stop,
                   const RayConfig& cfg, bool detect_landing) {
  if (!(G_stop > 0.0)) throw Error(ErrorKind::BadInput, "G_stop must be positive");
  detail::RayStepper stepper(map, angle, cfg);
  RayTrace out;
  out.angle = angle;
  out.polyline.push_back(stepper.z());
  out.potentials.push_back(stepper.g());
  while (stepper.next_g() >= G_stop * (1.0 - 1e-12)) {
    stepper.step();
    out.polyline.push_back(stepper.z());
    out.potentials.push_back(stepper.g());
  }
  if (!detect_landing) return out;

  std::vector<cplx> tail(out.polyline.end() - std::min<std::size_t>(out.polyline.size(), cfg.landing_points),
                         out.polyline.end());
  auto converged = [&]() {
    if (static_cast<int>(tail.size()) < cfg.landing_points) return false;
    double diam = 0.0;
    for (std::size_t i = 0; i < tail.size(); ++i)
      for (std::size_t j = i + 1; j < tail.size(); ++j) diam = std::max(diam, std::abs(tail[i] - tail[j]));
    return diam < cfg.landing_diameter;
  };
  while (!converged() && stepper.next_g() > cfg.potential_floor) {
    stepper.step();
    tail.push_back(stepper.z());
    if (static_cast<int>(tail.size()) > cfg.landing_points) tail.erase(tail.begin());
  }
  if (!converged()) return out;

  cplx end = tail.back();
  // Refine onto the (pre)periodic landing point when the angle allows it.
  const int d = map.degree();
  const int pre = angle.preperiod(d);
  const int per = angle.period(d);
  if (pre >= 0 && per > 0 && pre + per < 200) {
    std::vector<cplx> orbit{end};
    for (int i = 0; i < pre; ++i) orbit.push_back(map(orbit.back()));
    cplx w = orbit.back();
    bool ok = true;
    for (int it = 0; it < 50; ++it) {
      cplx v = w, dv = 1.0;
      for (int k = 0; k < per; ++k) {
        cplx fd;
        v = map.eval(v, fd);
        dv *= fd;
      }
      cplx step = (v - w) / (dv - 1.0);
      w -= step;
      if (!std::isfinite(std::abs(w))) {
        ok = false;
        break;
      }
      if (std::abs(step) < 1e-15 * (1.0 + std::abs(w))) break;
    }
    if (ok && std::abs(w - orbit.back()) < cfg.landing_tolerance) {
      // Pull back along the recorded preimages using the branch nearest each.
      for (int i = pre - 1; i >= 0; --i) {
        std::vector<cplx> pre_roots;
        std::vector<cplx> eq = map.coefficients();
        eq.back() -= w;
        pre_roots = polynomial_roots(eq);
        cplx best = pre_roots.front();
        for (cplx r : pre_roots)
          if (std::abs(r - orbit[i]) < std::abs(best - orbit[i])) best = r;
        w = best;
      }
      if (std::abs(w - end) < cfg.landing_tolerance) end = w;
    }
  }
  out.landed = true;
  out.landing_point = end;
  return out;
}

AlphaCycle alpha_ray_cycle(const PolynomialMap& map, int max_period, const RayConfig& cfg) {
  if (!map.is_unicritical_quadratic())
    throw Error(ErrorKind::BadInput, "alpha_ray_cycle expects z^2 + c");
  const FixedPointPair fp = fixed_points(map);
  if (std::abs(fp.alpha_multiplier) <= 1.0)
    throw Error(ErrorKind::BadInput, "alpha is not repelling");
  const cplx alpha = fp.alpha;

  for (int q = 2; q <= max_period; ++q) {
    const std::uint64_t den = (std::uint64_t{1} << q) - 1;
    for (std::uint64_t k = 1; k + 1 < den + 1; ++k) {
      // Orbit under doubling is bit rotation; keep k only if it is the orbit minimum.
      std::vector<std::uint64_t> orbit{k};
      bool minimal = true;
      std::uint64_t m = k;
      for (int i = 1; i < q; ++i) {
        m = (m * 2) % den;
        if (m < k) {
          minimal = false;
          break;
        }
        if (m == k) break;
        orbit.push_back(m);
      }
      if (!minimal || static_cast<int>(orbit.size()) != q || (m * 2) % den != k) continue;
      std::vector<std::uint64_t> sorted = orbit;
      std::sort(sorted.begin(), sorted.end());
      auto index_of = [&](std::uint64_t v) {
        return static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), v) - sorted.begin());
      };
      const int shift = index_of((sorted[0] * 2) % den);
      bool rotation = true;
      for (int i = 0; i < q && rotation; ++i)
        rotation = index_of((sorted[i] * 2) % den) == (i + shift) % q;
      if (!rotation) continue;

      // Geometric landing test for every ray of the candidate cycle.
      bool lands = true;
      for (std::uint64_t num : sorted) {
        detail::RayStepper st(map, Angle(num, den), cfg);
        std::vector<cplx> tail;
        bool reached = false;
        while (st.next_g() > cfg.potential_floor) {
          st.step();
          if (std::abs(st.z() - alpha) < 0.1 * cfg.landing_tolerance) {
            reached = true;
            break;
          }
          tail.push_back(st.z());
          if (static_cast<int>(tail.size()) > cfg.landing_points) tail.erase(tail.begin());
          if (static_cast<int>(tail.size()) == cfg.landing_points) {
            double diam = 0.0;
            for (cplx p : tail) diam = std::max(diam, std::abs(p - tail.front()));
            if (diam < cfg.landing_diameter) break;
          }
        }
        if (!reached) {
          lands = false;
          break;
        }
      }
      if (!lands) continue;
      AlphaCycle out;
      out.q = q;
      out.alpha = alpha;
      for (std::uint64_t num : sorted) out.angles.emplace_back(num, den);
      return out;
    }
  }
  throw Error(ErrorKind::CycleNotFound, "no ray cycle lands at alpha", max_period);
}

CriticalOrbit critical_orbit(const PolynomialMap& map, int n, cplx start) {
  CriticalOrbit out;
  cplx z = start;
  out.points.push_back(z);
  for (int i = 0; i < n; ++i) {
    if (std::abs(z) > map.escape_radius()) {
      out.escaped = true;
      out.escape_index = i;
      break;
    }
    z = map(z);
    out.points.push_back(z);
  }
  if (!out.escaped && std::abs(z) > map.escape_radius()) {
    out.escaped = true;
    out.escape_index = n;
  }
  return out;
}

CriticalOrbit critical_orbit(const PolynomialMap& map, int n) {
  // Designated critical point: the first whose orbit stays bounded, else the first.
  const auto& crit = map.critical_points();
  for (const auto& c : crit) {
    CriticalOrbit o = critical_orbit(map, std::max(n, 64), c.point);
    if (!o.escaped) return critical_orbit(map, n, c.point);
  }
  return critical_orbit(map, n, crit.front().point);
}

}  // namespace jigsaw
