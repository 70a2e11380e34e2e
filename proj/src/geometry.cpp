#include "jigsaw/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace jigsaw {

BBox bounding_box(const Polyline& pts) {
  BBox b;
  b.xmin = b.ymin = std::numeric_limits<double>::infinity();
  b.xmax = b.ymax = -std::numeric_limits<double>::infinity();
  for (cplx p : pts) {
    b.xmin = std::min(b.xmin, p.real());
    b.xmax = std::max(b.xmax, p.real());
    b.ymin = std::min(b.ymin, p.imag());
    b.ymax = std::max(b.ymax, p.imag());
  }
  return b;
}

bool point_in_polygon(const Polyline& poly, cplx z) {
  bool inside = false;
  const std::size_t n = poly.size();
  const double x = z.real(), y = z.imag();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const double yi = poly[i].imag(), yj = poly[j].imag();
    if ((yi > y) != (yj > y)) {
      const double xc = poly[j].real() + (y - yj) * (poly[i].real() - poly[j].real()) / (yi - yj);
      if (x < xc) inside = !inside;
    }
  }
  return inside;
}

namespace {
double segment_distance(cplx a, cplx b, cplx p) {
  const cplx ab = b - a;
  const double len2 = std::norm(ab);
  if (len2 == 0.0) return std::abs(p - a);
  double t = ((p - a) * std::conj(ab)).real() / len2;
  t = std::clamp(t, 0.0, 1.0);
  return std::abs(p - (a + t * ab));
}
}  // namespace

double distance_to_polyline(const Polyline& poly, cplx z, bool closed) {
  double best = std::numeric_limits<double>::infinity();
  if (poly.empty()) return best;
  if (poly.size() == 1) return std::abs(poly[0] - z);
  for (std::size_t i = 0; i + 1 < poly.size(); ++i) best = std::min(best, segment_distance(poly[i], poly[i + 1], z));
  if (closed) best = std::min(best, segment_distance(poly.back(), poly.front(), z));
  return best;
}

double polygon_area(const Polyline& poly) {
  double s = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++)
    s += poly[j].real() * poly[i].imag() - poly[i].real() * poly[j].imag();
  return std::abs(s) / 2.0;
}

double diameter(const Polyline& pts) {
  if (pts.size() < 2) return 0.0;
  // Convex hull (monotone chain) then all pairs on the hull.
  std::vector<cplx> p = pts;
  std::sort(p.begin(), p.end(), [](cplx a, cplx b) {
    return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag());
  });
  auto cross = [](cplx o, cplx a, cplx b) {
    return (a.real() - o.real()) * (b.imag() - o.imag()) - (a.imag() - o.imag()) * (b.real() - o.real());
  };
  std::vector<cplx> hull(2 * p.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p[i]) <= 0) --k;
    hull[k++] = p[i];
  }
  for (std::size_t i = p.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], p[i]) <= 0) --k;
    hull[k++] = p[i];
  }
  hull.resize(k > 1 ? k - 1 : k);
  double best = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i)
    for (std::size_t j = i + 1; j < hull.size(); ++j) best = std::max(best, std::abs(hull[i] - hull[j]));
  return best;
}

Polyline clean_polyline(const Polyline& pts, double tol) {
  Polyline out;
  out.reserve(pts.size());
  for (cplx p : pts)
    if (out.empty() || std::abs(p - out.back()) > tol) out.push_back(p);
  while (out.size() > 1 && std::abs(out.front() - out.back()) <= tol) out.pop_back();
  return out;
}

bool has_self_intersection(const Polyline& poly) {
  const std::size_t n = poly.size();
  if (n < 4) return false;
  struct Seg {
    double xmin, xmax;
    std::size_t i;
  };
  std::vector<Seg> segs;
  for (std::size_t i = 0; i < n; ++i) {
    cplx a = poly[i], b = poly[(i + 1) % n];
    segs.push_back({std::min(a.real(), b.real()), std::max(a.real(), b.real()), i});
  }
  std::sort(segs.begin(), segs.end(), [](const Seg& a, const Seg& b) { return a.xmin < b.xmin; });
  auto orient = [](cplx a, cplx b, cplx c) {
    double v = (b.real() - a.real()) * (c.imag() - a.imag()) - (b.imag() - a.imag()) * (c.real() - a.real());
    return (v > 0) - (v < 0);
  };
  for (std::size_t s = 0; s < segs.size(); ++s) {
    for (std::size_t t = s + 1; t < segs.size() && segs[t].xmin <= segs[s].xmax; ++t) {
      std::size_t i = segs[s].i, j = segs[t].i;
      if (i == j || (i + 1) % n == j || (j + 1) % n == i) continue;
      cplx a = poly[i], b = poly[(i + 1) % n], c = poly[j], d = poly[(j + 1) % n];
      if (std::max(a.imag(), b.imag()) < std::min(c.imag(), d.imag()) ||
          std::max(c.imag(), d.imag()) < std::min(a.imag(), b.imag()))
        continue;
      int o1 = orient(a, b, c), o2 = orient(a, b, d), o3 = orient(c, d, a), o4 = orient(c, d, b);
      if (o1 * o2 < 0 && o3 * o4 < 0) return true;
    }
  }
  return false;
}

}  // namespace jigsaw
