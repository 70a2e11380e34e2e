#pragma once

#include <complex>
#include <vector>

namespace jigsaw {

using cplx = std::complex<double>;
using Polyline = std::vector<cplx>;

struct BBox {
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  bool contains(cplx z) const {
    return z.real() >= xmin && z.real() <= xmax && z.imag() >= ymin && z.imag() <= ymax;
  }
};

BBox bounding_box(const Polyline& pts);
// Crossing-number test; the polygon is implicitly closed.
bool point_in_polygon(const Polyline& poly, cplx z);
double distance_to_polyline(const Polyline& poly, cplx z, bool closed = true);
double polygon_area(const Polyline& poly);  // absolute shoelace area
double diameter(const Polyline& pts);
// Drops consecutive duplicates (within tol) and a closing duplicate.
Polyline clean_polyline(const Polyline& pts, double tol = 0.0);
// True when two non-adjacent segments cross (brute force on a sorted sweep).
bool has_self_intersection(const Polyline& poly);

}  // namespace jigsaw
