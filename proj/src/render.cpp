#include "jigsaw/render.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "jigsaw/errors.hpp"

namespace jigsaw {

cplx Raster::point(int i, int j) const {
  const double x = window.xmin + (i + 0.5) * window.width() / width;
  const double y = window.ymax - (j + 0.5) * window.height() / height;
  return {x, y};
}

bool Raster::pixel_of(cplx z, int& i, int& j) const {
  i = static_cast<int>(std::floor((z.real() - window.xmin) / window.width() * width));
  j = static_cast<int>(std::floor((window.ymax - z.imag()) / window.height() * height));
  return i >= 0 && j >= 0 && i < width && j < height;
}

Raster escape_raster(const PolynomialMap& map, const BBox& window, int size, int budget) {
  if (size < 1) throw Error(ErrorKind::BadInput, "raster size must be positive");
  Raster r;
  r.width = r.height = size;
  r.window = window;
  r.pixels.assign(static_cast<std::size_t>(size) * size, 0);
  const double R = std::max(map.escape_radius(), 2.0);
  for (int j = 0; j < size; ++j)
    for (int i = 0; i < size; ++i) {
      cplx z = r.point(i, j);
      int n = 0;
      while (n < budget && std::norm(z) <= R * R) {
        z = map(z);
        ++n;
      }
      if (n < budget) r.pixels[static_cast<std::size_t>(j) * size + i] = static_cast<std::uint8_t>(255 - std::min(n * 12, 200));
    }
  return r;
}

void draw_polyline(Raster& r, const Polyline& line, std::uint8_t value, bool closed) {
  const std::size_t n = line.size();
  if (n == 0) return;
  const double px = r.window.width() / r.width;
  for (std::size_t k = 0; k + (closed ? 0 : 1) < n; ++k) {
    const cplx a = line[k], b = line[(k + 1) % n];
    const int steps = std::max(1, static_cast<int>(std::ceil(2 * std::abs(b - a) / px)));
    for (int s = 0; s <= steps; ++s) {
      int i, j;
      if (r.pixel_of(a + (b - a) * (static_cast<double>(s) / steps), i, j))
        r.pixels[static_cast<std::size_t>(j) * r.width + i] = value;
    }
  }
}

void draw_mask_outline(Raster& r, const CellGrid& g, std::uint8_t value) {
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      if (!g.mask[static_cast<std::size_t>(j) * g.nx + i]) continue;
      bool edge = i == 0 || j == 0 || i + 1 == g.nx || j + 1 == g.ny;
      if (!edge)
        edge = !g.mask[j * g.nx + i - 1] || !g.mask[j * g.nx + i + 1] || !g.mask[(j - 1) * g.nx + i] ||
               !g.mask[(j + 1) * g.nx + i];
      int pi, pj;
      if (edge && r.pixel_of(g.center(i, j), pi, pj)) r.pixels[static_cast<std::size_t>(pj) * r.width + pi] = value;
    }
}

std::string pgm_bytes(const Raster& r) {
  std::string out = "P5\n" + std::to_string(r.width) + " " + std::to_string(r.height) + "\n255\n";
  out.append(r.pixels.begin(), r.pixels.end());
  return out;
}

void write_pgm(const Raster& r, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::BadInput, "cannot open " + path);
  const std::string bytes = pgm_bytes(r);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

BBox julia_window(const PolynomialMap& map, double pad) {
  auto c = map.coefficients();
  c[c.size() - 2] -= 1.0;
  auto fixed = polynomial_roots(c);
  // Start from the most repelling fixed point: it lies on J.
  cplx z = *std::max_element(fixed.begin(), fixed.end(), [&](cplx a, cplx b) {
    return std::abs(map.derivative(a)) < std::abs(map.derivative(b));
  });
  std::mt19937 rng(1);
  BBox box{z.real(), z.real(), z.imag(), z.imag()};
  for (int k = 0; k < 4000; ++k) {
    auto pc = map.coefficients();
    pc.back() -= z;
    auto pre = polynomial_roots(pc);
    z = pre[rng() % pre.size()];
    box.xmin = std::min(box.xmin, z.real());
    box.xmax = std::max(box.xmax, z.real());
    box.ymin = std::min(box.ymin, z.imag());
    box.ymax = std::max(box.ymax, z.imag());
  }
  const double cx = 0.5 * (box.xmin + box.xmax), cy = 0.5 * (box.ymin + box.ymax);
  const double h = 0.5 * std::max(box.width(), box.height()) * (1 + 2 * pad) + 1e-9;
  return {cx - h, cx + h, cy - h, cy + h};
}

}  // namespace jigsaw
