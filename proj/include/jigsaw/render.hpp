#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jigsaw/bhpuzzle.hpp"
#include "jigsaw/dyncore.hpp"
#include "jigsaw/geometry.hpp"

namespace jigsaw {

// 8-bit grayscale image over a square window of the plane; row 0 is the top.
struct Raster {
  int width = 0, height = 0;
  BBox window;
  std::vector<std::uint8_t> pixels;

  cplx point(int i, int j) const;
  bool pixel_of(cplx z, int& i, int& j) const;
};

// Escape-time shading: points still bounded after `budget` iterations are 0,
// fast escapes are bright.
Raster escape_raster(const PolynomialMap& map, const BBox& window, int size, int budget = 256);
void draw_polyline(Raster& r, const Polyline& line, std::uint8_t value, bool closed = true);
// Outline of a Branner-Hubbard piece's cell mask.
void draw_mask_outline(Raster& r, const CellGrid& grid, std::uint8_t value);
std::string pgm_bytes(const Raster& r);  // binary P5
void write_pgm(const Raster& r, const std::string& path);

// Square window around points of the Julia set found by backward iteration.
BBox julia_window(const PolynomialMap& map, double pad = 0.15);

}  // namespace jigsaw
