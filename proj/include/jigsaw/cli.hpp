#pragma once

#include <optional>
#include <string>
#include <vector>

#include "jigsaw/dyncore.hpp"

namespace jigsaw {

// `a+bi` with optional exponents: "i", "-1.75", "-1.10692+.63601i", "2e-3-1i".
cplx parse_complex(const std::string& text);
// Comma-separated coefficients, highest degree first.
std::vector<cplx> parse_coefficients(const std::string& text);
// "0,1,3" or "0..5".
std::vector<int> parse_depths(const std::string& text);

struct RunConfig {
  std::string mode;  // yoccoz, bh, render, tableau
  std::optional<cplx> c;
  std::vector<cplx> poly;
  std::optional<cplx> z;
  std::optional<int> depth;
  std::optional<int> width;
  std::optional<int> budget;
  std::optional<int> grid;
  std::vector<int> depths;
  bool fibonacci = false;
  unsigned seed = 1;
};

struct CommandResult {
  int exit_code = 0;  // 0 verdict produced, 1 numeric failure, 2 hypothesis gate failed
  std::string json;   // report
  std::string text;   // human-readable summary
  std::string image;  // PGM bytes (render)
};

PolynomialMap map_from_config(const RunConfig& cfg);
CommandResult run_command(const RunConfig& cfg);
// Canonical text of the config, used as a cache key.
std::string config_key(const RunConfig& cfg);

}  // namespace jigsaw
