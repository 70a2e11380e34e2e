#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "jigsaw/cli.hpp"
#include "jigsaw/errors.hpp"

namespace fs = std::filesystem;
using namespace jigsaw;

namespace {

struct Raw {
  std::string c, poly, z, depths, out;
  int depth = -1, width = -1, budget = -1, grid = -1;
  bool json = false, fibonacci = false;
  unsigned seed = 1;
};

void add_common(CLI::App* cmd, Raw& raw) {
  cmd->add_option("--c", raw.c, "quadratic parameter, e.g. -1.75 or 0.25+0.5i");
  cmd->add_option("--poly", raw.poly, "coefficients, highest degree first, comma separated");
  cmd->add_option("--depth", raw.depth, "puzzle depth");
  cmd->add_option("--width", raw.width, "tableau width");
  cmd->add_option("--budget", raw.budget, "escape iteration budget");
  cmd->add_option("--grid", raw.grid, "grid size (render: image size)");
  cmd->add_option("--out", raw.out, "output file (render: PGM image)");
  cmd->add_option("--seed", raw.seed, "sampling seed");
  cmd->add_flag("--json", raw.json, "print the JSON report instead of text");
}

RunConfig to_config(const std::string& mode, const Raw& raw) {
  RunConfig cfg;
  cfg.mode = mode;
  if (!raw.c.empty()) cfg.c = parse_complex(raw.c);
  if (!raw.poly.empty()) cfg.poly = parse_coefficients(raw.poly);
  if (!raw.z.empty()) cfg.z = parse_complex(raw.z);
  if (raw.depth >= 0) cfg.depth = raw.depth;
  if (raw.width >= 0) cfg.width = raw.width;
  if (raw.budget >= 0) cfg.budget = raw.budget;
  if (raw.grid >= 0) cfg.grid = raw.grid;
  if (!raw.depths.empty()) cfg.depths = parse_depths(raw.depths);
  cfg.fibonacci = raw.fibonacci;
  cfg.seed = raw.seed;
  return cfg;
}

// Reports are cached by a hash of the normalized configuration; images are not.
CommandResult cached_run(const RunConfig& cfg) {
  const char* dir = std::getenv("PUZZLE_CACHE_DIR");
  if (!dir || !*dir || cfg.mode == "render") return run_command(cfg);
  const std::string key = config_key(cfg);
  std::ostringstream name;
  name << std::hex << std::hash<std::string>{}(key);
  const fs::path base = fs::path(dir) / name.str();
  {
    std::ifstream k(base.string() + ".key"), j(base.string() + ".json"), t(base.string() + ".txt"),
        e(base.string() + ".code");
    std::string stored;
    if (k && std::getline(k, stored, '\0') && stored == key && j && t && e) {
      CommandResult r;
      std::stringstream js, ts;
      js << j.rdbuf();
      ts << t.rdbuf();
      e >> r.exit_code;
      r.json = js.str();
      r.text = ts.str();
      return r;
    }
  }
  CommandResult r = run_command(cfg);
  if (r.exit_code != 1) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    std::ofstream(base.string() + ".key") << key;
    std::ofstream(base.string() + ".json") << r.json;
    std::ofstream(base.string() + ".txt") << r.text;
    std::ofstream(base.string() + ".code") << r.exit_code;
  }
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Puzzle constructions and local connectivity certificates for polynomial Julia sets"};
  app.require_subcommand(1);
  Raw raw;

  auto* yoccoz = app.add_subcommand("yoccoz", "Yoccoz puzzle, tableau and local connectivity verdict");
  add_common(yoccoz, raw);
  auto* bh = app.add_subcommand("bh", "Branner-Hubbard puzzle for a polynomial with an escaping critical point");
  add_common(bh, raw);
  auto* render = app.add_subcommand("render", "PGM image of the Julia set with puzzle boundaries");
  add_common(render, raw);
  render->add_option("--depths", raw.depths, "depths to draw, e.g. 0,1 or 0..5");
  auto* tableau = app.add_subcommand("tableau", "Print a tableau");
  add_common(tableau, raw);
  tableau->add_option("--z", raw.z, "orbit start point (default 0)");
  tableau->add_flag("--fibonacci", raw.fibonacci, "the Fibonacci tableau from its first-return rule");

  CLI11_PARSE(app, argc, argv);
  const std::string mode = app.get_subcommands().front()->get_name();

  CommandResult r;
  try {
    r = cached_run(to_config(mode, raw));
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  if (mode == "render" && !r.image.empty()) {
    const std::string path = raw.out.empty() ? "julia.pgm" : raw.out;
    std::ofstream(path, std::ios::binary) << r.image;
    std::cerr << "wrote " << path << "\n";
  }
  if (raw.json || mode == "render")
    std::cout << r.json << "\n";
  else if (r.exit_code == 0)
    std::cout << r.text;
  if (r.exit_code != 0 && !raw.json) std::cerr << r.text;
  return r.exit_code;
}
