#include "jigsaw/cli.hpp"

#include <cmath>
#include <iomanip>
#include <random>
#include <regex>
#include <sstream>

#include "jigsaw/bhpuzzle.hpp"
#include "jigsaw/errors.hpp"
#include "jigsaw/lcert.hpp"
#include "jigsaw/puzzle.hpp"
#include "jigsaw/render.hpp"
#include "json.hpp"

namespace jigsaw {

using nlohmann::json;

cplx parse_complex(const std::string& raw) {
  std::string s;
  for (char ch : raw)
    if (!std::isspace(static_cast<unsigned char>(ch))) s += ch;
  static const std::string num = R"((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)";
  static const std::regex real_only("^([+-]?" + num + ")$");
  static const std::regex imag_only("^([+-]?)(" + num + ")?i$");
  static const std::regex both("^([+-]?" + num + ")([+-])(" + num + ")?i$");
  std::smatch m;
  if (std::regex_match(s, m, real_only)) return {std::stod(m[1]), 0.0};
  if (std::regex_match(s, m, imag_only)) {
    const double v = m[2].matched ? std::stod(m[2]) : 1.0;
    return {0.0, m[1] == "-" ? -v : v};
  }
  if (std::regex_match(s, m, both)) {
    const double v = m[3].matched ? std::stod(m[3]) : 1.0;
    return {std::stod(m[1]), m[2] == "-" ? -v : v};
  }
  throw Error(ErrorKind::BadInput, "cannot parse complex number '" + raw + "'");
}

std::vector<cplx> parse_coefficients(const std::string& text) {
  std::vector<cplx> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_complex(item));
  if (out.size() < 3) throw Error(ErrorKind::BadInput, "a polynomial needs degree at least 2");
  return out;
}

std::vector<int> parse_depths(const std::string& text) {
  std::vector<int> out;
  static const std::regex range(R"(^\s*(\d+)\s*\.\.\s*(\d+)\s*$)");
  std::smatch m;
  if (std::regex_match(text, m, range)) {
    for (int d = std::stoi(m[1]); d <= std::stoi(m[2]); ++d) out.push_back(d);
    return out;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw Error(ErrorKind::BadInput, "cannot parse depth list '" + text + "'");
    }
  }
  return out;
}

namespace {

json cjson(cplx z) { return json::array({z.real(), z.imag()}); }

std::string cstr(cplx z) {
  std::ostringstream os;
  os << std::setprecision(17) << z.real() << (z.imag() < 0 ? "-" : "+") << std::abs(z.imag()) << "i";
  return os.str();
}

json map_json(const PolynomialMap& f) {
  json j;
  j["degree"] = f.degree();
  auto co = json::array();
  for (cplx a : f.coefficients()) co.push_back(cjson(a));
  j["coefficients"] = co;
  return j;
}

// Random backward orbit of a repelling fixed point: points of J.
std::vector<cplx> backward_samples(const PolynomialMap& f, int count, unsigned seed) {
  auto c = f.coefficients();
  c[c.size() - 2] -= 1.0;
  auto fixed = polynomial_roots(c);
  cplx z = *std::max_element(fixed.begin(), fixed.end(), [&](cplx a, cplx b) {
    return std::abs(f.derivative(a)) < std::abs(f.derivative(b));
  });
  std::mt19937 rng(seed);
  std::vector<cplx> out;
  for (int k = 0; k < 20 + count; ++k) {
    auto pc = f.coefficients();
    pc.back() -= z;
    auto pre = polynomial_roots(pc);
    z = pre[rng() % pre.size()];
    if (k >= 20) out.push_back(z);
  }
  return out;
}

bool hypothesis_error(ErrorKind k) {
  switch (k) {
    case ErrorKind::BadInput:
    case ErrorKind::MultipleFixedPoint:
    case ErrorKind::OrbitHitsAlpha:
    case ErrorKind::BadLevel:
    case ErrorKind::CriticalInPiece: return true;
    default: return false;
  }
}

CommandResult gate_failure(const std::string& mode, const std::string& reason, const std::string& detail) {
  CommandResult r;
  r.exit_code = 2;
  r.json = json{{"mode", mode}, {"status", "hypothesis_failed"}, {"reason", reason}, {"detail", detail}}.dump();
  r.text = detail + "\n";
  return r;
}

CommandResult run_yoccoz(const RunConfig& cfg) {
  if (!cfg.c) throw Error(ErrorKind::BadInput, "yoccoz needs --c");
  auto f = PolynomialMap::quadratic(*cfg.c);
  if (cfg.budget) f.set_budget(*cfg.budget);
  const auto fp = fixed_points(f);
  json gate{{"alpha", cjson(fp.alpha)},
            {"alpha_multiplier", cjson(fp.alpha_multiplier)},
            {"beta_multiplier", cjson(fp.beta_multiplier)},
            {"both_repelling", fp.both_repelling}};
  if (!fp.both_repelling) {
    auto r = gate_failure("yoccoz", "NotBothRepelling",
                          "NotBothRepelling: alpha multiplier " + cstr(fp.alpha_multiplier) + ", beta multiplier " + cstr(fp.beta_multiplier));
    auto j = json::parse(r.json);
    j["gate"] = gate;
    r.json = j.dump();
    return r;
  }
  const int depth = cfg.depth.value_or(8);
  const int width = cfg.width.value_or(std::max(20, 2 * depth + 4));
  PuzzleConfig pc;
  pc.max_depth = std::max(pc.max_depth, depth + 1);
  const auto tower = PuzzleTower::build(f, depth + 1, pc);
  const auto samples = backward_samples(f, 3, cfg.seed);
  const Verdict v = analyze(tower, samples, depth, width);

  json j;
  j["mode"] = "yoccoz";
  j["status"] = "ok";
  j["map"] = {{"c", cjson(*cfg.c)}};
  j["depth"] = depth;
  j["width"] = width;
  j["gate"] = gate;
  j["q"] = tower.q();
  auto angles = json::array();
  for (const auto& a : tower.alpha_angles()) angles.push_back(a.str());
  j["alpha_angles"] = angles;
  auto counts = json::array();
  for (int d = 0; d <= tower.max_depth(); ++d) counts.push_back(tower.pieces(d).size());
  j["piece_counts"] = counts;
  j["samples"] = json::array();
  for (cplx z : samples) j["samples"].push_back(cjson(z));
  j["verdict"] = json::parse(v.json());
  CommandResult r;
  r.json = j.dump();
  std::ostringstream os;
  os << "c = " << cstr(*cfg.c) << "  q = " << tower.q() << "  verdict: " << to_string(v.kind);
  if (v.period) os << " (period " << *v.period << ")";
  if (!v.note.empty()) os << "  [" << v.note << "]";
  os << "\n";
  r.text = os.str();
  return r;
}

CommandResult run_bh(const RunConfig& cfg) {
  const auto f = map_from_config(cfg);
  const int depth = cfg.depth.value_or(5);
  BHConfig bc;
  if (cfg.grid) bc.grid = *cfg.grid;
  const auto P = bh_build(f, depth + 1, bc);
  const auto A = area_certificate(P);

  json j;
  j["mode"] = "bh";
  j["status"] = "ok";
  j["map"] = map_json(f);
  j["depth"] = depth;
  j["G0"] = P.G0();
  j["epsilon"] = P.epsilon();
  auto counts = json::array();
  for (int k = 0; k <= P.max_depth(); ++k) counts.push_back(P.pieces(k).size());
  j["piece_counts"] = counts;
  auto escaping = json::array();
  for (const auto& w : P.escaping_critical()) escaping.push_back(cjson(w.point));
  j["escaping_critical"] = escaping;
  int failures = 0;
  double min_slack = std::numeric_limits<double>::infinity();
  for (const auto& m : A.checks) {
    failures += m.holds() ? 0 : 1;
    min_slack = std::min(min_slack, m.slack + m.tolerance);
  }
  j["area"] = {{"area_sums", A.area_sums},
               {"eta", A.eta},
               {"area_bound", A.area_bound},
               {"thin_floor", A.thin_floor},
               {"mcmullen_checks", A.checks.size()},
               {"mcmullen_failures", failures},
               {"mcmullen_min_margin", A.checks.empty() ? 0.0 : min_slack}};
  std::ostringstream os;
  if (P.bounded_critical()) {
    const cplx c0 = *P.bounded_critical();
    j["bounded_critical"] = cjson(c0);
    const int width = cfg.width.value_or(3 * depth);
    const Tableau T = bh_tableau(P, bh_orbit(f, c0, width), depth);
    const auto cls = classify(T);
    j["tableau"] = json::parse(T.json());
    j["classification"] = {{"kind", to_string(cls.kind)}, {"period", cls.period}};
    auto samples = bh_samples(f, 6, cfg.seed);
    auto pre = precritical_points(f, c0, 1);
    samples.insert(samples.end(), pre.begin(), pre.end());
    samples.push_back(c0);
    const auto R = classify_components(P, T, samples, depth);
    j["components"] = json::parse(R.json());
    os << "bounded critical point " << cstr(c0) << ": tableau " << to_string(cls.kind);
    if (cls.kind == TableauClass::Periodic) {
      os << " (p = " << cls.period << ")";
      try {
        const auto L = polylike_extract(P, T, cls.period);
        j["polylike"] = {{"period", L.period},       {"depth", L.depth},
                         {"degree", L.degree},       {"critical_count", L.critical_count},
                         {"chain_degree", L.chain_degree}, {"orbit_contained", L.orbit_contained},
                         {"connected", L.connected}};
        os << ", polynomial-like of degree " << L.degree << " at depth " << L.depth;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::ContainmentFails) throw;
        j["polylike"] = {{"error", e.what()}};
      }
      os << "; critical component non-trivial\n";
    } else {
      os << "; J totally disconnected\n";
    }
  } else {
    const auto C = bernoulli_coding(P, depth + 1);
    std::vector<bool> inj(C.injective.begin(), C.injective.end());
    j["coding"] = {{"alphabet_depth", C.alphabet_depth},
                   {"counts", C.counts},
                   {"injective", inj},
                   {"max_diameter", C.max_diameter}};
    j["components"] = {{"periodic", false}, {"totally_disconnected", true}, {"critical_component_nontrivial", false},
                       {"samples", json::array()}};
    os << "all critical orbits escape: Cantor set, coding alphabet at depth " << C.alphabet_depth << "\n";
  }
  CommandResult r;
  r.json = j.dump();
  r.text = os.str();
  return r;
}

CommandResult run_render(const RunConfig& cfg) {
  const auto f = map_from_config(cfg);
  const int size = cfg.grid.value_or(512);
  const int top = cfg.depths.empty() ? -1 : *std::max_element(cfg.depths.begin(), cfg.depths.end());
  // Room for the depth-0 equipotential when boundaries are drawn.
  const BBox window = julia_window(f, top >= 0 ? 0.6 : 0.15);
  Raster img = escape_raster(f, window, size, cfg.budget.value_or(256));
  json j;
  j["mode"] = "render";
  j["status"] = "ok";
  j["map"] = map_json(f);
  j["size"] = size;
  j["window"] = {window.xmin, window.xmax, window.ymin, window.ymax};
  auto layers = json::array();
  if (top >= 0) {
    if (cfg.c) {
      const auto tower = PuzzleTower::build(f, top);
      for (int d : cfg.depths) {
        json layer{{"depth", d}};
        auto areas = json::array();
        double biggest = 0.0;
        int crit_id = tower.critical_piece(d), biggest_id = -1;
        for (const auto& p : tower.pieces(d)) {
          const double a = polygon_area(tower.boundary(d, p.id));
          areas.push_back(a);
          if (a > biggest) {
            biggest = a;
            biggest_id = p.id;
          }
          draw_polyline(img, tower.boundary(d, p.id), static_cast<std::uint8_t>(96 + 24 * (d % 4)));
        }
        layer["areas"] = areas;
        layer["critical_piece"] = crit_id;
        layer["critical_is_largest"] = crit_id == biggest_id;
        layers.push_back(layer);
      }
    } else {
      const auto P = bh_build(f, top);
      for (int d : cfg.depths) {
        json layer{{"depth", d}};
        auto areas = json::array();
        for (const auto& p : P.pieces(d)) {
          areas.push_back(p.area);
          draw_mask_outline(img, p.grid, static_cast<std::uint8_t>(96 + 24 * (d % 4)));
        }
        layer["areas"] = areas;
        layers.push_back(layer);
      }
    }
  }
  j["layers"] = layers;
  long bounded = 0;
  for (auto v : img.pixels) bounded += v == 0 ? 1 : 0;
  j["bounded_pixels"] = bounded;
  CommandResult r;
  r.image = pgm_bytes(img);
  r.json = j.dump();
  r.text = "rendered " + std::to_string(size) + "x" + std::to_string(size) + "\n";
  return r;
}

CommandResult run_tableau(const RunConfig& cfg) {
  CommandResult r;
  json j;
  j["mode"] = "tableau";
  j["status"] = "ok";
  Tableau T;
  if (cfg.fibonacci) {
    T = fibonacci_tableau(cfg.depth.value_or(18), cfg.width.value_or(56));
    j["source"] = "fibonacci";
  } else {
    if (!cfg.c) throw Error(ErrorKind::BadInput, "tableau needs --c or --fibonacci");
    const auto f = PolynomialMap::quadratic(*cfg.c);
    const int depth = cfg.depth.value_or(10);
    const int width = cfg.width.value_or(12);
    const cplx z = cfg.z.value_or(0.0);
    PuzzleConfig pc;
    pc.max_depth = std::max(pc.max_depth, depth + 1);
    const auto tower = PuzzleTower::build(f, depth + 1, pc);
    T = tableau_from_orbit(tower, z, width, depth);
    j["source"] = "orbit";
    j["map"] = {{"c", cjson(*cfg.c)}};
    j["z"] = cjson(z);
  }
  j["tableau"] = json::parse(T.json());
  r.json = j.dump();
  r.text = T.ascii();
  return r;
}

}  // namespace

PolynomialMap map_from_config(const RunConfig& cfg) {
  PolynomialMap f = cfg.poly.empty() ? PolynomialMap::quadratic(cfg.c.value_or(0.0))
                                     : PolynomialMap::from_coefficients(cfg.poly);
  if (cfg.poly.empty() && !cfg.c) throw Error(ErrorKind::BadInput, "give --c or --poly");
  if (cfg.budget) f.set_budget(*cfg.budget);
  return f;
}

CommandResult run_command(const RunConfig& cfg) {
  try {
    if (cfg.mode == "yoccoz") return run_yoccoz(cfg);
    if (cfg.mode == "bh") return run_bh(cfg);
    if (cfg.mode == "render") return run_render(cfg);
    if (cfg.mode == "tableau") return run_tableau(cfg);
    throw Error(ErrorKind::BadInput, "unknown mode '" + cfg.mode + "'");
  } catch (const Error& e) {
    if (hypothesis_error(e.kind())) {
      std::string detail = e.what();
      if (e.detail() >= 0) detail += " (at " + std::to_string(e.detail()) + ")";
      auto r = gate_failure(cfg.mode, to_string(e.kind()), detail);
      if (e.detail() >= 0) {
        auto j = json::parse(r.json);
        j["at"] = e.detail();  // column for OrbitHitsAlpha, depth or period otherwise
        r.json = j.dump();
      }
      return r;
    }
    CommandResult r;
    r.exit_code = 1;
    r.json = json{{"mode", cfg.mode}, {"status", "error"}, {"reason", to_string(e.kind())}, {"detail", e.what()}}.dump();
    r.text = std::string(e.what()) + "\n";
    return r;
  }
}

std::string config_key(const RunConfig& cfg) {
  std::ostringstream os;
  os << std::setprecision(17) << cfg.mode;
  if (cfg.c) os << "|c=" << cstr(*cfg.c);
  os << "|poly=";
  for (cplx a : cfg.poly) os << cstr(a) << ",";
  if (cfg.z) os << "|z=" << cstr(*cfg.z);
  if (cfg.depth) os << "|depth=" << *cfg.depth;
  if (cfg.width) os << "|width=" << *cfg.width;
  if (cfg.budget) os << "|budget=" << *cfg.budget;
  if (cfg.grid) os << "|grid=" << *cfg.grid;
  os << "|depths=";
  for (int d : cfg.depths) os << d << ",";
  os << "|fib=" << cfg.fibonacci << "|seed=" << cfg.seed;
  return os.str();
}

}  // namespace jigsaw
