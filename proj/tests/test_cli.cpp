#include "doctest.h"
#include "jigsaw/cli.hpp"
#include "jigsaw/errors.hpp"
#include "json.hpp"

using namespace jigsaw;
using nlohmann::json;

TEST_CASE("complex parsing") {
  CHECK(parse_complex("i") == cplx(0, 1));
  CHECK(parse_complex("-i") == cplx(0, -1));
  CHECK(parse_complex("+2.5i") == cplx(0, 2.5));
  CHECK(parse_complex("-1.75") == cplx(-1.75, 0));
  CHECK(parse_complex("0.0") == cplx(0, 0));
  CHECK(parse_complex("-1.10692+0.63601i") == cplx(-1.10692, 0.63601));
  CHECK(parse_complex("1e-3-2E2i") == cplx(1e-3, -200));
  CHECK(parse_complex(" .5 - i ") == cplx(0.5, -1));
  CHECK(parse_complex("3+i") == cplx(3, 1));
  for (const char* bad : {"", "abc", "1+2", "i1", "1+2j", "--1", "1.2.3"})
    CHECK_THROWS_AS(parse_complex(bad), Error);
}

TEST_CASE("coefficient and depth lists") {
  const auto co = parse_coefficients("1,-1.10692+0.63601i,0,1");
  REQUIRE(co.size() == 4);
  CHECK(co[1] == cplx(-1.10692, 0.63601));
  CHECK_THROWS_AS(parse_coefficients("1,2"), Error);
  CHECK(parse_depths("0,1") == std::vector<int>{0, 1});
  CHECK(parse_depths("0..5") == std::vector<int>{0, 1, 2, 3, 4, 5});
  CHECK(parse_depths("3") == std::vector<int>{3});
  CHECK_THROWS_AS(parse_depths("a,b"), Error);
}

TEST_CASE("config key normalizes equivalent spellings") {
  RunConfig a, b;
  a.mode = b.mode = "yoccoz";
  a.c = parse_complex("0+1i");
  b.c = parse_complex("i");
  a.depth = b.depth = 8;
  CHECK(config_key(a) == config_key(b));
  b.seed = 2;
  CHECK(config_key(a) != config_key(b));
}

TEST_CASE("exit code contract") {
  RunConfig cfg;
  cfg.mode = "yoccoz";
  cfg.c = cplx(0.0, 0.0);
  auto r = run_command(cfg);
  CHECK(r.exit_code == 2);
  CHECK(json::parse(r.json)["reason"] == "NotBothRepelling");

  cfg.c = cplx(0.0, 1.0);
  cfg.depth = 6;
  r = run_command(cfg);
  CHECK(r.exit_code == 0);
  const auto j = json::parse(r.json);
  CHECK(j["q"] == 3);
  CHECK(j["alpha_angles"] == json::array({"1/7", "2/7", "4/7"}));

  cfg.mode = "bh";
  r = run_command(cfg);
  CHECK(r.exit_code == 2);
  CHECK(json::parse(r.json)["reason"] == "BadInput");

  cfg.mode = "unknown";
  CHECK(run_command(cfg).exit_code == 2);

  RunConfig t;
  t.mode = "tableau";
  t.c = cplx(-1.0, 0.0);
  t.z = cplx((std::sqrt(5.0) - 1) / 2, 0.0);  // f(z) = alpha
  t.depth = 4;
  r = run_command(t);
  CHECK(r.exit_code == 2);
  CHECK(json::parse(r.json)["reason"] == "OrbitHitsAlpha");
  CHECK(json::parse(r.json)["at"] == 1);
}

TEST_CASE("yoccoz examples") {
  RunConfig cfg;
  cfg.mode = "yoccoz";
  cfg.c = cplx(-1.75, 0.0);
  cfg.depth = 12;
  const auto j = json::parse(run_command(cfg).json);
  CHECK(j["verdict"]["kind"] == "renormalizable");
  CHECK(j["verdict"]["period"] == 3);
}

TEST_CASE("tableau command") {
  RunConfig cfg;
  cfg.mode = "tableau";
  cfg.fibonacci = true;
  cfg.depth = 18;
  cfg.width = 56;
  const auto r = run_command(cfg);
  REQUIRE(r.exit_code == 0);
  const auto scd = json::parse(r.json)["tableau"]["scd"];
  // Column u_n of the Fibonacci sequence turns semi-critical at depth u_{n+1} - 3.
  const int u[] = {1, 2, 3, 5, 8, 13, 21, 34, 55, 89};
  for (int n = 0; n + 1 < 10; ++n) CHECK(scd[u[n]].get<int>() == u[n + 1] - 3);
  CHECK(r.text.find("‖") != std::string::npos);

  RunConfig p;
  p.mode = "tableau";
  p.c = cplx(-1.0, 0.0);
  p.z = cplx(0.0, 0.0);
  p.depth = 6;
  p.width = 8;
  const auto t = json::parse(run_command(p).json)["tableau"];
  // Period-2 orbit 0 -> -1 -> 0: even columns critical at every depth.
  for (int k = 0; k < 8; k += 2) CHECK(t["scd"][k].get<int>() >= 6);
  for (int k = 1; k < 8; k += 2) CHECK(t["scd"][k].get<int>() < 0);
}

TEST_CASE("render smoke and determinism") {
  RunConfig cfg;
  cfg.mode = "render";
  cfg.c = cplx(0.0, 0.0);
  cfg.grid = 16;
  const auto a = run_command(cfg), b = run_command(cfg);
  REQUIRE(a.exit_code == 0);
  CHECK(a.image == b.image);
  CHECK(a.json == b.json);
  const auto j = json::parse(a.json);
  const auto w = j["window"];
  // Pixels whose centers lie well inside the unit disk never escape.
  const std::string header = "P5\n16 16\n255\n";
  REQUIRE(a.image.compare(0, header.size(), header) == 0);
  int inside = 0;
  for (int r = 0; r < 16; ++r)
    for (int c = 0; c < 16; ++c) {
      const double x = w[0].get<double>() + (c + 0.5) * (w[1].get<double>() - w[0].get<double>()) / 16;
      const double y = w[3].get<double>() - (r + 0.5) * (w[3].get<double>() - w[2].get<double>()) / 16;
      if (std::hypot(x, y) < 0.95) {
        ++inside;
        CHECK(static_cast<unsigned char>(a.image[header.size() + r * 16 + c]) == 0);
      }
    }
  CHECK(inside > 50);
}

TEST_CASE("render logs critical piece sizes") {
  RunConfig cfg;
  cfg.mode = "render";
  cfg.c = cplx(-1.8705286321646448, 0.0);
  cfg.grid = 64;
  cfg.depths = parse_depths("0..5");
  const auto j = json::parse(run_command(cfg).json);
  REQUIRE(j["layers"].size() == 6);
  for (const auto& layer : j["layers"]) CHECK(layer["critical_is_largest"] == true);
}

TEST_CASE("bh command") {
  RunConfig cfg;
  cfg.mode = "bh";
  cfg.poly = parse_coefficients("10,-13,4,0");
  cfg.depth = 4;
  const auto r = run_command(cfg);
  REQUIRE(r.exit_code == 0);
  const auto j = json::parse(r.json);
  CHECK(j["components"]["critical_component_nontrivial"] == true);
  CHECK(j["polylike"]["degree"] == 2);
  CHECK(run_command(cfg).json == r.json);
}
