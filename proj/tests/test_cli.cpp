#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

#include "cli.hpp"
#include "config.hpp"
#include "svg.hpp"

using namespace distpd_cli;
namespace fs = std::filesystem;

namespace {

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "distpd_cli_test" / name;
  fs::remove_all(dir);
  return dir;
}

int call(std::vector<std::string> args, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  if (err_text) *err_text = err.str();
  return code;
}

Table fig4_like() {
  Table t;
  t.columns = {"f_n_hz", "Ts_s", "Td_s", "pm_deg"};
  for (double ts : {0.001, 0.005})
    for (double td : {0.001, 0.003, 0.005})
      for (int f = 1; f <= 4; ++f) t.rows.push_back({double(f), ts, td, 80.0 - f * 10 * (1 + td * 100)});
  return t;
}

}  // namespace

TEST_CASE("svg single point series gets one marker") {
  Table t;
  t.columns = {"x", "y"};
  t.rows = {{1.0, 2.0}};
  PlotSpec spec;
  spec.x = "x";
  spec.y = "y";
  const std::string svg = emit_svg(t, spec);
  CHECK(count(svg, "<circle") == 1);
  CHECK(count(svg, "<polyline") == 1);
  CHECK(svg.rfind("<svg", 0) == 0);
}

TEST_CASE("svg output is byte identical for identical input") {
  PlotSpec spec;
  spec.x = "f_n_hz";
  spec.y = "pm_deg";
  spec.group_by = {"Ts_s", "Td_s"};
  spec.threshold = 50.0;
  CHECK(emit_svg(fig4_like(), spec) == emit_svg(fig4_like(), spec));
}

TEST_CASE("svg draws one polyline per delay pair") {
  PlotSpec spec;
  spec.x = "f_n_hz";
  spec.y = "pm_deg";
  spec.group_by = {"Ts_s", "Td_s"};
  spec.threshold = 50.0;
  const std::string svg = emit_svg(fig4_like(), spec);
  CHECK(count(svg, "<polyline") == 6);
  CHECK(count(svg, "<circle") == 24);
  CHECK(count(svg, "class=\"threshold\"") == 1);
  spec.markers = false;
  CHECK(count(emit_svg(fig4_like(), spec), "<circle") == 0);
  spec.y = "missing";
  CHECK_THROWS_AS(emit_svg(fig4_like(), spec), ConfigError);
}

TEST_CASE("config lists, ranges and unknown keys") {
  Config c(default_config("pm-sweep"));
  c.load_text("[grid]\nf_n_hz = 2:6:2 ; comment\nts_ms = 1, 2\n", "inline");
  CHECK(c.list("grid.f_n_hz") == std::vector<double>{2, 4, 6});
  CHECK(c.list("grid.ts_ms") == std::vector<double>{1, 2});
  CHECK_THROWS_AS(c.set("grid.nope=3"), ConfigError);
  CHECK_THROWS_AS(c.load_text("[plant]\nmass = 3\n", "inline"), ConfigError);
  Config d(default_config("pm-sweep"));
  d.load_text("[grid]\nf_n_hz = 2:6:2\nts_ms = 1, 2\n", "other");
  CHECK(c.hash() == d.hash());
  d.set("plant.m=300");
  CHECK(c.hash() != d.hash());
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
}

TEST_CASE("every subcommand has a documented default config") {
  for (const auto& s : subcommands()) CHECK_FALSE(default_config(s).empty());
}

TEST_CASE("pm-sweep writes table, plot and manifest") {
  const fs::path dir = fresh_dir("pm");
  REQUIRE(call({"pm-sweep", "-o", dir.string(), "--set", "grid.f_n_hz=1:5:1",
                "--set", "grid.ts_ms=1,5", "--set", "grid.td_ms=1,5", "-j", "2"}) == 0);
  const std::string svg = slurp(dir / "pm_sweep.svg");
  CHECK(count(svg, "<polyline") == 4);
  CHECK(count(slurp(dir / "pm_sweep.csv"), "\n") == 21);
  const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(m["subcommand"] == "pm-sweep");
  CHECK(m["config_hash"].get<std::string>().rfind("fnv1a64:", 0) == 0);
  CHECK(m["cells"].size() == 20);
  CHECK(m.contains("versions"));

  // Same config, same bytes, whatever the thread count.
  const fs::path again = fresh_dir("pm2");
  REQUIRE(call({"pm-sweep", "-o", again.string(), "--set", "grid.f_n_hz=1:5:1",
                "--set", "grid.ts_ms=1,5", "--set", "grid.td_ms=1,5", "-j", "1"}) == 0);
  CHECK(slurp(again / "pm_sweep.csv") == slurp(dir / "pm_sweep.csv"));
  CHECK(slurp(again / "pm_sweep.svg") == svg);
  CHECK(slurp(again / "manifest.json") == slurp(dir / "manifest.json"));
}

TEST_CASE("config file and overrides") {
  const fs::path dir = fresh_dir("cfg");
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "c.ini");
    f << "[grid]\nf_n_hz = 3\nts_ms = 2\ntd_ms = 2\n";
  }
  REQUIRE(call({"pm-sweep", "-c", (dir / "c.ini").string(), "-o", (dir / "out").string()}) == 0);
  CHECK(count(slurp(dir / "out" / "pm_sweep.csv"), "\n") == 2);

  std::ofstream(dir / "bad.ini") << "[plant]\nmass = 3\n";
  std::string err;
  CHECK(call({"pm-sweep", "-c", (dir / "bad.ini").string(), "-o", (dir / "o2").string()}, &err) == 1);
  CHECK(err.find("plant.mass") != std::string::npos);
}

TEST_CASE("exit codes") {
  const fs::path dir = fresh_dir("codes");
  std::string err;
  CHECK(call({}, &err) == 1);
  CHECK(call({"frobnicate"}) == 1);
  CHECK(call({"pm-sweep", "-o", dir.string(), "--set", "grid.ts_ms="}, &err) == 1);
  CHECK(call({"pm-sweep", "-o", dir.string(), "--set", "plant.m=-1"}) == 1);
  CHECK(call({"pm-sweep", "-o", dir.string(), "--set", "nosuch.key=1"}, &err) == 1);
  CHECK(err.find("nosuch.key") != std::string::npos);
  // A track run that diverges is a numerical failure.
  CHECK(call({"track", "-o", dir.string(), "--set", "controller.f_n_hz=40",
              "--set", "grid.ts_ms=30", "--set", "controller.td_ms=30",
              "--set", "scenario.duration=2"}) == 2);
}

TEST_CASE("print-config echoes the merged configuration") {
  std::ostringstream out, err;
  REQUIRE(run({"breakdown", "--print-config", "--set", "breakdown.alpha=0"}, out, err) == 0);
  CHECK(out.str().find("alpha") != std::string::npos);
}

TEST_CASE("breakdown and sens subcommands") {
  const fs::path dir = fresh_dir("bd");
  REQUIRE(call({"breakdown", "-o", dir.string(), "--set", "grid.beta=10,400",
                "--set", "grid.gamma=1.2,3"}) == 0);
  const std::string csv = slurp(dir / "breakdown.csv");
  CHECK(csv.rfind("alpha,beta,gamma,tau_v,delta,status", 0) == 0);
  CHECK(csv.find("not_real") != std::string::npos);
  CHECK(fs::exists(dir / "breakdown.svg"));
  CHECK(fs::exists(dir / "manifest.json"));

  const fs::path sd = fresh_dir("sens");
  REQUIRE(call({"sens", "-o", sd.string(), "--set", "grid.f_n_hz=5", "--set",
                "grid.ts_ms=5", "--set", "grid.td_ms=1"}) == 0);
  CHECK(fs::exists(sd / "sens.csv"));
}

TEST_CASE("step subcommand on a tiny grid") {
  const fs::path dir = fresh_dir("step");
  REQUIRE(call({"step", "-o", dir.string(), "--set", "grid.f_n_hz=4", "--set",
                "grid.ts_ms=5", "--set", "grid.td_ms=1", "--set", "sim.duration=2"}) == 0);
  const std::string csv = slurp(dir / "step.csv");
  CHECK(csv.find("stable") != std::string::npos);
  const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(m["cells"].size() == 1);
  CHECK(fs::exists(dir / "traces"));
}
