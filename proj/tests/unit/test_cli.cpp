#include "dgflow/simulation.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace dgflow;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("dgflow_test_" + name);
  fs::remove_all(dir);
  return dir;
}

RunConfig short_run(const fs::path& dir) {
  Settings s;
  s["problem.final_time"] = "6";
  s["output.directory"] = dir.string();
  s["output.every"] = "1";
  s["output.quiet"] = "true";
  s["output.line_samples"] = "33";
  return RunConfig::from_settings(s);
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("settings files and overrides") {
    const fs::path dir = scratch("ini");
    fs::create_directories(dir);
    {
      std::ofstream f(dir / "a.ini");
      f << "; comment\n[scheme]\nkind = impes\ntau = 2\n[rock.lens]\np_d = 4000\n";
    }
    Settings s = read_settings_file((dir / "a.ini").string());
    CHECK(s.at("scheme.kind") == "impes");
    CHECK(s.at("rock.lens.p_d") == "4000");
    apply_override(s, " scheme.tau = 1.5 ");
    CHECK(s.at("scheme.tau") == "1.5");
    CHECK_THROWS_AS(apply_override(s, "scheme.tau"), ConfigurationError);
    CHECK_THROWS_AS(apply_override(s, "=3"), ConfigurationError);

    const RunConfig c = RunConfig::from_settings(s);
    CHECK(c.scheme.kind == SchemeKind::impes);
    CHECK(c.scheme.tau == 1.5);
    CHECK(c.setup.lens.p_d == 4000.0);
    CHECK(c.setup.exterior.p_d == 755.0);

    s["scheme.nope"] = "1";
    CHECK_THROWS_AS(RunConfig::from_settings(s), ConfigurationError);
    Settings bad;
    bad["scheme.tau"] = "abc";
    CHECK_THROWS_AS(RunConfig::from_settings(bad), ConfigurationError);
    bad["scheme.tau"] = "1000";
    CHECK_THROWS_AS(RunConfig::from_settings(bad), ConfigurationError);
  }

  TEST_CASE("shipped configurations reproduce the presets") {
    const fs::path root = DGFLOW_SOURCE_DIR;
    for (const std::string name : {"anisotropic_lens", "isotropic_weak_lens"}) {
      CAPTURE(name);
      const RunConfig c = RunConfig::from_settings(read_settings_file((root / "configs" / (name + ".ini")).string()));
      const ProblemSetup ref = make_setup(name);
      CHECK(c.preset == name);
      CHECK(c.setup.final_time == ref.final_time);
      CHECK((c.setup.exterior.K - ref.exterior.K).norm() == 0.0);
      CHECK((c.setup.lens.K - ref.lens.K).norm() == 0.0);
      CHECK(c.setup.lens.p_d == ref.lens.p_d);
      CHECK(c.setup.macro_nx == 10);
      CHECK(c.setup.macro_ny == 6);
      CHECK(c.output.times.size() == 4);
      CHECK(c.output.times.back() == ref.final_time);
    }
  }

  TEST_CASE("final time override moves the default output times") {
    Settings s;
    s["problem.final_time"] = "40";
    const RunConfig c = RunConfig::from_settings(s);
    REQUIRE(c.output.times.size() == 4);
    CHECK(c.output.times[0] == 10.0);
    CHECK(c.output.times[3] == 40.0);
  }

  TEST_CASE("line sampling") {
    const Mesh m = Mesh::build_macro(10, 6, Vec2(0.9, 0.65), 0, 1);
    DgFunction u(std::make_shared<const DgSpace>(m));
    l2_project(u, Field::saturation, [](const Vec2& x) { return x.x(); });
    const LineSample line = line_sample(u, 3);
    REQUIRE(line.points.size() == 3);
    CHECK(line.points[0].x() == doctest::Approx(0.25));
    CHECK(line.points[0].y() == doctest::Approx(0.65));
    CHECK(line.points[1].x() == doctest::Approx(0.5125));
    CHECK(line.points[1].y() == doctest::Approx(0.52));
    CHECK(line.points[2].x() == doctest::Approx(0.775));
    CHECK(line.values[1] == doctest::Approx(0.5125));
    CHECK(front_position(line, 0.3) == doctest::Approx(0.5));
    CHECK_FALSE(front_position(line, 0.9).has_value());
    CHECK_THROWS_AS(line_sample(u, 1), ConfigurationError);
  }

  TEST_CASE("legacy VTK output") {
    const fs::path dir = scratch("vtk");
    fs::create_directories(dir);
    Mesh m = Mesh::build_macro(1, 1, Vec2(1, 1), 1, 1);
    {
      DgFunction u(std::make_shared<const DgSpace>(m));
      write_vtk(u, {0.5}, (dir / "one.vtk").string());
      const std::string txt = slurp(dir / "one.vtk");
      CHECK(txt.find("POINTS 4 double") != std::string::npos);
      CHECK(txt.find("CELLS 1 5") != std::string::npos);
      CHECK(txt.find("SCALARS order int 1") != std::string::npos);
    }
    m.execute_marks(std::vector<Mark>{Mark::refine});
    m.set_orders(std::vector<int>{1, 2, 3, 1});
    DgFunction u(std::make_shared<const DgSpace>(m));
    write_vtk(u, {}, (dir / "four.vtk").string());
    const std::string txt = slurp(dir / "four.vtk");
    CHECK(txt.find("CELLS 4 20") != std::string::npos);
    const auto lv = txt.find("SCALARS level int 1\nLOOKUP_TABLE default\n");
    REQUIRE(lv != std::string::npos);
    CHECK(txt.substr(lv + 41, 8) == "1\n1\n1\n1\n");
    const auto od = txt.find("SCALARS order int 1\nLOOKUP_TABLE default\n");
    REQUIRE(od != std::string::npos);
    CHECK(txt.substr(od + 41, 8) == "1\n2\n3\n1\n");
  }

  TEST_CASE("zero final time writes only the initial state") {
    const fs::path dir = scratch("t0");
    Settings s;
    s["problem.final_time"] = "0";
    s["output.directory"] = dir.string();
    s["output.times"] = "0";
    const RunResult r = run(RunConfig::from_settings(s));
    CHECK(r.ok);
    CHECK(r.records.empty());
    CHECK(fs::exists(dir / "solution_00000.vtk"));
    CHECK(fs::exists(dir / "line_0.csv"));
    CHECK(fs::exists(dir / "summary.txt"));
    int vtk = 0;
    for (const auto& entry : fs::directory_iterator(dir)) vtk += entry.path().extension() == ".vtk";
    CHECK(vtk == 1);
  }

  TEST_CASE("short runs are reproducible") {
    const fs::path a = scratch("rep_a"), b = scratch("rep_b");
    const RunResult ra = run(short_run(a));
    const RunResult rb = run(short_run(b));
    REQUIRE(ra.ok);
    REQUIRE(rb.ok);
    CHECK(ra.records.size() == 2);
    CHECK(ra.final_time == doctest::Approx(6.0));
    CHECK(slurp(a / "diagnostics.csv") == slurp(b / "diagnostics.csv"));
    CHECK(slurp(a / "line_6.csv") == slurp(b / "line_6.csv"));
    CHECK(fs::exists(a / "solution_00002.vtk"));
    const std::string diag = slurp(a / "diagnostics.csv");
    CHECK(diag.rfind("t,dofs,elements,sum_eta2,outer_iters,newton_iters,scheme,residual,min_level,max_level,order_0", 0) == 0);
    const std::string summary = slurp(a / "summary.txt");
    CHECK(summary.find("status: ok") != std::string::npos);
    CHECK(summary.find("steps: 2") != std::string::npos);
    for (const StepRecord& rec : ra.records) {
      CHECK(rec.s_min >= -1e-10);
      CHECK(rec.s_max <= 1.0 + 1e-10);
      CHECK(rec.elements > 60);
    }
  }
}
