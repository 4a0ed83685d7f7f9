#include "oracles.hpp"

#include "dgflow/quadrature.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <malloc.h>
#include <map>
#include <random>
#include <sstream>
#include <string>

using namespace dgflow;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s << std::setprecision(digits) << v;
  return s.str();
}

// ---------------------------------------------------------------- full runs

struct RunMetrics {
  bool ok = false;
  std::string reason;
  int steps = 0;
  double final_time = 0.0;
  double initial_dofs = 0, first_dofs = 0, final_dofs = 0, max_elements = 0;
  double s_min = 0.0, s_max = 0.0;
  double front = std::numeric_limits<double>::quiet_NaN();
  double wall = 0.0;
};

fs::path cache_dir() {
  const char* env = std::getenv("DGFLOW_ACCEPTANCE_CACHE");
  return env ? fs::path(env) : fs::path(DGFLOW_CACHE_DIR);
}

// Results are keyed by the executable's timestamp so a rebuild invalidates them.
fs::path cache_file(const std::string& label) {
  const auto stamp = fs::last_write_time(fs::read_symlink("/proc/self/exe")).time_since_epoch().count();
  return cache_dir() / (label + "_" + std::to_string(stamp) + ".txt");
}

void store(const std::string& label, const RunMetrics& m) {
  fs::create_directories(cache_dir());
  std::ofstream out(cache_file(label));
  out << std::setprecision(17) << m.ok << '\n'
      << m.steps << ' ' << m.final_time << ' ' << m.initial_dofs << ' ' << m.first_dofs << ' ' << m.final_dofs << ' '
      << m.max_elements << ' ' << m.s_min << ' ' << m.s_max << ' ' << m.front << ' ' << m.wall << '\n'
      << m.reason << '\n';
}

bool load(const std::string& label, RunMetrics& m) {
  std::ifstream in(cache_file(label));
  if (!in) return false;
  std::string front;
  in >> m.ok >> m.steps >> m.final_time >> m.initial_dofs >> m.first_dofs >> m.final_dofs >> m.max_elements >>
      m.s_min >> m.s_max >> front >> m.wall;
  m.front = front == "nan" ? std::numeric_limits<double>::quiet_NaN() : std::stod(front);
  in.ignore();
  std::getline(in, m.reason);
  return static_cast<bool>(in) || in.eof();
}

RunMetrics simulate(const RunConfig& cfg, const std::string& label) {
  RunMetrics m;
  m.s_min = std::numeric_limits<double>::infinity();
  m.s_max = -std::numeric_limits<double>::infinity();
  const auto start = std::chrono::steady_clock::now();
  RunResult r;
  try {
    r = run(cfg, nullptr, [&](const Simulation& sim, const StepRecord& rec) {
      if (!rec.ok) return;
      m.s_min = std::min(m.s_min, rec.s_min);
      m.s_max = std::max(m.s_max, rec.s_max);
      if (rec.step == 1) m.first_dofs = static_cast<double>(rec.dofs);
      if (sim.finished()) m.front = front_position(line_sample(sim.solution(), cfg.output.line_samples)).value_or(
                              std::numeric_limits<double>::quiet_NaN());
    });
  } catch (const std::exception& e) {
    r.ok = false;
    r.reason = e.what();
  }
  m.wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  m.ok = r.ok;
  m.reason = r.reason;
  m.steps = static_cast<int>(r.records.size());
  m.final_time = r.final_time;
  m.initial_dofs = static_cast<double>(r.initial_dofs);
  m.final_dofs = r.records.empty() ? 0.0 : static_cast<double>(r.records.back().dofs);
  m.max_elements = static_cast<double>(r.max_elements);
  std::cout << "  run " << label << ": " << (m.ok ? "ok" : "failed (" + m.reason + ")") << ", steps " << m.steps
            << ", t " << m.final_time << ", front " << fmt(m.front) << ", dofs " << m.first_dofs << " -> "
            << m.final_dofs << ", max leaves " << m.max_elements << ", " << fmt(m.wall, 3) << " s" << std::endl;
  store(label, m);
  return m;
}

/// Reuses an identical run of an earlier criterion from the same build when available.
RunMetrics simulate_or_reuse(const RunConfig& cfg, const std::string& label) {
  RunMetrics m;
  if (load(label, m)) {
    std::cout << "  run " << label << ": reused (front " << fmt(m.front) << ", dofs " << m.first_dofs << " -> "
              << m.final_dofs << ")" << std::endl;
    return m;
  }
  return simulate(cfg, label);
}

RunConfig lens_config(SchemeKind kind, double tau) {
  RunConfig c = RunConfig::defaults("anisotropic_lens");
  c.scheme.kind = kind;
  c.scheme.tau = tau;
  c.quiet = true;
  c.output.directory.clear();
  return c;
}

std::string run_label(SchemeKind kind, double tau, const std::string& extra = "") {
  return std::string("lens_") + to_string(kind) + "_tau" + fmt(tau) + extra;
}

// ---------------------------------------------------------------- criteria

Verdict c1() {
  RunConfig cfg = lens_config(SchemeKind::implicit, 3.0);
  const RunMetrics m = simulate(cfg, run_label(SchemeKind::implicit, 3.0));
  const bool bounds = m.s_min >= -1e-10 && m.s_max <= 1.0 + 1e-10;
  const bool leaves = m.max_elements <= 3840;
  const bool fast = m.wall < 900.0;
  const bool done = m.ok && std::abs(m.final_time - 800.0) < 1e-9;
  return {done && bounds && leaves && fast,
          std::string(done ? "reached T=800" : "did not reach T=800: " + m.reason) + ", max leaves " +
              fmt(m.max_elements) + " (<= 3840), s in [" + fmt(m.s_min) + ", " + fmt(m.s_max) + "], wall " +
              fmt(m.wall, 4) + " s (< 900)"};
}

Verdict c2() {
  const SchemeKind all[] = {SchemeKind::implicit, SchemeKind::linear, SchemeKind::iterative,
                            SchemeKind::impes_iterative, SchemeKind::impes};
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  bool all_ok = true;
  std::string fronts;
  for (SchemeKind k : all) {
    const RunMetrics m = simulate_or_reuse(lens_config(k, 3.0), run_label(k, 3.0));
    const bool ok = m.ok && std::isfinite(m.front);
    all_ok = all_ok && ok;
    if (ok) {
      lo = std::min(lo, m.front);
      hi = std::max(hi, m.front);
    }
    fronts += std::string(to_string(k)) + "=" + (ok ? fmt(m.front) : "failed") + " ";
  }
  const bool agree = all_ok && hi - lo <= 0.03;

  // plain Newton overshoots out of the admissible range in the first step; damping changes only the path
  RunConfig ref_cfg = lens_config(SchemeKind::implicit, 5.0);
  ref_cfg.scheme.newton.line_search = true;
  const RunMetrics ref = simulate_or_reuse(ref_cfg, run_label(SchemeKind::implicit, 5.0, "_damped"));
  bool unstable = false;
  std::string loose;
  for (SchemeKind k : {SchemeKind::impes, SchemeKind::linear}) {
    const RunMetrics m = simulate_or_reuse(lens_config(k, 5.0), run_label(k, 5.0));
    const bool failed = !m.ok || !std::isfinite(m.front);
    const double dev = failed || !std::isfinite(ref.front) ? std::numeric_limits<double>::infinity()
                                                           : std::abs(m.front - ref.front);
    unstable = unstable || failed || dev > 0.03;
    loose += std::string(to_string(k)) + (failed ? " failed" : " deviates " + fmt(dev)) + "; ";
  }
  return {agree && unstable && std::isfinite(ref.front),
          "tau=3 fronts " + fronts + "(spread " + fmt(hi - lo) + " <= 0.03); tau=5 damped implicit front " + fmt(ref.front) +
              ", " + loose + "need one > 0.03 or failed"};
}

Verdict c3() {
  const RunMetrics adaptive = simulate_or_reuse(lens_config(SchemeKind::implicit, 3.0), run_label(SchemeKind::implicit, 3.0));
  RunConfig uniform_cfg = lens_config(SchemeKind::implicit, 3.0);
  uniform_cfg.adapt.p_strategy = PStrategy::off;
  const RunMetrics uniform = simulate_or_reuse(uniform_cfg, run_label(SchemeKind::implicit, 3.0, "_uniform_p3"));
  if (!adaptive.ok || !uniform.ok)
    return {false, "a run failed: " + adaptive.reason + " " + uniform.reason};
  const double first = adaptive.first_dofs / uniform.first_dofs;
  const double last = adaptive.final_dofs / uniform.final_dofs;
  return {first <= 0.80 && last <= 0.85, "markpDiff/uniform DOFs first step " + fmt(adaptive.first_dofs) + "/" +
                                             fmt(uniform.first_dofs) + " = " + fmt(first) + " (<= 0.80), T=800 " +
                                             fmt(adaptive.final_dofs) + "/" + fmt(uniform.final_dofs) + " = " +
                                             fmt(last) + " (<= 0.85)"};
}

Verdict c4a() {
  std::mt19937 rng(20240601);
  std::uniform_real_distribution<double> unit(0.0, 1.0), coef(-1.0, 1.0);
  std::uniform_int_distribution<int> order(1, 3);
  double mean_err = 0.0, bound_err = 0.0, idem_err = 0.0;
  int limited = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Mesh mesh = Mesh::build_macro(1, 1, Vec2(0.3 + unit(rng), 0.3 + unit(rng)), 0, order(rng));
    DgFunction u(std::make_shared<const DgSpace>(mesh));
    auto s = u.block(0, Field::saturation);
    s[0] = unit(rng);
    const double amp = 0.8 * unit(rng);
    for (std::size_t a = 1; a < s.size(); ++a) s[a] = amp * coef(rng) / std::sqrt(static_cast<double>(a));
    const double mean = s[0];
    limited += apply_scaling_limiter(u).limited_elements;
    mean_err = std::max(mean_err, std::abs(u.mean(0, Field::saturation) - mean));
    for (const Vec2& xi : limiter_points(u.space(), 0)) {
      const double v = u.value_ref(0, Field::saturation, xi);
      bound_err = std::max({bound_err, -v, v - 1.0});
    }
    const Eigen::VectorXd once = u.coefficients();
    apply_scaling_limiter(u);
    idem_err = std::max(idem_err, (u.coefficients() - once).lpNorm<Eigen::Infinity>());
  }
  return {mean_err <= 1e-14 && bound_err <= 1e-12 && idem_err <= 1e-14,
          std::to_string(limited) + "/1000 limited; mean error " + fmt(mean_err) + ", bound violation " +
              fmt(std::max(bound_err, 0.0)) + ", idempotence " + fmt(idem_err)};
}

// Saturation on the boundary is flux data only; the side walls keep the hydrostatic pressure.
double balance_defect(bool limiter, std::string& failure) {
  ProblemSetup setup = anisotropic_lens_setup();
  const auto lens_boundary = setup.boundary;
  setup.boundary = [lens_boundary](BoundarySide side, const Vec2& x) {
    BoundaryData d = lens_boundary(side, x);
    d.s_dirichlet = false;
    return d;
  };
  const ModelA model;
  const Discretization disc(setup, model);
  Mesh mesh = Mesh::build_macro(10, 6, setup.extent, 1, 2);
  std::vector<Mark> marks(mesh.size(), Mark::keep);
  for (std::size_t e = 0; e < mesh.size(); ++e)
    if (std::abs(mesh.elements()[e].center.x() - 0.45) < 0.1 && mesh.elements()[e].center.y() > 0.5) marks[e] = Mark::refine;
  mesh.execute_marks(marks);
  TimeState st;
  st.u = DgFunction(std::make_shared<const DgSpace>(mesh));
  l2_project(st.u, Field::pressure, setup.initial_p_w);
  SchemeConfig sc;
  sc.kind = SchemeKind::implicit;
  sc.tau = 3.0;
  sc.newton.atol = 1e-20;
  sc.newton.rtol = 1e-12;
  sc.limiter.enabled = limiter;
  const double inflow = -sc.tau * oracle::boundary_flux(st.u.space(), setup);
  double worst = 0.0;
  for (int n = 0; n < 10; ++n) {
    const double before = oracle::saturation_mass(st.u, setup);
    const StepDiagnostics d = advance(st, sc, disc);
    if (!d.ok) {
      failure = "step " + std::to_string(n + 1) + " failed: " + d.reason;
      return std::numeric_limits<double>::infinity();
    }
    worst = std::max(worst, std::abs(oracle::saturation_mass(st.u, setup) - before - inflow) / inflow);
  }
  return worst;
}

Verdict c4b() {
  std::string failure;
  const double forms = balance_defect(false, failure);
  if (!failure.empty()) return {false, failure};
  // informational: clamped means and mixed-porosity cells make the limited scheme lose exactness
  const double limited = balance_defect(true, failure);
  return {forms <= 1e-10, "10 implicit steps, worst relative balance defect " + fmt(forms) +
                              " (<= 1e-10); with the scaling limiter " + (failure.empty() ? fmt(limited) : failure)};
}

Verdict c4c() {
  const ProblemSetup setup = anisotropic_lens_setup();
  double worst = 0.0;
  for (const std::string name : {"A", "B"}) {
    const auto model = make_model(name);
    const Discretization disc(setup, *model);
    const Mesh mesh = Mesh::build_macro(2, 2, setup.extent, 0, 2);
    auto space = std::make_shared<const DgSpace>(mesh);
    DgFunction u(space), old(space);
    std::mt19937 rng(name == "A" ? 1 : 2);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    l2_project(u, Field::pressure, [](const Vec2& x) { return 9810.0 * (0.65 - x.y()) + 300.0 * x.x(); });
    l2_project(u, Field::saturation, [](const Vec2& x) { return 0.25 + 0.1 * std::sin(9 * x.x() + 4 * x.y()); });
    l2_project(old, Field::saturation, [](const Vec2&) { return 0.2; });
    AssemblyInput in;
    in.u = &u;
    in.u_old = &old;
    in.tau = 3.0;
    const AssembledSystem sys = disc.assemble(in);
    const DofMap map(*space, FieldSet::coupled);
    Eigen::VectorXd x;
    map.gather(u, x);
    for (int k = 0; k < 20; ++k) {
      Eigen::VectorXd dir(x.size());
      for (std::size_t e = 0; e < space->size(); ++e) {
        const int ei = static_cast<int>(e);
        for (int a = 0; a < space->n_modes(ei); ++a) {
          dir[map.offset(ei) + map.local(ei, Field::pressure, a)] = 100.0 * d(rng);
          dir[map.offset(ei) + map.local(ei, Field::saturation, a)] = 0.01 * d(rng);
        }
      }
      const double h = 1e-5;
      DgFunction up = u, um = u;
      map.scatter(x + h * dir, up);
      map.scatter(x - h * dir, um);
      in.u = &up;
      const Eigen::VectorXd rp = disc.assemble(in, false).residual;
      in.u = &um;
      const Eigen::VectorXd rm = disc.assemble(in, false).residual;
      in.u = &u;
      const Eigen::VectorXd jd = sys.jacobian * dir;
      worst = std::max(worst, ((rp - rm) / (2 * h) - jd).norm() / jd.norm());
    }
  }
  return {worst < 1e-5, "20 directions per model on a 2x2 mesh, r=2: worst relative error " + fmt(worst) + " (< 1e-5)"};
}

Verdict c4d() {
  ProblemSetup setup = anisotropic_lens_setup();
  setup.fluids.g = Vec2(0.0, -9.81);
  PointCoefficients c;
  c.pp = 1000.0;
  c.sp = 100.0;
  c.ss = 50.0;
  c.ps = 20.0;
  c.gp = 0.5;
  const ConstantModel model(c, setup.fluids.rho_n * setup.fluids.g);
  const Discretization disc(setup, model);
  Mesh mesh = Mesh::build_macro(10, 6, setup.extent, 1, 2);
  TimeState start;
  start.u = DgFunction(std::make_shared<const DgSpace>(mesh));
  l2_project(start.u, Field::pressure, setup.initial_p_w);
  std::vector<DgFunction> out;
  for (SchemeKind k : {SchemeKind::linear, SchemeKind::implicit, SchemeKind::iterative}) {
    TimeState st = start;
    SchemeConfig sc;
    sc.kind = k;
    sc.tau = 3.0;
    for (int n = 0; n < 5; ++n) {
      const StepDiagnostics d = advance(st, sc, disc);
      if (!d.ok) return {false, std::string(to_string(k)) + " failed: " + d.reason};
    }
    out.push_back(st.u);
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t j = i + 1; j < out.size(); ++j)
      worst = std::max({worst, l2_distance(out[i], out[j], Field::pressure), l2_distance(out[i], out[j], Field::saturation)});
  return {worst < 1e-8, "saturation-independent coefficients, 5 steps: worst pairwise L2 distance " + fmt(worst) +
                            " (< 1e-8; |p| ~ " + fmt(out[0].l2_norm(Field::pressure)) + ", |s| ~ " +
                            fmt(out[0].l2_norm(Field::saturation)) + ")"};
}

Verdict c4e() {
  ProblemSetup steady = anisotropic_lens_setup();
  steady.fluids.g = Vec2::Zero();
  steady.boundary = [](BoundarySide side, const Vec2&) {
    BoundaryData b;
    if (side == BoundarySide::west || side == BoundarySide::east) {
      b.p_dirichlet = b.s_dirichlet = true;
      b.p_w = 1000.0;
      b.s_n = 0.2;
    }
    return b;
  };
  // the lens has its own entry pressure, so a constant state is steady only in one rock
  steady.lens = steady.exterior;
  const ModelA model;
  const Discretization disc(steady, model);
  Mesh mesh = Mesh::build_macro(10, 6, steady.extent, 1, 2);
  DgFunction u(std::make_shared<const DgSpace>(mesh));
  l2_project(u, Field::pressure, [](const Vec2&) { return 1000.0; });
  l2_project(u, Field::saturation, [](const Vec2&) { return 0.2; });
  const auto eta = compute_estimator(u, u, 3.0, disc);
  const double zero = *std::max_element(eta.begin(), eta.end());

  ProblemSetup two;
  two.extent = Vec2(2.0, 1.0);
  two.fluids.g = Vec2::Zero();
  two.exterior.K = Mat2::Identity();
  two.lens = two.exterior;
  two.boundary = [](BoundarySide, const Vec2&) { return BoundaryData{}; };
  PointCoefficients unit;
  unit.ss = 1.0;
  const ConstantModel cm(unit);
  const Discretization jd(two, cm);
  const Mesh pair = Mesh::build_macro(2, 1, two.extent, 0, 1);
  DgFunction v(std::make_shared<const DgSpace>(pair));
  const double k = 0.37;
  v.block(1, Field::saturation)[0] = k;
  const auto jump = compute_estimator(v, v, 1.0, jd);
  const double expected = 0.5 * std::pow(2.0 * k, 2);  // beta = 2, gamma = 1, |e| = h = 1
  const double err = std::max(std::abs(jump[0] - expected), std::abs(jump[1] - expected)) / expected;
  return {zero < 1e-12 && err < 1e-12,
          "constant steady state max eta " + fmt(zero) + " (< 1e-12); single jump relative error " + fmt(err) + " (< 1e-12)"};
}

Verdict c4f() {
  const ProblemSetup setup = anisotropic_lens_setup();
  double worst = 0.0, closed = 0.0;
  for (const RockParams* rock : {&setup.exterior, &setup.lens}) {
    const double top = 1.0 - rock->s_wr - rock->s_nr;
    for (int i = 0; i < 100; ++i) {
      const double s = rock->s_nr + top * (0.005 + 0.97 * i / 99.0);
      const double h = 1e-6 * top;
      const double fd =
          (brooks_corey(*rock, setup.fluids, s + h).p_c - brooks_corey(*rock, setup.fluids, s - h).p_c) / (2 * h);
      const CapillaryOutputs c = brooks_corey(*rock, setup.fluids, s);
      worst = std::max(worst, std::abs(c.dp_c - fd) / std::abs(fd));
      const double ref = oracle::capillary_pressure(rock->p_d, rock->theta, rock->s_wr, rock->s_nr, s);
      closed = std::max(closed, std::abs(c.p_c - ref) / ref);
    }
  }
  return {worst < 1e-6 && closed < 1e-13,
          "100 points per rock: worst relative dp_c error " + fmt(worst) + " (< 1e-6), p_c closed form " + fmt(closed)};
}

Verdict c5() {
  ProblemSetup setup;
  setup.extent = Vec2(1.0, 1.0);
  setup.fluids.g = Vec2::Zero();
  setup.exterior.s_wr = 0.1;
  setup.exterior.p_d = 1000.0;
  setup.exterior.theta = 2.0;
  setup.exterior.K = Mat2::Identity();
  setup.lens.s_wr = 0.2;
  setup.lens.p_d = 3000.0;
  setup.lens.theta = 2.5;
  setup.lens.K = 0.1 * Mat2::Identity();
  setup.lens_box = {Vec2(0.75, 0.5), Vec2(0.25, 0.6)};  // right half of the square
  const double s_fixed = 0.3;
  const ModelA model;
  oracle::PiecewisePressure exact;
  exact.k_left = model.coefficients(setup.exterior, setup.fluids, s_fixed, {}).pp;
  exact.k_right = model.coefficients(setup.lens, setup.fluids, s_fixed, {}).pp * 0.1;
  setup.boundary = [&exact](BoundarySide, const Vec2& x) {
    BoundaryData b;
    b.p_dirichlet = b.s_dirichlet = true;
    b.p_w = exact.value(x);
    b.s_n = 0.3;
    return b;
  };
  const Discretization disc(setup, model);

  std::string detail;
  bool pass = true;
  for (int r : {1, 2}) {
    std::vector<double> h, err;
    Mesh mesh = Mesh::build_macro(4, 4, setup.extent, 3, r);
    for (int level = 0; level <= 3; ++level) {
      if (level > 0) mesh.execute_marks(std::vector<Mark>(mesh.size(), Mark::refine));
      auto space = std::make_shared<const DgSpace>(mesh);
      DgFunction u(space);
      l2_project(u, Field::saturation, [&](const Vec2&) { return s_fixed; });
      AssemblyInput in;
      in.u = &u;
      in.u_old = &u;
      in.s_bar = &u;
      in.implicit = false;
      in.fields = FieldSet::pressure_only;
      const AssembledSystem sys = disc.assemble(in);
      const DofMap map(*space, FieldSet::pressure_only);
      Eigen::VectorXd load = Eigen::VectorXd::Zero(sys.residual.size());
      basis::Evaluation ev;
      for (std::size_t e = 0; e < space->size(); ++e) {
        const int ei = static_cast<int>(e);
        const Element& el = space->element(ei);
        const auto& rule = square_rule(2 * r + 8);
        for (std::size_t q = 0; q < rule.size(); ++q) {
          basis::evaluate(r, rule.points[q], ev);
          const double w = rule.weights[q] * el.area / 4.0 * exact.source(el.to_physical(rule.points[q]));
          for (int a = 0; a < space->n_modes(ei); ++a) load[map.offset(ei) + a] += w * ev.value[a];
        }
      }
      const Eigen::VectorXd p = linear_solve(sys.jacobian, load - sys.residual);
      map.scatter(p, u);
      double e2 = 0.0;
      for (std::size_t e = 0; e < space->size(); ++e) {
        const int ei = static_cast<int>(e);
        const Element& el = space->element(ei);
        const auto& rule = square_rule(2 * r + 8);
        for (std::size_t q = 0; q < rule.size(); ++q) {
          const double diff = u.value_ref(ei, Field::pressure, rule.points[q]) - exact.value(el.to_physical(rule.points[q]));
          e2 += rule.weights[q] * el.area / 4.0 * diff * diff;
        }
      }
      h.push_back(mesh.elements()[0].extent.x());
      err.push_back(std::sqrt(e2));
    }
    // least-squares slope of log(err) against log(h)
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < h.size(); ++i) {
      mx += std::log(h[i]) / h.size();
      my += std::log(err[i]) / h.size();
    }
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < h.size(); ++i) {
      sxy += (std::log(h[i]) - mx) * (std::log(err[i]) - my);
      sxx += std::pow(std::log(h[i]) - mx, 2);
    }
    const double rate = sxy / sxx;
    pass = pass && std::abs(rate - (r + 1)) <= 0.25;
    detail += "r=" + std::to_string(r) + " errors";
    for (double e : err) detail += " " + fmt(e, 3);
    detail += " rate " + fmt(rate, 3) + " (" + std::to_string(r + 1) + " +- 0.25); ";
  }
  return {pass, detail};
}

Verdict c6() {
  RunConfig cfg = RunConfig::defaults("isotropic_weak_lens");
  cfg.forms.threads = 1;
  cfg.quiet = true;
  cfg.output.directory.clear();
  Simulation sim(cfg);
  sim.initialize();
  const double before = oracle::mirror_asymmetry(sim.solution(), cfg.setup.extent.x(), {0.645, 0.62, 0.6}, 200);
  const StepRecord rec = sim.step();
  if (!rec.ok) return {false, "step failed: " + rec.reason};
  const std::vector<double> ys = {0.645, 0.63, 0.62, 0.6, 0.55, 0.5, 0.45, 0.3};
  const double asym = oracle::mirror_asymmetry(sim.solution(), cfg.setup.extent.x(), ys, 200);
  double peak = 0.0;
  for (double y : ys)
    for (int j = 0; j < 200; ++j)
      peak = std::max(peak, sim.solution().evaluate(Field::saturation, Vec2(0.9 * (j + 0.37) / 200, y)));
  return {asym <= 1e-6, "after one step (" + std::to_string(sim.mesh().size()) + " leaves, max s " + fmt(peak) +
                            "): mirror asymmetry " + fmt(asym) + " (<= 1e-6), initial " + fmt(before)};
}

const std::map<std::string, std::function<Verdict()>>& criteria() {
  static const std::map<std::string, std::function<Verdict()>> table = {
      {"c1", c1},   {"c2", c2},   {"c3", c3},   {"c4a", c4a}, {"c4b", c4b}, {"c4c", c4c},
      {"c4d", c4d}, {"c4e", c4e}, {"c4f", c4f}, {"c5", c5},   {"c6", c6}};
  return table;
}

}  // namespace

int main(int argc, char** argv) {
  // sparse factorizations allocate and free large blocks every step; keep them on the heap
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  std::vector<std::string> names;
  for (int i = 1; i < argc; ++i) names.emplace_back(argv[i]);
  if (names.empty() || names[0] == "all")
    for (const auto& [name, fn] : criteria()) names.push_back(name);
  bool all = true;
  for (const std::string& name : names) {
    if (name == "all") continue;
    const auto it = criteria().find(name);
    if (it == criteria().end()) {
      std::cerr << "unknown criterion '" << name << "'\n";
      return 2;
    }
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = it->second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (v.pass ? "PASS " : "FAIL ") << name << ": " << v.detail << " [" << fmt(secs, 3) << " s]" << std::endl;
    all = all && v.pass;
  }
  return all ? 0 : 1;
}
