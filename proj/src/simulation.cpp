#include "dgflow/simulation.hpp"

#include "dgflow/limiter.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace dgflow {

Settings read_settings_file(const std::string& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(path, tree);
  } catch (const boost::property_tree::ini_parser_error& err) {
    throw ConfigurationError("cannot read config '" + path + "': " + err.what());
  }
  Settings out;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      out[section] = body.data();
      continue;
    }
    for (const auto& [key, value] : body) out[section + "." + key] = value.data();
  }
  return out;
}

void apply_override(Settings& settings, const std::string& item) {
  const auto eq = item.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigurationError("override '" + item + "' is not KEY=VALUE");
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t");
    const auto b = s.find_last_not_of(" \t");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  settings[trim(item.substr(0, eq))] = trim(item.substr(eq + 1));
}

namespace {

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigurationError("key '" + key + "' expects a number, got '" + v + "'");
  }
}

int to_int(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != std::floor(d) || std::abs(d) > 1e9) throw ConfigurationError("key '" + key + "' expects an integer");
  return static_cast<int>(d);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigurationError("key '" + key + "' expects a boolean, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
    if (!item.empty()) out.push_back(to_double(key, item));
  }
  return out;
}

using Handler = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

void rock_handlers(std::map<std::string, Handler>& h, const std::string& prefix, RockParams ProblemSetup::*member) {
  auto field = [&](const std::string& name, auto apply) {
    h[prefix + name] = [member, apply](RunConfig& c, const std::string& k, const std::string& v) {
      apply(c.setup.*member, to_double(k, v));
    };
  };
  field("porosity", [](RockParams& r, double d) { r.porosity = d; });
  field("s_wr", [](RockParams& r, double d) { r.s_wr = d; });
  field("s_nr", [](RockParams& r, double d) { r.s_nr = d; });
  field("theta", [](RockParams& r, double d) { r.theta = d; });
  field("p_d", [](RockParams& r, double d) { r.p_d = d; });
  field("K_xx", [](RockParams& r, double d) { r.K(0, 0) = d; });
  field("K_yy", [](RockParams& r, double d) { r.K(1, 1) = d; });
  field("K_xy", [](RockParams& r, double d) { r.K(0, 1) = r.K(1, 0) = d; });
  field("K", [](RockParams& r, double d) { r.K = d * Mat2::Identity(); });
}

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> table = [] {
    std::map<std::string, Handler> h;
    auto num = [&](const std::string& key, auto apply) {
      h[key] = [apply](RunConfig& c, const std::string& k, const std::string& v) { apply(c, to_double(k, v)); };
    };
    auto integer = [&](const std::string& key, auto apply) {
      h[key] = [apply](RunConfig& c, const std::string& k, const std::string& v) { apply(c, to_int(k, v)); };
    };
    auto flag = [&](const std::string& key, auto apply) {
      h[key] = [apply](RunConfig& c, const std::string& k, const std::string& v) { apply(c, to_bool(k, v)); };
    };
    h["problem.preset"] = [](RunConfig&, const std::string&, const std::string&) {};  // consumed first
    h["problem.model"] = [](RunConfig& c, const std::string&, const std::string& v) {
      make_model(v);
      c.model = v;
    };
    num("problem.final_time", [](RunConfig& c, double d) { c.setup.final_time = d; });
    flag("problem.cutoff", [](RunConfig& c, bool b) { c.setup.cutoff.enabled = b; });
    num("problem.cutoff_epsilon", [](RunConfig& c, double d) { c.setup.cutoff.epsilon = d; });
    num("problem.q_w", [](RunConfig& c, double d) { c.setup.q_w = d; });
    num("problem.q_n", [](RunConfig& c, double d) { c.setup.q_n = d; });

    integer("mesh.nx", [](RunConfig& c, int n) { c.setup.macro_nx = n; });
    integer("mesh.ny", [](RunConfig& c, int n) { c.setup.macro_ny = n; });
    num("mesh.width", [](RunConfig& c, double d) { c.setup.extent.x() = d; });
    num("mesh.height", [](RunConfig& c, double d) { c.setup.extent.y() = d; });

    num("fluid.rho_w", [](RunConfig& c, double d) { c.setup.fluids.rho_w = d; });
    num("fluid.rho_n", [](RunConfig& c, double d) { c.setup.fluids.rho_n = d; });
    num("fluid.mu_w", [](RunConfig& c, double d) { c.setup.fluids.mu_w = d; });
    num("fluid.mu_n", [](RunConfig& c, double d) { c.setup.fluids.mu_n = d; });
    num("fluid.g", [](RunConfig& c, double d) { c.setup.fluids.g = Vec2(0.0, -d); });

    rock_handlers(h, "rock.exterior.", &ProblemSetup::exterior);
    rock_handlers(h, "rock.lens.", &ProblemSetup::lens);
    num("lens.center_x", [](RunConfig& c, double d) { c.setup.lens_box.center.x() = d; });
    num("lens.center_y", [](RunConfig& c, double d) { c.setup.lens_box.center.y() = d; });
    num("lens.half_width", [](RunConfig& c, double d) { c.setup.lens_box.half.x() = d; });
    num("lens.half_height", [](RunConfig& c, double d) { c.setup.lens_box.half.y() = d; });
    num("boundary.inflow_center", [](RunConfig& c, double d) { c.setup.inflow_center_x = d; });
    num("boundary.inflow_half_width", [](RunConfig& c, double d) { c.setup.inflow_half_width = d; });
    num("boundary.J_n", [](RunConfig& c, double d) { c.setup.inflow_J_n = d; });
    num("boundary.J_w", [](RunConfig& c, double d) { c.setup.inflow_J_w = d; });

    h["scheme.kind"] = [](RunConfig& c, const std::string&, const std::string& v) {
      c.scheme.kind = parse_scheme(v);
    };
    num("scheme.tau", [](RunConfig& c, double d) { c.scheme.tau = d; });
    num("scheme.alpha", [](RunConfig& c, double d) { c.scheme.alpha = d; });
    num("scheme.tol_iter", [](RunConfig& c, double d) { c.scheme.tol_iter = d; });
    integer("scheme.max_outer", [](RunConfig& c, int n) { c.scheme.max_outer = n; });
    flag("scheme.limit_each_newton_step", [](RunConfig& c, bool b) { c.scheme.limit_each_newton_step = b; });

    num("solver.atol", [](RunConfig& c, double d) { c.scheme.newton.atol = d; });
    num("solver.rtol", [](RunConfig& c, double d) { c.scheme.newton.rtol = d; });
    integer("solver.max_iterations", [](RunConfig& c, int n) { c.scheme.newton.max_iterations = n; });
    flag("solver.line_search", [](RunConfig& c, bool b) { c.scheme.newton.line_search = b; });
    integer("solver.direct_threshold",
            [](RunConfig& c, int n) { c.scheme.newton.linear.direct_threshold = static_cast<std::size_t>(n); });
    num("solver.krylov_tolerance", [](RunConfig& c, double d) { c.scheme.newton.linear.tolerance = d; });

    flag("limiter.enabled", [](RunConfig& c, bool b) { c.scheme.limiter.enabled = b; });
    num("limiter.s_min", [](RunConfig& c, double d) { c.scheme.limiter.s_min = d; });
    num("limiter.s_max", [](RunConfig& c, double d) { c.scheme.limiter.s_max = d; });
    flag("limiter.one_sided", [](RunConfig& c, bool b) { c.scheme.limiter.one_sided = b; });

    num("dg.beta", [](RunConfig& c, double d) { c.forms.beta = d; });
    num("dg.delta_point", [](RunConfig& c, double d) { c.forms.delta_point = d; });
    integer("dg.threads", [](RunConfig& c, int n) { c.forms.threads = n; });

    flag("adapt.h_adapt", [](RunConfig& c, bool b) { c.h_adapt = b; });
    integer("adapt.every", [](RunConfig& c, int n) { c.adapt_every = n; });
    integer("adapt.max_level", [](RunConfig& c, int n) { c.adapt.max_level = n; });
    integer("adapt.max_order", [](RunConfig& c, int n) { c.adapt.max_order = n; });
    h["adapt.p_strategy"] = [](RunConfig& c, const std::string&, const std::string& v) {
      c.adapt.p_strategy = parse_p_strategy(v);
    };
    num("adapt.initial_htol", [](RunConfig& c, double d) { c.adapt.initial_htol = d; });
    num("adapt.coarsen_factor", [](RunConfig& c, double d) { c.adapt.coarsen_factor = d; });
    num("adapt.ptol_diff_factor", [](RunConfig& c, double d) { c.adapt.ptol_diff_factor = d; });
    num("adapt.ptol_frac", [](RunConfig& c, double d) { c.adapt.ptol_frac = d; });
    flag("adapt.frac_level_gate", [](RunConfig& c, bool b) { c.adapt.frac_level_gate = b; });
    integer("adapt.initial_passes", [](RunConfig& c, int n) { c.adapt.initial_passes = n; });

    h["output.directory"] = [](RunConfig& c, const std::string&, const std::string& v) { c.output.directory = v; };
    integer("output.every", [](RunConfig& c, int n) { c.output.every = n; });
    h["output.times"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.output.times = to_list(k, v); };
    integer("output.line_samples", [](RunConfig& c, int n) { c.output.line_samples = n; });
    flag("output.vtk", [](RunConfig& c, bool b) { c.output.vtk = b; });
    flag("output.quiet", [](RunConfig& c, bool b) { c.quiet = b; });
    return h;
  }();
  return table;
}

}  // namespace

RunConfig RunConfig::defaults(const std::string& preset) {
  RunConfig c;
  c.preset = preset;
  c.setup = make_setup(preset);
  c.scheme.kind = SchemeKind::implicit;
  c.scheme.tau = 3.0;
  c.output.times.clear();
  for (int k = 1; k <= 4; ++k) c.output.times.push_back(c.setup.final_time * k / 4.0);
  return c;
}

RunConfig RunConfig::from_settings(const Settings& settings) {
  const auto it = settings.find("problem.preset");
  RunConfig c = defaults(it == settings.end() ? "anisotropic_lens" : it->second);
  const double preset_time = c.setup.final_time;
  bool times_given = false;
  for (const auto& [key, value] : settings) {
    const auto h = handlers().find(key);
    if (h == handlers().end()) throw ConfigurationError("unknown configuration key '" + key + "'");
    h->second(c, key, value);
    times_given = times_given || key == "output.times";
  }
  if (!times_given && c.setup.final_time != preset_time) {
    c.output.times.clear();
    for (int k = 1; k <= 4; ++k) c.output.times.push_back(c.setup.final_time * k / 4.0);
  }
  bind_lens_box_data(c.setup);
  c.validate();
  return c;
}

void RunConfig::validate() const {
  setup.validate();
  make_model(model);
  scheme.validate();
  if (scheme.tau > setup.final_time && setup.final_time > 0.0)
    throw ConfigurationError("time step exceeds the final time");
  if (adapt.max_level < 0) throw ConfigurationError("max_level must be non-negative");
  if (adapt.max_order < 1) throw ConfigurationError("max_order must be at least 1");
  if (adapt_every < 1) throw ConfigurationError("adapt.every must be positive");
  if (output.line_samples < 2) throw ConfigurationError("line sampling needs at least two points");
  if (!(scheme.limiter.s_min < scheme.limiter.s_max)) throw ConfigurationError("limiter bounds are inverted");
}

// ---------------------------------------------------------------------------

Simulation::Simulation(RunConfig config) : config_(std::move(config)) {
  config_.validate();
  model_ = make_model(config_.model);
  FormConfig forms = config_.forms;
  if (!(forms.beta > 0.0)) forms.beta = config_.adapt.max_order * (config_.adapt.max_order + 1.0);
  disc_ = std::make_unique<Discretization>(config_.setup, *model_, forms);
}

void Simulation::project_initial(DgFunction& u) const {
  const ProblemSetup& s = config_.setup;
  const Model& m = *model_;
  l2_project(u, Field::saturation, s.initial_s_n);
  l2_project(u, Field::pressure, [&](const Vec2& x) {
    return m.pressure_from_wetting(s.rock(x), s.fluids, s.initial_p_w(x), s.initial_s_n(x), s.cutoff);
  });
  apply_scaling_limiter(u, config_.scheme.limiter);
}

void Simulation::initialize() {
  const ProblemSetup& s = config_.setup;
  const AdaptConfig& ac = config_.adapt;
  mesh_ = Mesh::build_macro(s.macro_nx, s.macro_ny, s.extent, ac.max_level, ac.max_order);
  const double T = s.final_time;
  const double tau = config_.scheme.tau;
  n_steps_ = T > 0.0 ? static_cast<int>(std::ceil(T / tau - 1e-9)) : 0;
  state_ = TimeState{};
  state_.u = DgFunction(make_space());
  project_initial(state_.u);
  if (config_.h_adapt) {
    const int passes = ac.initial_passes < 0 ? ac.max_level : ac.initial_passes;
    for (int pass = 0; pass < passes; ++pass) {
      const auto eta = compute_estimator(state_.u, state_.u, tau, *disc_);
      const auto marks = mark_h(eta, mesh_.elements(), ac.initial_htol, ac.max_level, ac.coarsen_factor);
      const AdaptReport report = mesh_.execute_marks(marks);
      if (!report.changed()) break;
      state_.u = DgFunction(make_space());
      project_initial(state_.u);
    }
  }
  eta_ = compute_estimator(state_.u, state_.u, tau, *disc_);
  ttol_ = T > 0.0 ? compute_ttol(eta_, T) : 0.0;
  initial_dofs_ = state_.u.space().n_dofs();
}

bool Simulation::finished() const { return state_.step >= n_steps_; }

void Simulation::h_adapt(DgFunction& u, DgFunction& u_old, double htol, StepRecord& rec) {
  const auto marks = mark_h(eta_, mesh_.elements(), htol, config_.adapt.max_level, config_.adapt.coarsen_factor);
  const AdaptReport report = mesh_.execute_marks(marks);
  rec.max_elements_seen = std::max(rec.max_elements_seen, mesh_.size());
  if (!report.changed()) return;
  const SpacePtr space = make_space();
  u = transfer_on_adapt(u, report, space);
  u_old = transfer_on_adapt(u_old, report, space);
}

void Simulation::p_adapt(DgFunction& u, DgFunction& u_old, double htol) {
  const AdaptConfig& ac = config_.adapt;
  const double step_tau = last_tau_;
  const auto eta_r = compute_estimator(u, u_old, step_tau, *disc_);
  const DgFunction lower = project_to_lower_order(u);
  const auto eta_rm1 = compute_estimator(lower, u_old, step_tau, *disc_);
  std::vector<int> orders;
  if (ac.p_strategy == PStrategy::diff)
    orders = mark_p_diff(eta_r, eta_rm1, mesh_.elements(), htol * ac.ptol_diff_factor, ac.max_order);
  else
    orders = mark_p_frac(eta_r, eta_rm1, mesh_.elements(), ac.ptol_frac, ac.max_order, ac.max_level,
                         ac.frac_level_gate);
  bool same = true;
  for (std::size_t e = 0; e < orders.size() && same; ++e) same = orders[e] == mesh_.elements()[e].order;
  if (same) return;
  mesh_.set_orders(orders);
  const SpacePtr space = make_space();
  u = change_orders(u, space);
  u_old = change_orders(u_old, space);
}

StepRecord Simulation::step() {
  StepRecord rec;
  const double T = config_.setup.final_time;
  SchemeConfig scheme = config_.scheme;
  const int next = state_.step + 1;
  scheme.tau = next == n_steps_ ? T - state_.t : config_.scheme.tau;
  if (!(scheme.tau > 0.0)) scheme.tau = config_.scheme.tau;
  last_tau_ = scheme.tau;
  DgFunction u_old = state_.u;
  const StepDiagnostics diag = advance(state_, scheme, *disc_);
  rec.step = next;
  rec.outer_iterations = diag.outer_iterations;
  rec.newton_iterations = diag.newton_iterations;
  rec.residual = diag.residual;
  rec.max_elements_seen = mesh_.size();
  if (!diag.ok) {
    rec.ok = false;
    rec.reason = diag.reason;
    rec.t = state_.t + scheme.tau;
    rec.dofs = state_.u.space().n_dofs();
    rec.elements = mesh_.size();
    return rec;
  }
  state_.t = next == n_steps_ ? T : next * config_.scheme.tau;
  rec.t = state_.t;

  // post-limiter range over all limiter points
  rec.s_min = 1e300;
  rec.s_max = -1e300;
  const DgFunction& u = state_.u;
  for (std::size_t e = 0; e < u.space().size(); ++e) {
    for (const Vec2& xi : limiter_points(u.space(), static_cast<int>(e))) {
      const double v = u.value_ref(static_cast<int>(e), Field::saturation, xi);
      rec.s_min = std::min(rec.s_min, v);
      rec.s_max = std::max(rec.s_max, v);
    }
  }

  try {
    eta_ = compute_estimator(state_.u, u_old, scheme.tau, *disc_);
  } catch (const AssemblyError& err) {
    rec.ok = false;
    rec.reason = std::string("estimator: ") + err.what();
    return rec;
  }
  for (double v : eta_) rec.sum_eta2 += v;

  const bool adapt_now = next % config_.adapt_every == 0 && next < n_steps_;
  if (adapt_now && (config_.h_adapt || config_.adapt.p_strategy != PStrategy::off)) {
    const double htol = compute_htol(ttol_, scheme.tau, mesh_.size());
    try {
      if (config_.h_adapt) h_adapt(state_.u, u_old, htol, rec);
      if (config_.adapt.p_strategy != PStrategy::off) p_adapt(state_.u, u_old, htol);
    } catch (const AssemblyError& err) {
      rec.ok = false;
      rec.reason = std::string("adaptation: ") + err.what();
      return rec;
    }
  }

  rec.dofs = state_.u.space().n_dofs();
  rec.elements = mesh_.size();
  rec.max_elements_seen = std::max(rec.max_elements_seen, mesh_.size());
  rec.min_level = 1 << 30;
  rec.max_level = 0;
  rec.order_histogram.assign(config_.adapt.max_order + 1, 0);
  for (const Element& el : mesh_.elements()) {
    rec.min_level = std::min(rec.min_level, el.level);
    rec.max_level = std::max(rec.max_level, el.level);
    if (el.order < static_cast<int>(rec.order_histogram.size())) ++rec.order_histogram[el.order];
  }
  return rec;
}

// ---------------------------------------------------------------------------

LineSample line_sample(const DgFunction& u, int n, Vec2 a, Vec2 b) {
  if (n < 2) throw ConfigurationError("line sampling needs at least two points");
  LineSample line;
  line.a = a;
  line.b = b;
  for (int j = 0; j < n; ++j) {
    const double sigma = static_cast<double>(j) / (n - 1);
    const Vec2 x = (1.0 - sigma) * a + sigma * b;
    line.sigma.push_back(sigma);
    line.points.push_back(x);
    line.values.push_back(u.evaluate(Field::saturation, x));
  }
  return line;
}

std::optional<double> front_position(const LineSample& line, double threshold) {
  for (std::size_t j = 0; j < line.values.size(); ++j)
    if (line.values[j] > threshold) return line.sigma[j];
  return std::nullopt;
}

void write_vtk(const DgFunction& u, const std::vector<double>& eta, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  const DgSpace& space = u.space();
  const std::size_t n = space.size();
  out << "# vtk DataFile Version 3.0\ndgflow solution\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << 4 * n << " double\n" << std::setprecision(12);
  const Vec2 corners[4] = {Vec2(-1, -1), Vec2(1, -1), Vec2(1, 1), Vec2(-1, 1)};
  for (std::size_t e = 0; e < n; ++e)
    for (const Vec2& c : corners) {
      const Vec2 x = space.element(static_cast<int>(e)).to_physical(c);
      out << x.x() << ' ' << x.y() << " 0\n";
    }
  out << "CELLS " << n << ' ' << 5 * n << '\n';
  for (std::size_t e = 0; e < n; ++e)
    out << "4 " << 4 * e << ' ' << 4 * e + 1 << ' ' << 4 * e + 2 << ' ' << 4 * e + 3 << '\n';
  out << "CELL_TYPES " << n << '\n';
  for (std::size_t e = 0; e < n; ++e) out << "9\n";
  out << "CELL_DATA " << n << '\n';
  auto scalar = [&](const char* name, const char* type, auto value) {
    out << "SCALARS " << name << ' ' << type << " 1\nLOOKUP_TABLE default\n";
    for (std::size_t e = 0; e < n; ++e) out << value(static_cast<int>(e)) << '\n';
  };
  scalar("s_n", "double", [&](int e) { return u.mean(e, Field::saturation); });
  scalar("p", "double", [&](int e) { return u.mean(e, Field::pressure); });
  scalar("level", "int", [&](int e) { return space.element(e).level; });
  scalar("order", "int", [&](int e) { return space.order(e); });
  scalar("eta", "double", [&](int e) { return e < static_cast<int>(eta.size()) ? eta[e] : 0.0; });
  out << "POINT_DATA " << 4 * n << '\n';
  out << "SCALARS s_n double 1\nLOOKUP_TABLE default\n";
  for (std::size_t e = 0; e < n; ++e)
    for (const Vec2& c : corners) out << u.value_ref(static_cast<int>(e), Field::saturation, c) << '\n';
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

void write_line_csv(const LineSample& line, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "sigma,x,y,s_n\n" << std::setprecision(12);
  for (std::size_t j = 0; j < line.values.size(); ++j)
    out << line.sigma[j] << ',' << line.points[j].x() << ',' << line.points[j].y() << ',' << line.values[j] << '\n';
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

namespace {

std::string time_tag(double t) {
  std::ostringstream s;
  s << std::setprecision(10) << t;
  return s.str();
}

}  // namespace

RunResult run(const RunConfig& config, std::ostream* log, std::function<void(const Simulation&, const StepRecord&)> observer) {
  const auto start = std::chrono::steady_clock::now();
  RunResult result;
  Simulation sim(config);
  sim.initialize();
  result.initial_dofs = sim.initial_dofs();
  result.max_elements = sim.mesh().size();

  const OutputConfig& oc = config.output;
  const bool files = !oc.directory.empty();
  namespace fs = std::filesystem;
  std::ofstream diag;
  if (files) {
    fs::create_directories(oc.directory);
    diag.open(fs::path(oc.directory) / "diagnostics.csv");
    if (!diag) throw std::runtime_error("cannot write diagnostics in '" + oc.directory + "'");
    diag << "t,dofs,elements,sum_eta2,outer_iters,newton_iters,scheme,residual,min_level,max_level";
    for (int r = 0; r <= config.adapt.max_order; ++r) diag << ",order_" << r;
    diag << '\n' << std::setprecision(12);
  }
  auto snapshot = [&](const Simulation& s) {
    if (!files) return;
    const std::string tag = time_tag(s.time());
    if (oc.vtk) {
      std::ostringstream name;
      name << "solution_" << std::setw(5) << std::setfill('0') << s.step_index() << ".vtk";
      write_vtk(s.solution(), s.estimator(), (fs::path(oc.directory) / name.str()).string());
    }
    write_line_csv(line_sample(s.solution(), oc.line_samples), (fs::path(oc.directory) / ("line_" + tag + ".csv")).string());
  };
  snapshot(sim);

  const double T = config.setup.final_time;
  auto wanted = [&](const Simulation& s) {
    if (s.finished()) return true;
    if (oc.every > 0 && s.step_index() % oc.every == 0) return true;
    for (double t : oc.times)
      if (std::abs(s.time() - t) <= 1e-9 * std::max(1.0, T)) return true;
    return false;
  };

  while (!sim.finished()) {
    StepRecord rec = sim.step();
    result.max_elements = std::max(result.max_elements, rec.max_elements_seen);
    if (files) {
      diag << rec.t << ',' << rec.dofs << ',' << rec.elements << ',' << rec.sum_eta2 << ',' << rec.outer_iterations
           << ',' << rec.newton_iterations << ',' << to_string(config.scheme.kind) << ',' << rec.residual << ','
           << rec.min_level << ',' << rec.max_level;
      for (int r = 0; r <= config.adapt.max_order; ++r)
        diag << ',' << (r < static_cast<int>(rec.order_histogram.size()) ? rec.order_histogram[r] : 0);
      diag << '\n';
      diag.flush();
    }
    if (log && !config.quiet) {
      *log << "step " << rec.step << " t=" << rec.t << " elements=" << rec.elements << " dofs=" << rec.dofs
           << " newton=" << rec.newton_iterations << " outer=" << rec.outer_iterations;
      if (rec.ok) *log << " s=[" << rec.s_min << ", " << rec.s_max << "]";
      else *log << " FAILED: " << rec.reason;
      *log << std::endl;
    }
    result.records.push_back(rec);
    if (observer) observer(sim, rec);
    if (!rec.ok) {
      result.ok = false;
      result.reason = "step " + std::to_string(rec.step) + " (scheme " + to_string(config.scheme.kind) + ", t=" +
                      time_tag(rec.t) + "): " + rec.reason;
      break;
    }
    if (wanted(sim)) snapshot(sim);
  }
  result.final_time = sim.time();
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (files) {
    std::ofstream sum(fs::path(oc.directory) / "summary.txt");
    std::size_t newton = 0, outer = 0;
    for (const auto& r : result.records) {
      newton += r.newton_iterations;
      outer += r.outer_iterations;
    }
    sum << "preset: " << config.preset << '\n'
        << "model: " << config.model << '\n'
        << "scheme: " << to_string(config.scheme.kind) << '\n'
        << "tau: " << config.scheme.tau << '\n'
        << "final_time: " << T << '\n'
        << "reached_time: " << result.final_time << '\n'
        << "steps: " << result.records.size() << '\n'
        << "status: " << (result.ok ? "ok" : "failed") << '\n';
    if (!result.ok) sum << "failure: " << result.reason << '\n';
    sum << "initial_dofs: " << result.initial_dofs << '\n'
        << "max_elements: " << result.max_elements << '\n'
        << "total_newton_iterations: " << newton << '\n'
        << "total_outer_iterations: " << outer << '\n'
        << "wall_seconds: " << result.wall_seconds << '\n';
  }
  return result;
}

}  // namespace dgflow
