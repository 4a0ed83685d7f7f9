#pragma once

#include "dgflow/adapt.hpp"
#include "dgflow/stepper.hpp"

#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace dgflow {

/// Flat "section.key" -> value settings (INI sections mapped to prefixes).
using Settings = std::map<std::string, std::string>;

Settings read_settings_file(const std::string& path);
/// Applies "section.key=value"; rejects malformed items.
void apply_override(Settings& settings, const std::string& item);

struct OutputConfig {
  std::string directory;  // empty: no files
  int every = 50;         // steps; <= 0 disables the cadence
  std::vector<double> times;
  int line_samples = 512;
  bool vtk = true;
};

struct RunConfig {
  std::string preset = "anisotropic_lens";
  std::string model = "A";
  ProblemSetup setup;  // filled from the preset plus overrides
  SchemeConfig scheme;
  AdaptConfig adapt;
  FormConfig forms;
  bool h_adapt = true;
  int adapt_every = 1;
  OutputConfig output;
  bool quiet = false;

  /// Defaults of the named preset.
  static RunConfig defaults(const std::string& preset = "anisotropic_lens");
  /// Builds a configuration from settings; unknown keys are errors.
  static RunConfig from_settings(const Settings& settings);
  void validate() const;
};

struct StepRecord {
  int step = 0;
  double t = 0.0;
  std::size_t dofs = 0;
  std::size_t elements = 0;
  double sum_eta2 = 0.0;
  int outer_iterations = 0;
  int newton_iterations = 0;
  double residual = 0.0;
  int min_level = 0, max_level = 0;
  std::vector<int> order_histogram;  // index = order
  double s_min = 0.0, s_max = 0.0;  // post-limiter extremes over all limiter points
  std::size_t max_elements_seen = 0;  // leaf count peak inside this step (incl. adaptation)
  bool ok = true;
  std::string reason;
};

/// Owns mesh and state; drives step -> estimate -> adapt -> transfer.
class Simulation {
 public:
  explicit Simulation(RunConfig config);

  /// Builds the macro mesh, projects the initial data and runs the initial adaptation.
  void initialize();
  /// One time step plus adaptation; returns the record (ok = false on failure).
  StepRecord step();
  bool finished() const;

  const RunConfig& config() const { return config_; }
  const Mesh& mesh() const { return mesh_; }
  const DgFunction& solution() const { return state_.u; }
  double time() const { return state_.t; }
  int step_index() const { return state_.step; }
  int total_steps() const { return n_steps_; }
  const std::vector<double>& estimator() const { return eta_; }
  double ttol() const { return ttol_; }
  const Discretization& discretization() const { return *disc_; }
  /// DOFs and leaves right after the initial adaptation.
  std::size_t initial_dofs() const { return initial_dofs_; }

 private:
  void project_initial(DgFunction& u) const;
  void h_adapt(DgFunction& u, DgFunction& u_old, double htol, StepRecord& rec);
  void p_adapt(DgFunction& u, DgFunction& u_old, double htol);
  SpacePtr make_space() const { return std::make_shared<const DgSpace>(mesh_); }

  RunConfig config_;
  std::unique_ptr<Model> model_;
  std::unique_ptr<Discretization> disc_;
  Mesh mesh_;
  TimeState state_;
  std::vector<double> eta_;
  double ttol_ = 0.0;
  double last_tau_ = 0.0;
  int n_steps_ = 0;
  std::size_t initial_dofs_ = 0;
};

/// Points x(sigma) = (1 - sigma) a + sigma b, sigma_j = j / (n - 1).
struct LineSample {
  Vec2 a = Vec2(0.25, 0.65);
  Vec2 b = Vec2(0.775, 0.39);
  std::vector<double> sigma;
  std::vector<Vec2> points;
  std::vector<double> values;
};

LineSample line_sample(const DgFunction& u, int n, Vec2 a = Vec2(0.25, 0.65), Vec2 b = Vec2(0.775, 0.39));
/// Smallest sigma with value > threshold, or nullopt.
std::optional<double> front_position(const LineSample& line, double threshold = 0.05);

void write_vtk(const DgFunction& u, const std::vector<double>& eta, const std::string& path);
void write_line_csv(const LineSample& line, const std::string& path);

struct RunResult {
  bool ok = true;
  std::string reason;
  std::vector<StepRecord> records;
  std::size_t initial_dofs = 0;
  std::size_t max_elements = 0;
  double final_time = 0.0;
  double wall_seconds = 0.0;
};

/// Runs the whole configuration, writing outputs when a directory is set.
RunResult run(const RunConfig& config, std::ostream* log = nullptr,
              std::function<void(const Simulation&, const StepRecord&)> observer = {});

}  // namespace dgflow
