#pragma once

#include "dgflow/dgspace.hpp"
#include "dgflow/physics.hpp"

#include <Eigen/Sparse>

namespace dgflow {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

enum class FieldSet { coupled, pressure_only, saturation_only };

const char* to_string(FieldSet set);

/// Compact numbering of the unknowns of the selected fields.
class DofMap {
 public:
  DofMap(const DgSpace& space, FieldSet fields);

  FieldSet fields() const { return fields_; }
  bool has(Field f) const { return slot_[static_cast<int>(f)] >= 0; }
  int n_selected() const { return n_selected_; }
  std::size_t size() const { return offsets_.back(); }
  std::size_t offset(int e) const { return offsets_[e]; }
  int local_size(int e) const { return static_cast<int>(offsets_[e + 1] - offsets_[e]); }
  /// Position of (field, mode) inside the element block, or -1.
  int local(int e, Field f, int mode) const {
    const int s = slot_[static_cast<int>(f)];
    return s < 0 ? -1 : s * space_->n_modes(e) + mode;
  }

  void gather(const DgFunction& u, Eigen::VectorXd& x) const;
  void scatter(const Eigen::VectorXd& x, DgFunction& u) const;

 private:
  const DgSpace* space_;
  FieldSet fields_;
  int slot_[2] = {-1, -1};
  int n_selected_ = 0;
  std::vector<std::size_t> offsets_;
};

struct FormConfig {
  /// Penalty scaling; <= 0 selects r (r + 1) with r the largest order of the space.
  double beta = -1.0;
  /// Saturation at which the penalty weights delta_p, delta_s are evaluated.
  double delta_point = 0.5;
  int threads = 1;
};

/// Arguments of one residual/Jacobian evaluation. All functions live on the
/// same space. With `implicit` the coefficient argument follows the unknown
/// saturation; otherwise it is the saturation field of `s_bar`.
struct AssemblyInput {
  const DgFunction* u = nullptr;
  const DgFunction* u_old = nullptr;
  const DgFunction* s_bar = nullptr;
  bool implicit = true;
  double tau = 1.0;
  double alpha = 1.0;
  FieldSet fields = FieldSet::coupled;
};

struct AssembledSystem {
  Eigen::VectorXd residual;
  SparseMatrix jacobian;  // empty when not requested
};

/// {q}_w = w- q- + w+ q+ with w- = k+/(k+ + k-), w+ = k-/(k+ + k-).
double weighted_average(double q_minus, double q_plus, double k_minus, double k_plus);

/// Harmonic-type weight 2 k+ k- / (k+ + k-).
double harmonic_weight(double k_minus, double k_plus);

struct PenaltyFactors {
  double gamma_p = 0.0;
  double gamma_s = 0.0;
};

/// Rock data on both sides of a face point (one-sided limits).
struct FaceRocks {
  const RockParams* minus = nullptr;
  const RockParams* plus = nullptr;  // null on the boundary
};

/// Values and physical gradients of (p, s) at a point of one element.
struct PointValues {
  double p = 0.0, s = 0.0;
  Vec2 grad_p = Vec2::Zero(), grad_s = Vec2::Zero();
};

PointValues point_values(const DgFunction& u, int e, const basis::Evaluation& ev);

/// Residual forms of the pressure and (time-discrete) saturation equations.
class Discretization {
 public:
  Discretization(const ProblemSetup& setup, const Model& model, FormConfig config = {});

  const ProblemSetup& setup() const { return *setup_; }
  const Model& model() const { return *model_; }
  const FormConfig& config() const { return config_; }
  double beta(const DgSpace& space) const;

  FaceRocks face_rocks(const Face& face, const Vec2& x) const;
  /// Penalty factors gamma_e^p, gamma_e^s (without beta) at a face point.
  PenaltyFactors penalty_factors(const Face& face, const DgSpace& space, const Vec2& x) const;

  PointCoefficients coefficients(const RockParams& rock, double s) const {
    return model_->coefficients(rock, setup_->fluids, s, setup_->cutoff);
  }
  /// Saturation-equation flux A_sp (grad p - P_g) + A_ss grad s + G_s.
  Vec2 flux_s(const RockParams& rock, const PointCoefficients& c, const PointValues& v) const;
  Vec2 flux_p(const RockParams& rock, const PointCoefficients& c, const PointValues& v) const;
  /// Dirichlet value of the pressure unknown.
  double pressure_dirichlet(const RockParams& rock, const BoundaryData& bd) const {
    return model_->pressure_from_wetting(rock, setup_->fluids, bd.p_w, bd.s_n, setup_->cutoff);
  }

  AssembledSystem assemble(const AssemblyInput& in, bool with_jacobian = true) const;

 private:
  const ProblemSetup* setup_;
  const Model* model_;
  FormConfig config_;
  Vec2 gravity_offset_;
};

/// Face quadrature order shared by assembly, limiter and estimator.
inline int face_degree(const DgSpace& space, const Face& f) {
  const int r = std::max(space.order(f.inside), f.boundary() ? 0 : space.order(f.outside));
  return 2 * r + 1;
}
inline int volume_degree(int order) { return 2 * order + 1; }

}  // namespace dgflow
