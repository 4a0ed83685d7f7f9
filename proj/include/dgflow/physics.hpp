#pragma once

#include "dgflow/common.hpp"
#include "dgflow/mesh.hpp"

#include <functional>
#include <memory>
#include <string>

namespace dgflow {

struct FluidParams {
  double rho_w = 1000.0;
  double rho_n = 1460.0;
  double mu_w = 1.0e-3;
  double mu_n = 9.0e-4;
  Vec2 g = Vec2(0.0, -9.810);

  void validate() const;
};

struct RockParams {
  double porosity = 0.4;
  double s_wr = 0.0;
  double s_nr = 0.0;
  double theta = 2.0;
  double p_d = 0.0;
  Mat2 K = Mat2::Identity();

  void validate() const;
  /// nu^T K nu
  double normal_permeability(const Vec2& nu) const { return nu.dot(K * nu); }
};

/// Brooks-Corey outputs at one saturation. Derivatives are with respect to s_n
/// and vanish where a cut-off clamps the corresponding effective saturation;
/// dp_c is a model coefficient and keeps its chain factor under the clamp.
struct CapillaryOutputs {
  double p_c = 0.0;
  double dp_c = 0.0;   // p_c'(s_n) as a model coefficient
  double ddp_c = 0.0;  // derivative of dp_c
  double lambda_n = 0.0, lambda_w = 0.0;
  double dlambda_n = 0.0, dlambda_w = 0.0;
};

struct CutoffConfig {
  bool enabled = false;
  double epsilon = 1.0e-5;
};

CapillaryOutputs brooks_corey(const RockParams& rock, const FluidParams& fluids, double s_n,
                              const CutoffConfig& cutoff = {});

/// Multipliers of the permeability tensor at one point:
///   A_pp = pp K, A_ps = ps K, A_sp = sp K, A_ss = ss K,
///   G_p = gp K g, G_s = gs K g,
/// plus their derivatives with respect to the saturation argument.
struct PointCoefficients {
  double pp = 0, ps = 0, sp = 0, ss = 0, gp = 0, gs = 0;
  double dpp = 0, dps = 0, dsp = 0, dss = 0, dgp = 0, dgs = 0;
};

class Model {
 public:
  virtual ~Model() = default;
  virtual std::string name() const = 0;
  virtual PointCoefficients coefficients(const RockParams& rock, const FluidParams& fluids, double s,
                                         const CutoffConfig& cutoff) const = 0;
  /// Gravity offset inside the saturation flux, A_sp (grad p - P_g).
  virtual Vec2 gravity_offset(const FluidParams& fluids) const { return fluids.rho_n * fluids.g; }
  /// Pressure unknown from the wetting pressure (identity for Model A).
  virtual double pressure_from_wetting(const RockParams&, const FluidParams&, double p_w, double,
                                       const CutoffConfig&) const {
    return p_w;
  }
  /// Penalty weights delta_p, delta_s (largest eigenvalue of A_pp, A_ss at s = point, per unit k).
  double delta_p(const RockParams& rock, const FluidParams& fluids, double point, const CutoffConfig& c) const {
    return coefficients(rock, fluids, point, c).pp;
  }
  double delta_s(const RockParams& rock, const FluidParams& fluids, double point, const CutoffConfig& c) const {
    return coefficients(rock, fluids, point, c).ss;
  }
};

/// Wetting pressure / nonwetting saturation formulation.
class ModelA : public Model {
 public:
  std::string name() const override { return "A"; }
  PointCoefficients coefficients(const RockParams& rock, const FluidParams& fluids, double s,
                                 const CutoffConfig& cutoff) const override;
};

/// Average pressure p_w + p_c/2 / nonwetting saturation formulation.
class ModelB : public Model {
 public:
  std::string name() const override { return "B"; }
  PointCoefficients coefficients(const RockParams& rock, const FluidParams& fluids, double s,
                                 const CutoffConfig& cutoff) const override;
  double pressure_from_wetting(const RockParams& rock, const FluidParams& fluids, double p_w, double s,
                               const CutoffConfig& cutoff) const override;
};

/// Saturation-independent coefficients (testing aid).
class ConstantModel : public Model {
 public:
  explicit ConstantModel(PointCoefficients c, Vec2 gravity_offset = Vec2::Zero())
      : c_(c), offset_(std::move(gravity_offset)) {
    c_.dpp = c_.dps = c_.dsp = c_.dss = c_.dgp = c_.dgs = 0.0;
  }
  std::string name() const override { return "constant"; }
  PointCoefficients coefficients(const RockParams&, const FluidParams&, double, const CutoffConfig&) const override {
    return c_;
  }
  Vec2 gravity_offset(const FluidParams&) const override { return offset_; }

 private:
  PointCoefficients c_;
  Vec2 offset_;
};

std::unique_ptr<Model> make_model(const std::string& name);

/// Boundary data at one boundary point. Fluxes are outward normal phase
/// velocities (negative = inflow); J_p = J_n + J_w enters the pressure equation
/// and J_n the saturation equation.
struct BoundaryData {
  bool p_dirichlet = false;
  bool s_dirichlet = false;
  double p_w = 0.0;  // wetting pressure on Dirichlet parts
  double s_n = 0.0;
  double J_n = 0.0;
  double J_w = 0.0;
};

struct Box {
  Vec2 center = Vec2::Zero();
  Vec2 half = Vec2::Zero();
  bool contains(const Vec2& x) const {
    return std::abs(x.x() - center.x()) < half.x() && std::abs(x.y() - center.y()) < half.y();
  }
};

struct ProblemSetup {
  std::string name;
  Vec2 extent = Vec2(1.0, 1.0);
  int macro_nx = 1, macro_ny = 1;
  FluidParams fluids;
  RockParams exterior;
  RockParams lens;
  Box lens_box;  // empty box: homogeneous
  CutoffConfig cutoff;
  double final_time = 0.0;
  double q_w = 0.0, q_n = 0.0;  // constant sources

  // lens box data used by bind_lens_box_data
  double inflow_center_x = 0.45;
  double inflow_half_width = 0.06;
  double inflow_J_n = -5.137e-5;
  double inflow_J_w = 0.0;

  std::function<double(const Vec2&)> initial_p_w;
  std::function<double(const Vec2&)> initial_s_n;
  std::function<BoundaryData(BoundarySide, const Vec2&)> boundary;

  const RockParams& rock(const Vec2& x) const { return lens_box.contains(x) ? lens : exterior; }
  bool in_lens(const Vec2& x) const { return lens_box.contains(x); }
  void validate() const;
};

/// (Re)creates initial and boundary callbacks of the lens boxes from the
/// scalar fields of the setup (hydrostatic side walls, top inflow window).
void bind_lens_box_data(ProblemSetup& setup);

/// Sand box with a low-permeability lens, anisotropic exterior.
ProblemSetup anisotropic_lens_setup();
/// Same box, isotropic permeabilities and a weaker lens.
ProblemSetup isotropic_weak_lens_setup();
ProblemSetup make_setup(const std::string& preset);

}  // namespace dgflow
