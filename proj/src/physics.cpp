#include "dgflow/physics.hpp"

#include <algorithm>
#include <cmath>

namespace dgflow {

void FluidParams::validate() const {
  if (!(rho_w > 0 && rho_n > 0)) throw ConfigurationError("densities must be positive");
  if (!(mu_w > 0 && mu_n > 0)) throw ConfigurationError("viscosities must be positive");
  if (!g.allFinite()) throw ConfigurationError("gravity must be finite");
}

void RockParams::validate() const {
  if (!(porosity > 0 && porosity <= 1)) throw ConfigurationError("porosity must lie in (0, 1]");
  if (!(s_wr >= 0 && s_nr >= 0 && s_wr + s_nr < 1)) throw ConfigurationError("residual saturations invalid");
  if (!(theta > 0)) throw ConfigurationError("Brooks-Corey theta must be positive");
  if (!(p_d >= 0)) throw ConfigurationError("entry pressure must be non-negative");
  if (std::abs(K(0, 1) - K(1, 0)) > 1e-14 * K.norm()) throw ConfigurationError("permeability must be symmetric");
  if (!(K(0, 0) > 0 && K.determinant() > 0)) throw ConfigurationError("permeability must be positive definite");
}

CapillaryOutputs brooks_corey(const RockParams& rock, const FluidParams& fluids, double s_n,
                              const CutoffConfig& cutoff) {
  if (!std::isfinite(s_n)) throw DomainError("non-finite saturation");
  const double D = 1.0 - rock.s_wr - rock.s_nr;
  double s_we = (1.0 - s_n - rock.s_wr) / D;
  double s_ne = (s_n - rock.s_nr) / D;
  double dswe = -1.0 / D;
  double dsne = 1.0 / D;
  if (cutoff.enabled) {
    const double lo = cutoff.epsilon, hi = 1.0 - cutoff.epsilon;
    if (s_we < lo || s_we > hi) {
      s_we = std::clamp(s_we, lo, hi);
      dswe = 0.0;
    }
    if (s_ne < lo || s_ne > hi) {
      s_ne = std::clamp(s_ne, lo, hi);
      dsne = 0.0;
    }
  } else if (!(s_we > 0.0)) {
    throw DomainError("effective wetting saturation " + std::to_string(s_we) + " is not positive");
  }

  const double theta = rock.theta;
  const double a = (2.0 + 3.0 * theta) / theta;
  const double b = (2.0 + theta) / theta;
  const double pw_a = std::pow(s_we, a);
  const double pw_b = std::pow(s_we, b);
  const double k_rw = pw_a;
  const double dk_rw = a * std::pow(s_we, a - 1.0) * dswe;
  const double k_rn = s_ne * s_ne * (1.0 - pw_b);
  const double dk_rn = 2.0 * s_ne * dsne * (1.0 - pw_b) - s_ne * s_ne * b * std::pow(s_we, b - 1.0) * dswe;

  CapillaryOutputs out;
  out.p_c = rock.p_d * std::pow(s_we, -1.0 / theta);
  out.dp_c = rock.p_d * (-1.0 / theta) * std::pow(s_we, -1.0 / theta - 1.0) * (-1.0 / D);
  out.ddp_c = rock.p_d * (-1.0 / theta) * (-1.0 / theta - 1.0) * std::pow(s_we, -1.0 / theta - 2.0) * dswe * (-1.0 / D);
  out.lambda_w = k_rw / fluids.mu_w;
  out.lambda_n = k_rn / fluids.mu_n;
  out.dlambda_w = dk_rw / fluids.mu_w;
  out.dlambda_n = dk_rn / fluids.mu_n;
  return out;
}

PointCoefficients ModelA::coefficients(const RockParams& rock, const FluidParams& fluids, double s,
                                       const CutoffConfig& cutoff) const {
  const CapillaryOutputs bc = brooks_corey(rock, fluids, s, cutoff);
  PointCoefficients c;
  c.pp = bc.lambda_n + bc.lambda_w;
  c.ps = bc.lambda_n * bc.dp_c;
  c.sp = bc.lambda_n;
  c.ss = bc.lambda_n * bc.dp_c;
  c.gp = -(fluids.rho_w * bc.lambda_w + fluids.rho_n * bc.lambda_n);
  c.dpp = bc.dlambda_n + bc.dlambda_w;
  c.dps = bc.dlambda_n * bc.dp_c + bc.lambda_n * bc.ddp_c;
  c.dsp = bc.dlambda_n;
  c.dss = c.dps;
  c.dgp = -(fluids.rho_w * bc.dlambda_w + fluids.rho_n * bc.dlambda_n);
  return c;
}

PointCoefficients ModelB::coefficients(const RockParams& rock, const FluidParams& fluids, double s,
                                       const CutoffConfig& cutoff) const {
  const CapillaryOutputs bc = brooks_corey(rock, fluids, s, cutoff);
  PointCoefficients c;
  c.pp = bc.lambda_n + bc.lambda_w;
  c.ps = 0.5 * (bc.lambda_n - bc.lambda_w) * bc.dp_c;
  c.sp = bc.lambda_n;
  c.ss = 0.5 * bc.lambda_n * bc.dp_c;
  c.gp = -(fluids.rho_w * bc.lambda_w + fluids.rho_n * bc.lambda_n);
  c.dpp = bc.dlambda_n + bc.dlambda_w;
  c.dps = 0.5 * (bc.dlambda_n - bc.dlambda_w) * bc.dp_c + 0.5 * (bc.lambda_n - bc.lambda_w) * bc.ddp_c;
  c.dsp = bc.dlambda_n;
  c.dss = 0.5 * (bc.dlambda_n * bc.dp_c + bc.lambda_n * bc.ddp_c);
  c.dgp = -(fluids.rho_w * bc.dlambda_w + fluids.rho_n * bc.dlambda_n);
  return c;
}

double ModelB::pressure_from_wetting(const RockParams& rock, const FluidParams& fluids, double p_w, double s,
                                     const CutoffConfig& cutoff) const {
  return p_w + 0.5 * brooks_corey(rock, fluids, s, cutoff).p_c;
}

std::unique_ptr<Model> make_model(const std::string& name) {
  if (name == "A" || name == "a" || name == "modelA") return std::make_unique<ModelA>();
  if (name == "B" || name == "b" || name == "modelB") return std::make_unique<ModelB>();
  throw ConfigurationError("unknown model '" + name + "' (expected A or B)");
}

void ProblemSetup::validate() const {
  fluids.validate();
  exterior.validate();
  lens.validate();
  if (!(extent.x() > 0 && extent.y() > 0)) throw ConfigurationError("domain extent must be positive");
  if (macro_nx <= 0 || macro_ny <= 0) throw ConfigurationError("macro grid needs positive cell counts");
  if (!(final_time >= 0)) throw ConfigurationError("final time must be non-negative");
  if (!initial_p_w || !initial_s_n || !boundary) throw ConfigurationError("setup lacks initial or boundary data");
  // some Dirichlet pressure is required; probe the four sides
  bool any = false;
  for (int k = 0; k < 4 && !any; ++k) {
    const auto side = static_cast<BoundarySide>(k);
    for (int j = 0; j < 16 && !any; ++j) {
      const double t = (j + 0.5) / 16.0;
      const Vec2 x = side == BoundarySide::west    ? Vec2(0.0, t * extent.y())
                     : side == BoundarySide::east  ? Vec2(extent.x(), t * extent.y())
                     : side == BoundarySide::south ? Vec2(t * extent.x(), 0.0)
                                                   : Vec2(t * extent.x(), extent.y());
      any = boundary(side, x).p_dirichlet;
    }
  }
  if (!any) throw ConfigurationError("the pressure needs a Dirichlet boundary part");
}

void bind_lens_box_data(ProblemSetup& p) {
  const double height = p.extent.y();
  const double rho_g = p.fluids.rho_w * std::abs(p.fluids.g.y());
  const double cx = p.inflow_center_x, hw = p.inflow_half_width, jn = p.inflow_J_n, jw = p.inflow_J_w;
  p.initial_p_w = [height, rho_g](const Vec2& x) { return (height - x.y()) * rho_g; };
  p.initial_s_n = [](const Vec2&) { return 0.0; };
  p.boundary = [=](BoundarySide side, const Vec2& x) {
    BoundaryData d;
    if (side == BoundarySide::west || side == BoundarySide::east) {
      d.p_dirichlet = d.s_dirichlet = true;
      d.p_w = (height - x.y()) * rho_g;
      d.s_n = 0.0;
    } else if (side == BoundarySide::north && std::abs(x.x() - cx) < hw) {
      d.J_n = jn;
      d.J_w = jw;
    }
    return d;
  };
}

ProblemSetup anisotropic_lens_setup() {
  ProblemSetup p;
  p.name = "anisotropic_lens";
  p.extent = Vec2(0.9, 0.65);
  p.macro_nx = 10;
  p.macro_ny = 6;
  p.exterior.porosity = 0.40;
  p.exterior.s_wr = 0.12;
  p.exterior.s_nr = 0.0;
  p.exterior.theta = 2.7;
  p.exterior.p_d = 755.0;
  p.exterior.K << 1e-10, -5e-11, -5e-11, 1e-10;
  p.lens.porosity = 0.39;
  p.lens.s_wr = 0.10;
  p.lens.s_nr = 0.0;
  p.lens.theta = 2.0;
  p.lens.p_d = 5000.0;
  p.lens.K = 6.64e-14 * Mat2::Identity();
  p.lens_box = {Vec2(0.45, 0.49), Vec2(0.11, 0.03)};
  p.final_time = 800.0;
  bind_lens_box_data(p);
  return p;
}

ProblemSetup isotropic_weak_lens_setup() {
  ProblemSetup p = anisotropic_lens_setup();
  p.name = "isotropic_weak_lens";
  p.exterior.K = 1e-10 * Mat2::Identity();
  p.lens.K = 1e-12 * Mat2::Identity();
  p.final_time = 3200.0;
  return p;
}

ProblemSetup make_setup(const std::string& preset) {
  if (preset == "anisotropic_lens") return anisotropic_lens_setup();
  if (preset == "isotropic_weak_lens") return isotropic_weak_lens_setup();
  throw ConfigurationError("unknown problem preset '" + preset + "'");
}

}  // namespace dgflow
