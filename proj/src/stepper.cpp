#include "dgflow/stepper.hpp"

#include <cmath>

namespace dgflow {

const char* to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::linear: return "linear";
    case SchemeKind::implicit: return "implicit";
    case SchemeKind::iterative: return "iterative";
    case SchemeKind::impes_iterative: return "impes_iterative";
    case SchemeKind::impes: return "impes";
  }
  return "?";
}

SchemeKind parse_scheme(const std::string& name) {
  for (SchemeKind k : {SchemeKind::linear, SchemeKind::implicit, SchemeKind::iterative, SchemeKind::impes_iterative,
                       SchemeKind::impes})
    if (name == to_string(k)) return k;
  if (name == "impesIterative" || name == "impes-iterative") return SchemeKind::impes_iterative;
  throw ConfigurationError("unknown scheme '" + name + "'");
}

void SchemeConfig::validate() const {
  if (!(tau > 0.0)) throw ConfigurationError("time step must be positive");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigurationError("alpha must lie in [0, 1]");
  if (!(tol_iter > 0.0)) throw ConfigurationError("iteration tolerance must be positive");
  if (max_outer < 1) throw ConfigurationError("at least one outer iteration is required");
}

StopDecision stopping_criterion(const DgFunction& s_new, const DgFunction& s_prev, double tol_iter) {
  const double diff = l2_distance(s_new, s_prev, Field::saturation);
  const double ref = s_prev.l2_norm(Field::saturation);
  if (ref == 0.0) return diff == 0.0 ? StopDecision::stop : StopDecision::proceed;
  return diff < tol_iter * ref ? StopDecision::stop : StopDecision::proceed;
}

namespace {

class StepRunner {
 public:
  StepRunner(const SchemeConfig& scheme, const Discretization& disc, const DgFunction& u_old, StepDiagnostics& diag)
      : scheme_(scheme), disc_(disc), u_old_(u_old), diag_(diag) {}

  /// One linear solve of the system with frozen coefficients s_bar, updating the
  /// selected fields of u.
  void linear_update(DgFunction& u, const DgFunction& s_bar, FieldSet fields) {
    AssemblyInput in;
    in.u = &u;
    in.u_old = &u_old_;
    in.s_bar = &s_bar;
    in.implicit = false;
    in.tau = scheme_.tau;
    in.alpha = scheme_.alpha;
    in.fields = fields;
    const AssembledSystem sys = disc_.assemble(in, true);
    const DofMap map(u.space(), fields);
    Eigen::VectorXd x;
    map.gather(u, x);
    x += linear_solve(sys.jacobian, -sys.residual, scheme_.newton.linear);
    map.scatter(x, u);
    diag_.residual = sys.residual.norm();
    ++diag_.newton_iterations;
  }

  void newton(DgFunction& u) {
    const DofMap map(u.space(), FieldSet::coupled);
    DgFunction work = u;
    AssemblyInput in;
    in.u = &work;
    in.u_old = &u_old_;
    in.implicit = true;
    in.tau = scheme_.tau;
    in.alpha = scheme_.alpha;
    auto provider = [&](const Eigen::VectorXd& x, Eigen::VectorXd& R, SparseMatrix* J) {
      map.scatter(x, work);
      AssembledSystem sys = disc_.assemble(in, J != nullptr);
      R = std::move(sys.residual);
      if (J) *J = std::move(sys.jacobian);
    };
    NewtonHook hook;
    if (scheme_.limit_each_newton_step)
      hook = [&](Eigen::VectorXd& x) {
        map.scatter(x, work);
        limit(work);
        map.gather(work, x);
      };
    Eigen::VectorXd x0;
    map.gather(u, x0);
    const NewtonResult res = newton_solve(provider, std::move(x0), scheme_.newton, hook);
    map.scatter(res.x, u);
    diag_.newton_iterations += res.iterations;
    diag_.residual = res.residual;
  }

  void limit(DgFunction& u) {
    const LimiterReport r = apply_scaling_limiter(u, scheme_.limiter);
    diag_.limited_elements = r.limited_elements;
    diag_.clamped_means += r.clamped_means;
  }

  bool converged(const DgFunction& next, const DgFunction& prev) const {
    return stopping_criterion(next, prev, scheme_.tol_iter) == StopDecision::stop;
  }

 private:
  const SchemeConfig& scheme_;
  const Discretization& disc_;
  const DgFunction& u_old_;
  StepDiagnostics& diag_;
};

}  // namespace

StepDiagnostics advance(TimeState& state, const SchemeConfig& scheme, const Discretization& disc) {
  scheme.validate();
  StepDiagnostics diag;
  const DgFunction& u_old = state.u;
  StepRunner run(scheme, disc, u_old, diag);
  DgFunction u = u_old;
  try {
    switch (scheme.kind) {
      case SchemeKind::linear: {
        run.linear_update(u, u_old, FieldSet::coupled);
        run.limit(u);
        diag.outer_iterations = 1;
        break;
      }
      case SchemeKind::implicit: {
        run.newton(u);
        run.limit(u);
        diag.outer_iterations = 1;
        break;
      }
      case SchemeKind::iterative: {
        bool done = false;
        for (int k = 0; k < scheme.max_outer && !done; ++k) {
          const DgFunction prev = u;
          run.linear_update(u, prev, FieldSet::coupled);
          run.limit(u);
          diag.outer_iterations = k + 1;
          done = run.converged(u, prev);
        }
        if (!done) throw NonlinearSolverError("outer iteration cap reached", u.coefficients(), diag.outer_iterations);
        break;
      }
      case SchemeKind::impes_iterative: {
        bool done = false;
        for (int k = 0; k < scheme.max_outer && !done; ++k) {
          const DgFunction prev = u;
          run.linear_update(u, prev, FieldSet::pressure_only);
          run.linear_update(u, prev, FieldSet::saturation_only);
          run.limit(u);
          diag.outer_iterations = k + 1;
          done = run.converged(u, prev);
        }
        if (!done) throw NonlinearSolverError("outer iteration cap reached", u.coefficients(), diag.outer_iterations);
        break;
      }
      case SchemeKind::impes: {
        run.linear_update(u, u_old, FieldSet::pressure_only);
        run.linear_update(u, u_old, FieldSet::saturation_only);
        run.limit(u);
        diag.outer_iterations = 1;
        break;
      }
    }
  } catch (const NonlinearSolverError& err) {
    diag.ok = false;
    diag.reason = err.what();
  } catch (const LinearSolverError& err) {
    diag.ok = false;
    diag.reason = err.what();
  } catch (const AssemblyError& err) {
    diag.ok = false;
    diag.reason = err.what();
  } catch (const DomainError& err) {
    diag.ok = false;
    diag.reason = err.what();
  }
  if (!diag.ok) return diag;
  if (!u.coefficients().allFinite()) {
    diag.ok = false;
    diag.reason = "non-finite solution";
    return diag;
  }
  state.u = std::move(u);
  state.t += scheme.tau;
  ++state.step;
  return diag;
}

}  // namespace dgflow
