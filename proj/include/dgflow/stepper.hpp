#pragma once

#include "dgflow/forms.hpp"
#include "dgflow/limiter.hpp"
#include "dgflow/solver.hpp"

#include <string>

namespace dgflow {

enum class SchemeKind { linear, implicit, iterative, impes_iterative, impes };

const char* to_string(SchemeKind kind);
SchemeKind parse_scheme(const std::string& name);

struct SchemeConfig {
  SchemeKind kind = SchemeKind::implicit;
  double tau = 1.0;
  double alpha = 1.0;
  double tol_iter = 3e-2;
  int max_outer = 100;
  /// Apply the limiter after every Newton update instead of once after the solve.
  bool limit_each_newton_step = false;
  NewtonConfig newton;
  LimiterConfig limiter;

  void validate() const;
};

struct TimeState {
  double t = 0.0;
  int step = 0;
  DgFunction u;  // (p, s)
};

struct StepDiagnostics {
  bool ok = true;
  std::string reason;
  int outer_iterations = 0;
  int newton_iterations = 0;
  double residual = 0.0;
  int limited_elements = 0;
  int clamped_means = 0;
};

enum class StopDecision { stop, proceed };

/// Stops when ||s_new - s_prev|| < tol ||s_prev|| (L2 over the domain); with
/// ||s_prev|| = 0 only an identical iterate stops.
StopDecision stopping_criterion(const DgFunction& s_new, const DgFunction& s_prev, double tol_iter);

/// Advances the state by one step of length tau. On failure the state is left
/// untouched and the diagnostics carry the reason.
StepDiagnostics advance(TimeState& state, const SchemeConfig& scheme, const Discretization& disc);

}  // namespace dgflow
