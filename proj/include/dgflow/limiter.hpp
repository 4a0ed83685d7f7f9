#pragma once

#include "dgflow/dgspace.hpp"

#include <vector>

namespace dgflow {

struct LimiterConfig {
  double s_min = 0.0;
  double s_max = 1.0;
  bool enabled = true;
  /// false: both ratios at every point, as written in the formula for chi_E.
  /// true: only the bound that a point actually approaches (classic Zhang-Shu form).
  bool one_sided = false;
};

struct LimiterReport {
  int limited_elements = 0;     // chi < 1
  int clamped_means = 0;        // mean itself outside the bounds
  double min_chi = 1.0;
};

/// Reference points of Lambda_E: volume quadrature points and the face
/// quadrature points of every face touching the element.
std::vector<Vec2> limiter_points(const DgSpace& space, int e);

/// Scaling limiter on the saturation: non-constant modes of every element are
/// multiplied by chi_E so that all values at Lambda_E lie in [s_min, s_max].
LimiterReport apply_scaling_limiter(DgFunction& u, const LimiterConfig& cfg = {});

/// chi_E of one element (mean taken from the coefficients, clamped when outside the bounds).
double scaling_factor(const DgFunction& u, int e, const std::vector<Vec2>& points, const LimiterConfig& cfg);

}  // namespace dgflow
