#pragma once

#include "dgflow/basis.hpp"
#include "dgflow/physics.hpp"

#include <stdexcept>

namespace dgflow::testing {

/// Homogeneous box with K = I and all-Neumann zero data; callers override pieces.
inline ProblemSetup plain_setup(Vec2 extent = Vec2(1, 1)) {
  ProblemSetup s;
  s.name = "plain";
  s.extent = extent;
  s.fluids.g = Vec2::Zero();
  s.exterior.K = Mat2::Identity();
  s.lens = s.exterior;
  s.final_time = 1.0;
  s.initial_p_w = [](const Vec2&) { return 0.0; };
  s.initial_s_n = [](const Vec2&) { return 0.0; };
  s.boundary = [](BoundarySide, const Vec2&) { return BoundaryData{}; };
  return s;
}

inline int mode_index(int i, int j) {
  for (int k = 0; k < 64; ++k)
    if (basis::mode(k) == std::make_pair(i, j)) return k;
  throw std::logic_error("mode not found");
}

}  // namespace dgflow::testing
