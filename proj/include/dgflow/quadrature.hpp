#pragma once

#include "dgflow/common.hpp"

#include <vector>

namespace dgflow {

/// Gauss-Legendre rule on [-1, 1]; n points integrate degree 2n-1 exactly.
struct GaussRule1D {
  std::vector<double> points;
  std::vector<double> weights;
};

/// Tensor Gauss rule on the reference square [-1, 1]^2.
struct QuadratureRule {
  std::vector<Vec2> points;
  std::vector<double> weights;
  int degree = 0;
  std::size_t size() const { return points.size(); }
};

const GaussRule1D& gauss_legendre(int n_points);

/// Smallest 1D Gauss rule exact for polynomials of the given degree.
const GaussRule1D& gauss_for_degree(int degree);

/// Tensor rule on the reference square exact for Q_degree integrands.
const QuadratureRule& square_rule(int degree);

}  // namespace dgflow
