#pragma once

#include "dgflow/common.hpp"

#include <array>
#include <utility>
#include <vector>

namespace dgflow {

/// Number of modes of the full tensor space Q_r.
constexpr int block_size(int order) { return (order + 1) * (order + 1); }

/// Hierarchical tensor-Legendre basis on the reference square [-1,1]^2.
///
/// Mode k corresponds to the pair (i, j) with phi_k = L_i(xi) L_j(eta), where
/// L_n = sqrt(2n+1) P_n. With this scaling (1/4) * int phi_a phi_b = delta_ab on
/// the reference square, so phi_0 = 1 and the element mean of a function is its
/// first coefficient. Modes are enumerated shell by shell (shell m holds all
/// pairs with max(i, j) = m), hence the first block_size(r) modes span Q_r for
/// every r and lowering the order is plain truncation.
namespace basis {

/// Tensor indices (i, j) of mode k.
std::pair<int, int> mode(int k);

/// Scaled Legendre values L_0..L_n at x and their first and second derivatives.
void legendre(int n, double x, double* values, double* first = nullptr, double* second = nullptr);

struct Evaluation {
  std::vector<double> value;
  std::vector<Vec2> grad;     // reference-coordinate gradient
  std::vector<Mat2> hessian;  // reference-coordinate Hessian (filled on request)
};

/// Evaluate all block_size(order) modes at a reference point.
void evaluate(int order, const Vec2& xi, Evaluation& out, bool with_hessian = false);

/// Values only.
void evaluate_values(int order, const Vec2& xi, double* values);

}  // namespace basis

/// Basis values and reference gradients tabulated on a fixed set of reference points.
struct BasisTable {
  int order = 0;
  int n_modes = 0;
  int n_points = 0;
  std::vector<double> value;  // [point * n_modes + mode]
  std::vector<Vec2> grad;     // same layout

  double phi(int q, int a) const { return value[q * n_modes + a]; }
  const Vec2& dphi(int q, int a) const { return grad[q * n_modes + a]; }
};

/// Cached table for the volume rule of the given assembly degree.
const BasisTable& volume_table(int order, int quadrature_degree);

}  // namespace dgflow
