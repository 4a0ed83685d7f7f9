#include "dgflow/basis.hpp"

#include "dgflow/quadrature.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>

namespace dgflow::basis {

std::pair<int, int> mode(int k) {
  const int m = static_cast<int>(std::sqrt(static_cast<double>(k)));
  const int shell = m * m > k ? m - 1 : ((m + 1) * (m + 1) <= k ? m + 1 : m);
  const int local = k - shell * shell;
  // shell m: (m, 0..m) followed by (0..m-1, m)
  if (local <= shell) return {shell, local};
  return {local - shell - 1, shell};
}

void legendre(int n, double x, double* values, double* first, double* second) {
  // unscaled recursion first
  double p[32], dp[32], ddp[32];
  p[0] = 1.0;
  dp[0] = 0.0;
  ddp[0] = 0.0;
  if (n >= 1) {
    p[1] = x;
    dp[1] = 1.0;
    ddp[1] = 0.0;
  }
  for (int k = 2; k <= n; ++k) {
    p[k] = ((2.0 * k - 1.0) * x * p[k - 1] - (k - 1.0) * p[k - 2]) / k;
    dp[k] = dp[k - 2] + (2.0 * k - 1.0) * p[k - 1];
    ddp[k] = ddp[k - 2] + (2.0 * k - 1.0) * dp[k - 1];
  }
  for (int k = 0; k <= n; ++k) {
    const double s = std::sqrt(2.0 * k + 1.0);
    values[k] = s * p[k];
    if (first) first[k] = s * dp[k];
    if (second) second[k] = s * ddp[k];
  }
}

void evaluate(int order, const Vec2& xi, Evaluation& out, bool with_hessian) {
  double lx[32], dlx[32], ddlx[32], ly[32], dly[32], ddly[32];
  legendre(order, xi.x(), lx, dlx, ddlx);
  legendre(order, xi.y(), ly, dly, ddly);
  const int n = block_size(order);
  out.value.resize(n);
  out.grad.resize(n);
  if (with_hessian) out.hessian.resize(n);
  for (int k = 0; k < n; ++k) {
    const auto [i, j] = mode(k);
    out.value[k] = lx[i] * ly[j];
    out.grad[k] = Vec2(dlx[i] * ly[j], lx[i] * dly[j]);
    if (with_hessian) {
      Mat2 h;
      h << ddlx[i] * ly[j], dlx[i] * dly[j], dlx[i] * dly[j], lx[i] * ddly[j];
      out.hessian[k] = h;
    }
  }
}

void evaluate_values(int order, const Vec2& xi, double* values) {
  double lx[32], ly[32];
  legendre(order, xi.x(), lx);
  legendre(order, xi.y(), ly);
  const int n = block_size(order);
  for (int k = 0; k < n; ++k) {
    const auto [i, j] = mode(k);
    values[k] = lx[i] * ly[j];
  }
}

}  // namespace dgflow::basis

namespace dgflow {

const BasisTable& volume_table(int order, int quadrature_degree) {
  static std::map<std::pair<int, int>, std::unique_ptr<BasisTable>> cache;
  static std::mutex mutex;
  const QuadratureRule& rule = square_rule(quadrature_degree);
  std::lock_guard lock(mutex);
  auto& slot = cache[{order, quadrature_degree}];
  if (!slot) {
    auto table = std::make_unique<BasisTable>();
    table->order = order;
    table->n_modes = block_size(order);
    table->n_points = static_cast<int>(rule.size());
    table->value.resize(table->n_points * table->n_modes);
    table->grad.resize(table->n_points * table->n_modes);
    basis::Evaluation ev;
    for (int q = 0; q < table->n_points; ++q) {
      basis::evaluate(order, rule.points[q], ev);
      for (int a = 0; a < table->n_modes; ++a) {
        table->value[q * table->n_modes + a] = ev.value[a];
        table->grad[q * table->n_modes + a] = ev.grad[a];
      }
    }
    slot = std::move(table);
  }
  return *slot;
}

}  // namespace dgflow
