#include "dgflow/quadrature.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

namespace dgflow {

namespace {

GaussRule1D compute_gauss(int n) {
  GaussRule1D rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  // Newton iteration on P_n starting from the Chebyshev-like initial guess;
  // roots are symmetric so only half are computed.
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double pn = n == 0 ? 1.0 : (n == 1 ? x : p1);
      const double pnm1 = n == 1 ? 1.0 : p0;
      dp = n * (x * pn - pnm1) / (x * x - 1.0);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute the derivative at the converged root
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    const double pn = n == 1 ? x : p1;
    const double pnm1 = n == 1 ? 1.0 : p0;
    dp = n * (x * pn - pnm1) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.points[i] = -x;
    rule.points[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.points[n / 2] = 0.0;
  return rule;
}

std::mutex cache_mutex;

}  // namespace

const GaussRule1D& gauss_legendre(int n_points) {
  if (n_points < 1) throw ConfigurationError("Gauss rule needs at least one point");
  static std::map<int, std::unique_ptr<GaussRule1D>> cache;
  std::lock_guard lock(cache_mutex);
  auto& slot = cache[n_points];
  if (!slot) slot = std::make_unique<GaussRule1D>(compute_gauss(n_points));
  return *slot;
}

const GaussRule1D& gauss_for_degree(int degree) { return gauss_legendre(std::max(1, degree / 2 + 1)); }

const QuadratureRule& square_rule(int degree) {
  static std::map<int, std::unique_ptr<QuadratureRule>> cache;
  const GaussRule1D& g = gauss_for_degree(degree);
  std::lock_guard lock(cache_mutex);
  auto& slot = cache[degree];
  if (!slot) {
    auto rule = std::make_unique<QuadratureRule>();
    rule->degree = degree;
    for (std::size_t j = 0; j < g.points.size(); ++j)
      for (std::size_t i = 0; i < g.points.size(); ++i) {
        rule->points.emplace_back(g.points[i], g.points[j]);
        rule->weights.push_back(g.weights[i] * g.weights[j]);
      }
    slot = std::move(rule);
  }
  return *slot;
}

}  // namespace dgflow
