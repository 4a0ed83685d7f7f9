#include "dgflow/limiter.hpp"

#include "dgflow/forms.hpp"
#include "dgflow/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace dgflow {

std::vector<Vec2> limiter_points(const DgSpace& space, int e) {
  const Element& el = space.element(e);
  std::vector<Vec2> pts = square_rule(volume_degree(el.order)).points;
  if (!space.matches_mesh()) return pts;
  const Mesh& mesh = space.mesh();
  for (int fid : mesh.element_faces(e)) {
    const Face& f = mesh.faces()[fid];
    const GaussRule1D& g = gauss_for_degree(face_degree(space, f));
    for (double t : g.points) {
      Vec2 xi = el.to_reference(f.point(t));
      xi = xi.cwiseMax(-1.0).cwiseMin(1.0);
      pts.push_back(xi);
    }
  }
  return pts;
}

double scaling_factor(const DgFunction& u, int e, const std::vector<Vec2>& points, const LimiterConfig& cfg) {
  const double mean = std::clamp(u.mean(e, Field::saturation), cfg.s_min, cfg.s_max);
  double chi = 1.0;
  for (const Vec2& xi : points) {
    const double d = mean - u.value_ref(e, Field::saturation, xi);
    if (std::abs(d) < 1e-14) continue;
    const double lo = std::abs((mean - cfg.s_min) / d);
    const double hi = std::abs((cfg.s_max - mean) / d);
    if (cfg.one_sided) chi = std::min(chi, d > 0 ? lo : hi);
    else chi = std::min({chi, lo, hi});
  }
  return chi;
}

LimiterReport apply_scaling_limiter(DgFunction& u, const LimiterConfig& cfg) {
  if (!(cfg.s_min < cfg.s_max)) throw ConfigurationError("limiter bounds must satisfy s_min < s_max");
  LimiterReport report;
  if (!cfg.enabled) return report;
  const DgSpace& space = u.space();
  for (std::size_t ei = 0; ei < space.size(); ++ei) {
    const int e = static_cast<int>(ei);
    auto c = u.block(e, Field::saturation);
    if (c[0] < cfg.s_min || c[0] > cfg.s_max) {
      c[0] = std::clamp(c[0], cfg.s_min, cfg.s_max);
      ++report.clamped_means;
    }
    const double chi = scaling_factor(u, e, limiter_points(space, e), cfg);
    if (chi < 1.0) {
      for (std::size_t a = 1; a < c.size(); ++a) c[a] *= chi;
      ++report.limited_elements;
      report.min_chi = std::min(report.min_chi, chi);
    }
  }
  return report;
}

}  // namespace dgflow
