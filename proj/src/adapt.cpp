#include "dgflow/adapt.hpp"

#include "dgflow/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dgflow {

const char* to_string(PStrategy s) {
  switch (s) {
    case PStrategy::off: return "off";
    case PStrategy::diff: return "markpDiff";
    case PStrategy::frac: return "markpFrac";
  }
  return "?";
}

PStrategy parse_p_strategy(const std::string& name) {
  if (name == "off" || name == "none") return PStrategy::off;
  if (name == "markpDiff" || name == "diff") return PStrategy::diff;
  if (name == "markpFrac" || name == "frac") return PStrategy::frac;
  throw ConfigurationError("unknown p-strategy '" + name + "'");
}

namespace {

struct Local {
  PointValues v;
  Mat2 hess_p = Mat2::Zero(), hess_s = Mat2::Zero();
};

Local evaluate_local(const DgFunction& u, int e, const Vec2& x, basis::Evaluation& ev, bool hessian) {
  const Element& el = u.space().element(e);
  basis::evaluate(el.order, el.to_reference(x), ev, hessian);
  Local out;
  out.v = point_values(u, e, ev);
  if (hessian) {
    const auto p = u.block(e, Field::pressure);
    const auto s = u.block(e, Field::saturation);
    Mat2 hp = Mat2::Zero(), hs = Mat2::Zero();
    for (std::size_t a = 0; a < p.size(); ++a) {
      hp += p[a] * ev.hessian[a];
      hs += s[a] * ev.hessian[a];
    }
    const Vec2 sc(2.0 / el.extent.x(), 2.0 / el.extent.y());
    const Mat2 S = sc.asDiagonal();
    out.hess_p = S * hp * S;
    out.hess_s = S * hs * S;
  }
  return out;
}

/// Calls volume(e, contribution) and face(face, minus_share, plus_share, full).
template <class VolumeSink, class FaceSink>
void estimator_terms(const DgFunction& u, const DgFunction& u_old, double tau, const Discretization& disc,
                     VolumeSink&& volume_sink, FaceSink&& face_sink) {
  const DgSpace& space = u.space();
  if (!space.matches_mesh()) throw ConfigurationError("estimator needs a space on the current mesh");
  if (u_old.space().size() != space.size()) throw ConfigurationError("estimator needs both levels on the same leaves");
  if (!(tau > 0.0)) throw ConfigurationError("time step must be positive");
  const ProblemSetup& setup = disc.setup();
  const Vec2 offset = disc.model().gravity_offset(setup.fluids);
  const Vec2 g = setup.fluids.g;
  const double beta = disc.beta(space);
  basis::Evaluation ev, ev_old;

  for (std::size_t ei = 0; ei < space.size(); ++ei) {
    const int e = static_cast<int>(ei);
    const Element& el = space.element(e);
    const QuadratureRule& rule = square_rule(volume_degree(el.order) + 1);
    double sum = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Vec2 x = el.to_physical(rule.points[q]);
      const RockParams& rock = setup.rock(x);
      const Local L = evaluate_local(u, e, x, ev, true);
      const double s_old = u_old.value(e, Field::saturation, x);
      PointCoefficients c;
      try {
        c = disc.coefficients(rock, L.v.s);
      } catch (const DomainError& err) {
        throw AssemblyError(err.what(), e);
      }
      const Mat2& K = rock.K;
      const Vec2& gs = L.v.grad_s;
      const double div = c.sp * (K.cwiseProduct(L.hess_p)).sum() + c.ss * (K.cwiseProduct(L.hess_s)).sum() +
                         c.dsp * gs.dot(K * (L.v.grad_p - offset)) + c.dss * gs.dot(K * gs) + c.dgs * gs.dot(K * g);
      const double r = setup.q_n - rock.porosity * (L.v.s - s_old) / tau + div;
      sum += rule.weights[q] * el.area / 4.0 * r * r;
    }
    const double h = el.max_edge();
    volume_sink(e, h * h * sum);
  }

  const Mesh& mesh = space.mesh();
  for (const Face& f : mesh.faces()) {
    const GaussRule1D& rule = gauss_for_degree(face_degree(space, f) + 1);
    const Vec2& nu = f.normal;
    double e1 = 0.0, e2 = 0.0;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Vec2 x = f.point(rule.points[q]);
      const double w = rule.weights[q] * f.measure / 2.0;
      const FaceRocks rocks = disc.face_rocks(f, x);
      const Local m = evaluate_local(u, f.inside, x, ev, false);
      PointCoefficients cm;
      try {
        cm = disc.coefficients(*rocks.minus, m.v.s);
      } catch (const DomainError& err) {
        throw AssemblyError(err.what(), f.inside);
      }
      const double fm = disc.flux_s(*rocks.minus, cm, m.v).dot(nu);
      if (!f.boundary()) {
        const Local p = evaluate_local(u, f.outside, x, ev_old, false);
        PointCoefficients cp;
        try {
          cp = disc.coefficients(*rocks.plus, p.v.s);
        } catch (const DomainError& err) {
          throw AssemblyError(err.what(), f.outside);
        }
        const double fp = disc.flux_s(*rocks.plus, cp, p.v).dot(nu);
        const double pen = beta * disc.penalty_factors(f, space, x).gamma_s;
        const double r1 = pen * (m.v.s - p.v.s);
        const double r2 = fm - fp;
        e1 += w * r1 * r1;
        e2 += w * r2 * r2;
      } else {
        const BoundaryData bd = setup.boundary(f.side, x);
        if (bd.s_dirichlet) {
          const double pen = beta * disc.penalty_factors(f, space, x).gamma_s;
          const double r1 = pen * (bd.s_n - m.v.s);
          e1 += w * r1 * r1;
        } else {
          const double r2 = bd.J_n + fm;
          e2 += w * r2 * r2;
        }
      }
    }
    const double contribution = f.h * e2 + e1 / f.h;
    face_sink(f, contribution);
  }
}

}  // namespace

std::vector<double> compute_estimator(const DgFunction& u, const DgFunction& u_old, double tau,
                                      const Discretization& disc) {
  std::vector<double> eta(u.space().size(), 0.0);
  estimator_terms(
      u, u_old, tau, disc, [&](int e, double v) { eta[e] += v; },
      [&](const Face& f, double c) {
        if (f.boundary()) {
          eta[f.inside] += c;
        } else {
          eta[f.inside] += 0.5 * c;
          eta[f.outside] += 0.5 * c;
        }
      });
  return eta;
}

double estimator_total(const DgFunction& u, const DgFunction& u_old, double tau, const Discretization& disc) {
  double volume = 0.0, faces = 0.0;
  estimator_terms(
      u, u_old, tau, disc, [&](int, double v) { volume += v; }, [&](const Face&, double c) { faces += c; });
  return volume + faces;
}

double compute_ttol(const std::vector<double>& eta0, double final_time) {
  if (!(final_time > 0.0)) throw ConfigurationError("final time must be positive to derive tTol");
  double sum = 0.0;
  for (double v : eta0) sum += v;
  return sum / final_time;
}

double compute_htol(double ttol, double tau, std::size_t n_elements) {
  if (n_elements == 0) throw ConfigurationError("empty mesh");
  return ttol * tau / static_cast<double>(n_elements);
}

std::vector<Mark> mark_h(const std::vector<double>& eta, const std::vector<Element>& elements, double htol,
                         int max_level, double coarsen_factor) {
  if (eta.size() != elements.size()) throw ConfigurationError("one indicator per element required");
  std::vector<Mark> marks(eta.size(), Mark::keep);
  for (std::size_t e = 0; e < eta.size(); ++e) {
    if (eta[e] > htol && max_level > elements[e].level) marks[e] = Mark::refine;
    else if (eta[e] < coarsen_factor * htol && elements[e].level > 0) marks[e] = Mark::coarsen;
  }
  return marks;
}

std::vector<int> mark_p_diff(const std::vector<double>& eta_r, const std::vector<double>& eta_rm1,
                             const std::vector<Element>& elements, double ptol, int max_order) {
  if (eta_r.size() != elements.size() || eta_rm1.size() != elements.size())
    throw ConfigurationError("one indicator per element required");
  std::vector<int> orders(elements.size());
  for (std::size_t e = 0; e < elements.size(); ++e) {
    const int r = elements[e].order;
    const double sigma = std::abs(eta_r[e] - eta_rm1[e]);
    if (sigma < ptol) orders[e] = r > 1 ? r - 1 : r;
    else if (sigma > 100.0 * ptol) orders[e] = r < max_order ? r + 1 : r;
    else orders[e] = r;
  }
  return orders;
}

std::vector<int> mark_p_frac(const std::vector<double>& eta_r, const std::vector<double>& eta_rm1,
                             const std::vector<Element>& elements, double ptol, int max_order, int max_level,
                             bool level_gate) {
  if (eta_r.size() != elements.size() || eta_rm1.size() != elements.size())
    throw ConfigurationError("one indicator per element required");
  std::vector<int> orders(elements.size());
  for (std::size_t e = 0; e < elements.size(); ++e) {
    const int r = elements[e].order;
    const int up = std::min(r + 1, std::max(r, max_order));
    const int down = r > 1 ? r - 1 : r;
    if (level_gate && elements[e].level < max_level) {
      orders[e] = up;
      continue;
    }
    double ratio;
    if (eta_rm1[e] > 0.0) ratio = eta_r[e] / eta_rm1[e];
    else ratio = eta_r[e] > 0.0 ? std::numeric_limits<double>::infinity() : std::numeric_limits<double>::quiet_NaN();
    if (std::isnan(ratio)) orders[e] = r;  // no information
    else if (ratio > ptol) orders[e] = down;
    else if (ratio < 0.01 * ptol) orders[e] = up;
    else orders[e] = r;
  }
  return orders;
}

}  // namespace dgflow
