#include "dgflow/dgspace.hpp"

#include "dgflow/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace dgflow {

DgSpace::DgSpace(const Mesh& mesh, int n_fields)
    : mesh_(&mesh), generation_(mesh.generation()), n_fields_(n_fields), elements_(mesh.elements()) {
  build();
}

DgSpace::DgSpace(const Mesh& mesh, std::vector<int> orders, int n_fields)
    : mesh_(&mesh), generation_(mesh.generation()), n_fields_(n_fields), elements_(mesh.elements()) {
  if (orders.size() != elements_.size()) throw ConfigurationError("one order per leaf required");
  for (std::size_t e = 0; e < orders.size(); ++e) {
    if (orders[e] < 0) throw ConfigurationError("polynomial order must be non-negative");
    elements_[e].order = orders[e];
  }
  build();
}

void DgSpace::build() {
  if (n_fields_ < 1) throw ConfigurationError("a DG space needs at least one field");
  offsets_.resize(elements_.size() + 1);
  offsets_[0] = 0;
  max_order_ = 0;
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    offsets_[e + 1] = offsets_[e] + static_cast<std::size_t>(n_fields_) * block_size(elements_[e].order);
    max_order_ = std::max(max_order_, elements_[e].order);
  }
}

DgFunction::DgFunction(SpacePtr space) : space_(std::move(space)), coeffs_(Eigen::VectorXd::Zero(space_->n_dofs())) {}

double DgFunction::value_ref(int e, Field f, const Vec2& xi) const {
  const int order = space_->order(e);
  double phi[256];
  basis::evaluate_values(order, xi, phi);
  const auto c = block(e, f);
  double v = 0.0;
  for (std::size_t a = 0; a < c.size(); ++a) v += c[a] * phi[a];
  return v;
}

double DgFunction::evaluate(Field f, const Vec2& x) const {
  if (!space_->matches_mesh()) throw ConfigurationError("function lives on an outdated mesh");
  return value(space_->mesh().locate(x), f, x);
}

double DgFunction::integral(Field f) const {
  double sum = 0.0;
  for (std::size_t e = 0; e < space_->size(); ++e) sum += space_->element(e).area * mean(static_cast<int>(e), f);
  return sum;
}

double DgFunction::l2_norm(Field f) const {
  double sum = 0.0;
  for (std::size_t e = 0; e < space_->size(); ++e) {
    double local = 0.0;
    for (double c : block(static_cast<int>(e), f)) local += c * c;
    sum += space_->element(e).area * local;
  }
  return std::sqrt(sum);
}

void l2_project(DgFunction& u, Field field, const ScalarField& f, int extra_degree) {
  const DgSpace& space = u.space();
  for (std::size_t ei = 0; ei < space.size(); ++ei) {
    const int e = static_cast<int>(ei);
    const Element& el = space.element(e);
    const QuadratureRule& rule = square_rule(2 * el.order + 1 + extra_degree);
    auto c = u.block(e, field);
    std::fill(c.begin(), c.end(), 0.0);
    double phi[256];
    for (std::size_t q = 0; q < rule.size(); ++q) {
      basis::evaluate_values(el.order, rule.points[q], phi);
      const double fx = f(el.to_physical(rule.points[q]));
      // (1/|E|) int f phi dx with dx = |E|/4 dxi
      for (std::size_t a = 0; a < c.size(); ++a) c[a] += 0.25 * rule.weights[q] * fx * phi[a];
    }
  }
}

DgFunction change_orders(const DgFunction& u, SpacePtr target) {
  const DgSpace& src = u.space();
  if (target->size() != src.size() || target->n_fields() != src.n_fields())
    throw ConfigurationError("order change requires the same leaves");
  DgFunction out(std::move(target));
  for (std::size_t ei = 0; ei < src.size(); ++ei) {
    const int e = static_cast<int>(ei);
    if (out.space().element(e).node != src.element(e).node)
      throw ConfigurationError("order change requires the same leaves");
    for (int f = 0; f < src.n_fields(); ++f) {
      const auto from = u.block(e, static_cast<Field>(f));
      auto to = out.block(e, static_cast<Field>(f));
      const std::size_t n = std::min(from.size(), to.size());
      std::copy_n(from.begin(), n, to.begin());
    }
  }
  return out;
}

DgFunction project_to_lower_order(const DgFunction& u) {
  const DgSpace& src = u.space();
  std::vector<int> orders(src.size());
  for (std::size_t e = 0; e < src.size(); ++e) orders[e] = std::max(0, src.order(static_cast<int>(e)) - 1);
  auto lower = std::make_shared<DgSpace>(src.mesh(), std::move(orders), src.n_fields());
  // the snapshot geometry must be that of the source, not the current mesh
  if (!src.matches_mesh()) throw ConfigurationError("lower-order projection needs a current mesh");
  return change_orders(u, lower);
}

namespace {

/// Adds (1/|T|) int_R u_S phi_T to the target coefficients, where the region R is
/// the smaller of the two elements (the child in both transfer directions).
void accumulate_projection(const Element& target, std::span<double> target_coeffs, const Element& source,
                           std::span<const double> source_coeffs, const Element& region) {
  const GaussRule1D& g = gauss_for_degree(target.order + source.order);
  double phi_s[256], phi_t[256];
  const double scale = region.area / 4.0 / target.area;
  for (std::size_t j = 0; j < g.points.size(); ++j)
    for (std::size_t i = 0; i < g.points.size(); ++i) {
      const Vec2 x = region.to_physical(Vec2(g.points[i], g.points[j]));
      basis::evaluate_values(source.order, source.to_reference(x), phi_s);
      basis::evaluate_values(target.order, target.to_reference(x), phi_t);
      double v = 0.0;
      for (std::size_t a = 0; a < source_coeffs.size(); ++a) v += source_coeffs[a] * phi_s[a];
      const double w = g.weights[i] * g.weights[j] * scale * v;
      for (std::size_t a = 0; a < target_coeffs.size(); ++a) target_coeffs[a] += w * phi_t[a];
    }
}

}  // namespace

DgFunction transfer_on_adapt(const DgFunction& u, const AdaptReport& report, SpacePtr target) {
  const DgSpace& src = u.space();
  if (target->n_fields() != src.n_fields()) throw ConfigurationError("field count mismatch in transfer");
  std::unordered_map<int, int> old_leaf;  // node -> old index
  for (std::size_t e = 0; e < src.size(); ++e) old_leaf.emplace(src.element(static_cast<int>(e)).node, static_cast<int>(e));
  std::unordered_map<int, int> refined_parent;                 // new child node -> old leaf index of parent
  std::unordered_map<int, const AdaptReport::Family*> merged;  // new parent node -> family
  for (const auto& fam : report.refined) {
    const auto it = old_leaf.find(fam.parent);
    if (it == old_leaf.end()) throw ConfigurationError("refined cell was not a leaf before adaptation");
    for (int c : fam.children) refined_parent[c] = it->second;
  }
  for (const auto& fam : report.coarsened) merged[fam.parent] = &fam;

  DgFunction out(target);
  const int n_fields = src.n_fields();
  for (std::size_t ei = 0; ei < target->size(); ++ei) {
    const int e = static_cast<int>(ei);
    const Element& el = target->element(e);
    if (const auto it = old_leaf.find(el.node); it != old_leaf.end()) {
      for (int f = 0; f < n_fields; ++f) {
        const auto from = u.block(it->second, static_cast<Field>(f));
        auto to = out.block(e, static_cast<Field>(f));
        std::copy_n(from.begin(), std::min(from.size(), to.size()), to.begin());
      }
    } else if (const auto rp = refined_parent.find(el.node); rp != refined_parent.end()) {
      const Element& parent = src.element(rp->second);
      for (int f = 0; f < n_fields; ++f)
        accumulate_projection(el, out.block(e, static_cast<Field>(f)), parent,
                              u.block(rp->second, static_cast<Field>(f)), el);
    } else if (const auto mp = merged.find(el.node); mp != merged.end()) {
      for (int child : mp->second->children) {
        const auto ci = old_leaf.find(child);
        if (ci == old_leaf.end()) throw ConfigurationError("coarsened child was not a leaf before adaptation");
        const Element& ce = src.element(ci->second);
        for (int f = 0; f < n_fields; ++f)
          accumulate_projection(el, out.block(e, static_cast<Field>(f)), ce, u.block(ci->second, static_cast<Field>(f)),
                                ce);
      }
    } else {
      throw ConfigurationError("adapt report does not account for leaf node " + std::to_string(el.node));
    }
  }
  return out;
}

double l2_distance(const DgFunction& a, const DgFunction& b, Field f) {
  const DgSpace& space = a.space();
  if (&space != &b.space() && space.n_dofs() != b.space().n_dofs())
    throw ConfigurationError("l2_distance requires functions on the same space");
  double sum = 0.0;
  for (std::size_t ei = 0; ei < space.size(); ++ei) {
    const int e = static_cast<int>(ei);
    const auto ca = a.block(e, f);
    const auto cb = b.block(e, f);
    double local = 0.0;
    for (std::size_t k = 0; k < ca.size(); ++k) local += (ca[k] - cb[k]) * (ca[k] - cb[k]);
    sum += space.element(e).area * local;
  }
  return std::sqrt(sum);
}

}  // namespace dgflow
