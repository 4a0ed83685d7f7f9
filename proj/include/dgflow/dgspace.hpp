#pragma once

#include "dgflow/basis.hpp"
#include "dgflow/mesh.hpp"

#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace dgflow {

enum class Field : int { pressure = 0, saturation = 1 };

/// Variable-order modal DG space: one Q_r block per leaf and per scalar field.
///
/// The space snapshots the leaf geometry and orders, so a function defined on
/// it stays evaluable after the mesh has been adapted (needed for transfer).
/// Face connectivity is read from the mesh and is only valid while
/// `mesh_generation()` matches the mesh.
class DgSpace {
 public:
  /// Orders taken from the mesh.
  explicit DgSpace(const Mesh& mesh, int n_fields = 2);
  /// Explicit per-leaf orders (>= 0).
  DgSpace(const Mesh& mesh, std::vector<int> orders, int n_fields = 2);

  const Mesh& mesh() const { return *mesh_; }
  std::uint64_t mesh_generation() const { return generation_; }
  bool matches_mesh() const { return generation_ == mesh_->generation(); }

  int n_fields() const { return n_fields_; }
  std::size_t size() const { return elements_.size(); }
  const std::vector<Element>& elements() const { return elements_; }
  const Element& element(int e) const { return elements_[e]; }
  int order(int e) const { return elements_[e].order; }
  int max_order() const { return max_order_; }
  int n_modes(int e) const { return block_size(elements_[e].order); }

  /// Offset of element e's block (all fields) in the coefficient vector.
  std::size_t block_offset(int e) const { return offsets_[e]; }
  std::size_t offset(int e, Field f) const {
    return offsets_[e] + static_cast<std::size_t>(f) * n_modes(e);
  }
  /// Total coefficient count = sum_E n_fields * (r_E + 1)^2.
  std::size_t n_dofs() const { return offsets_.back(); }
  /// Scalar dofs of one field.
  std::size_t n_scalar_dofs() const { return offsets_.back() / n_fields_; }

 private:
  void build();

  const Mesh* mesh_;
  std::uint64_t generation_;
  int n_fields_;
  int max_order_ = 0;
  std::vector<Element> elements_;
  std::vector<std::size_t> offsets_;
};

using SpacePtr = std::shared_ptr<const DgSpace>;

/// Coefficients of (p, s) (or any n_fields scalars) on a DgSpace.
class DgFunction {
 public:
  DgFunction() = default;
  explicit DgFunction(SpacePtr space);

  const DgSpace& space() const { return *space_; }
  const SpacePtr& space_ptr() const { return space_; }
  Eigen::VectorXd& coefficients() { return coeffs_; }
  const Eigen::VectorXd& coefficients() const { return coeffs_; }

  std::span<double> block(int e, Field f) {
    return {coeffs_.data() + space_->offset(e, f), static_cast<std::size_t>(space_->n_modes(e))};
  }
  std::span<const double> block(int e, Field f) const {
    return {coeffs_.data() + space_->offset(e, f), static_cast<std::size_t>(space_->n_modes(e))};
  }

  double mean(int e, Field f) const { return coeffs_[space_->offset(e, f)]; }
  /// Value at a reference point of element e.
  double value_ref(int e, Field f, const Vec2& xi) const;
  /// Value at a physical point inside element e.
  double value(int e, Field f, const Vec2& x) const { return value_ref(e, f, space_->element(e).to_reference(x)); }
  /// Value at a physical point (locates the leaf; requires a current mesh).
  double evaluate(Field f, const Vec2& x) const;

  /// Integral over the domain of one field.
  double integral(Field f) const;
  /// L2 norm of one field.
  double l2_norm(Field f) const;

 private:
  SpacePtr space_;
  Eigen::VectorXd coeffs_;
};

using ScalarField = std::function<double(const Vec2&)>;

/// L2 projection of f into one field of u (elementwise, Gauss degree >= 2 r + 1).
void l2_project(DgFunction& u, Field field, const ScalarField& f, int extra_degree = 0);

/// Copy of u on the same mesh with every order lowered by one (floor 0).
DgFunction project_to_lower_order(const DgFunction& u);

/// Copy of u re-expanded on another space over the same leaves (zero-pads or truncates modes).
DgFunction change_orders(const DgFunction& u, SpacePtr target);

/// Moves u onto a space over the adapted mesh. Surviving leaves copy their
/// coefficients (padding/truncating on order change), refined children get the
/// exact re-expansion of the parent polynomial, and coarsened parents get the L2
/// projection of the four children. Throws if the report does not explain a leaf.
DgFunction transfer_on_adapt(const DgFunction& u, const AdaptReport& report, SpacePtr target);

/// L2 distance between one field of two functions on the same space.
double l2_distance(const DgFunction& a, const DgFunction& b, Field f);

}  // namespace dgflow
