#pragma once

#include "dgflow/common.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

namespace dgflow {

enum class BoundarySide : int8_t { none = -1, west = 0, east = 1, south = 2, north = 3 };

const char* to_string(BoundarySide side);

/// Leaf element of the adaptive mesh. `index` is the position in Mesh::elements()
/// and changes with every adaptation; `node` is stable for the lifetime of the cell.
struct Element {
  int index = -1;
  int node = -1;
  int level = 0;
  Vec2 center = Vec2::Zero();
  Vec2 extent = Vec2::Zero();  // (dx, dy)
  double area = 0.0;
  int order = 1;

  Vec2 half() const { return 0.5 * extent; }
  double max_edge() const { return std::max(extent.x(), extent.y()); }
  /// Reference coordinates in [-1,1]^2 of a physical point.
  Vec2 to_reference(const Vec2& x) const {
    return Vec2(2.0 * (x.x() - center.x()) / extent.x(), 2.0 * (x.y() - center.y()) / extent.y());
  }
  Vec2 to_physical(const Vec2& xi) const {
    return Vec2(center.x() + 0.5 * extent.x() * xi.x(), center.y() + 0.5 * extent.y() * xi.y());
  }
};

/// Mesh face. Interior faces are stored once; on a hanging-node face the inside
/// element is the finer one and `outside` is its coarse neighbour.
struct Face {
  int id = -1;
  int inside = -1;   // leaf index of E-
  int outside = -1;  // leaf index of E+, -1 on the boundary
  BoundarySide side = BoundarySide::none;
  Vec2 normal = Vec2::Zero();  // unit, directed E- -> E+ (outward on the boundary)
  Vec2 a = Vec2::Zero(), b = Vec2::Zero();
  double measure = 0.0;
  Vec2 midpoint = Vec2::Zero();
  double h = 0.0;  // avg(|E+|,|E-|)/|e| inside, |E-|/|e| on the boundary
  bool hanging = false;

  bool boundary() const { return outside < 0; }
  Vec2 point(double t) const { return a + 0.5 * (t + 1.0) * (b - a); }  // t in [-1,1]
};

/// Result of Mesh::face_geometry.
struct FaceGeometry {
  Vec2 normal;
  double measure;
  double h;
};

enum class Mark : uint8_t { keep, refine, coarsen };

struct AdaptReport {
  struct Family {
    int parent = -1;                 // node id
    std::array<int, 4> children{};  // node ids (SW, SE, NW, NE)
  };
  std::vector<Family> refined;
  std::vector<Family> coarsened;
  int clamped_refine = 0;     // refine requests at max_level
  int clamped_coarsen = 0;    // coarsen requests at level 0 or on incomplete quartets
  int closure_promotions = 0;  // marks raised to keep the one-level rule

  bool changed() const { return !refined.empty() || !coarsened.empty(); }
};

/// Nonconforming quadtree forest over a structured nx x ny macro grid.
class Mesh {
 public:
  static Mesh build_macro(int nx, int ny, Vec2 extent, int max_level = 3, int order = 1);

  int macro_nx() const { return nx_; }
  int macro_ny() const { return ny_; }
  Vec2 extent() const { return extent_; }
  int max_level() const { return max_level_; }
  /// Bumped on every structural or order change.
  std::uint64_t generation() const { return generation_; }

  const std::vector<Element>& elements() const { return leaves_; }
  const std::vector<Face>& faces() const { return faces_; }
  std::size_t size() const { return leaves_.size(); }
  /// Face ids touching a leaf (either side).
  const std::vector<int>& element_faces(int leaf) const { return leaf_faces_[leaf]; }

  FaceGeometry face_geometry(int face) const;

  /// Leaf index of a stable node id, or -1 if the node is not a current leaf.
  int leaf_of_node(int node) const;
  /// Geometry of any node ever created (used to transfer data from removed cells).
  Element node_element(int node) const;
  int node_parent(int node) const { return cells_[node].parent; }
  const std::array<int, 4>& node_children(int node) const { return cells_[node].children; }

  /// Leaf containing x (points on internal edges go to the upper/right cell).
  int locate(const Vec2& x) const;

  AdaptReport execute_marks(std::span<const Mark> marks);
  void set_orders(std::span<const int> orders);
  void set_uniform_order(int order);

 private:
  struct Cell {
    int level = 0;
    int ix = 0, iy = 0;
    int parent = -1;
    std::array<int, 4> children{-1, -1, -1, -1};
    int order = 1;
    bool alive = true;
    bool leaf() const { return children[0] < 0; }
  };

  static std::uint64_t key(int level, int ix, int iy) {
    return (static_cast<std::uint64_t>(level) << 56) | (static_cast<std::uint64_t>(ix) << 28) |
           static_cast<std::uint64_t>(iy);
  }
  int find(int level, int ix, int iy) const;
  int add_cell(int level, int ix, int iy, int parent, int order);
  void refine_cell(int node);
  void coarsen_cell(int parent);
  /// Leaf neighbours of a leaf across side d (finer ones listed individually).
  void leaf_neighbours(int node, int d, std::vector<int>& out) const;
  void rebuild();

  int nx_ = 0, ny_ = 0;
  Vec2 extent_ = Vec2::Zero();
  int max_level_ = 0;
  std::uint64_t generation_ = 0;
  std::vector<Cell> cells_;
  std::unordered_map<std::uint64_t, int> lookup_;
  std::vector<int> leaf_index_;  // node -> leaf index or -1
  std::vector<Element> leaves_;
  std::vector<Face> faces_;
  std::vector<std::vector<int>> leaf_faces_;
};

}  // namespace dgflow
