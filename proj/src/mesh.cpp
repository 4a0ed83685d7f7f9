#include "dgflow/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace dgflow {

namespace {

constexpr int kDirX[4] = {-1, 1, 0, 0};
constexpr int kDirY[4] = {0, 0, -1, 1};
constexpr BoundarySide kSides[4] = {BoundarySide::west, BoundarySide::east, BoundarySide::south,
                                    BoundarySide::north};

}  // namespace

const char* to_string(BoundarySide side) {
  switch (side) {
    case BoundarySide::west: return "west";
    case BoundarySide::east: return "east";
    case BoundarySide::south: return "south";
    case BoundarySide::north: return "north";
    default: return "interior";
  }
}

Mesh Mesh::build_macro(int nx, int ny, Vec2 extent, int max_level, int order) {
  if (nx <= 0 || ny <= 0) throw ConfigurationError("macro grid needs positive cell counts");
  if (!(extent.x() > 0.0) || !(extent.y() > 0.0)) throw ConfigurationError("domain extent must be positive");
  if (max_level < 0 || max_level > 20) throw ConfigurationError("max_level must be in [0, 20]");
  if (order < 0) throw ConfigurationError("polynomial order must be non-negative");
  Mesh mesh;
  mesh.nx_ = nx;
  mesh.ny_ = ny;
  mesh.extent_ = extent;
  mesh.max_level_ = max_level;
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix) mesh.add_cell(0, ix, iy, -1, order);
  mesh.rebuild();
  return mesh;
}

int Mesh::add_cell(int level, int ix, int iy, int parent, int order) {
  Cell c;
  c.level = level;
  c.ix = ix;
  c.iy = iy;
  c.parent = parent;
  c.order = order;
  const int id = static_cast<int>(cells_.size());
  cells_.push_back(c);
  lookup_[key(level, ix, iy)] = id;
  return id;
}

int Mesh::find(int level, int ix, int iy) const {
  const auto it = lookup_.find(key(level, ix, iy));
  return it == lookup_.end() ? -1 : it->second;
}

Element Mesh::node_element(int node) const {
  const Cell& c = cells_.at(node);
  const double scale = std::ldexp(1.0, -c.level);
  Element e;
  e.node = node;
  e.level = c.level;
  e.extent = Vec2(extent_.x() / nx_ * scale, extent_.y() / ny_ * scale);
  e.center = Vec2((c.ix + 0.5) * e.extent.x(), (c.iy + 0.5) * e.extent.y());
  e.area = e.extent.x() * e.extent.y();
  e.order = c.order;
  e.index = node < static_cast<int>(leaf_index_.size()) ? leaf_index_[node] : -1;
  return e;
}

int Mesh::leaf_of_node(int node) const {
  if (node < 0 || node >= static_cast<int>(leaf_index_.size())) return -1;
  return leaf_index_[node];
}

void Mesh::leaf_neighbours(int node, int d, std::vector<int>& out) const {
  out.clear();
  const Cell& c = cells_[node];
  const int jx = c.ix + kDirX[d];
  const int jy = c.iy + kDirY[d];
  const int nxl = nx_ << c.level;
  const int nyl = ny_ << c.level;
  if (jx < 0 || jy < 0 || jx >= nxl || jy >= nyl) return;
  int level = c.level, x = jx, y = jy;
  int found = find(level, x, y);
  while (found < 0 && level > 0) {
    --level;
    x >>= 1;
    y >>= 1;
    found = find(level, x, y);
  }
  if (found < 0) return;
  // collect leaves of `found` touching the shared side (side opposite to d)
  std::function<void(int)> collect = [&](int n) {
    const Cell& cell = cells_[n];
    if (cell.leaf()) {
      out.push_back(n);
      return;
    }
    for (int k = 0; k < 4; ++k) {
      const int cx = k & 1, cy = k >> 1;
      const bool touches = (d == 0 && cx == 1) || (d == 1 && cx == 0) || (d == 2 && cy == 1) || (d == 3 && cy == 0);
      if (touches) collect(cell.children[k]);
    }
  };
  collect(found);
}

void Mesh::rebuild() {
  ++generation_;
  leaves_.clear();
  leaf_index_.assign(cells_.size(), -1);
  std::function<void(int)> visit = [&](int n) {
    const Cell& c = cells_[n];
    if (c.leaf()) {
      Element e = node_element(n);
      e.index = static_cast<int>(leaves_.size());
      leaf_index_[n] = e.index;
      leaves_.push_back(e);
      return;
    }
    for (int k = 0; k < 4; ++k) visit(c.children[k]);
  };
  for (int iy = 0; iy < ny_; ++iy)
    for (int ix = 0; ix < nx_; ++ix) visit(find(0, ix, iy));

  faces_.clear();
  leaf_faces_.assign(leaves_.size(), {});
  std::vector<int> nbrs;
  for (const Element& e : leaves_) {
    const Cell& c = cells_[e.node];
    const Vec2 lo = e.center - e.half();
    const Vec2 hi = e.center + e.half();
    for (int d = 0; d < 4; ++d) {
      leaf_neighbours(e.node, d, nbrs);
      Face f;
      if (nbrs.empty()) {
        f.side = kSides[d];
      } else if (nbrs.size() == 1) {
        const Cell& n = cells_[nbrs[0]];
        if (n.level == c.level) {
          if (d == 0 || d == 2) continue;  // created by the west/south neighbour
        } else if (n.level > c.level) {
          continue;
        } else {
          f.hanging = true;
        }
        f.outside = leaf_index_[nbrs[0]];
      } else {
        continue;  // finer neighbours own these faces
      }
      switch (d) {
        case 0: f.a = Vec2(lo.x(), lo.y()); f.b = Vec2(lo.x(), hi.y()); break;
        case 1: f.a = Vec2(hi.x(), lo.y()); f.b = Vec2(hi.x(), hi.y()); break;
        case 2: f.a = Vec2(lo.x(), lo.y()); f.b = Vec2(hi.x(), lo.y()); break;
        default: f.a = Vec2(lo.x(), hi.y()); f.b = Vec2(hi.x(), hi.y()); break;
      }
      f.inside = e.index;
      f.normal = Vec2(kDirX[d], kDirY[d]);
      f.measure = (f.b - f.a).norm();
      f.midpoint = 0.5 * (f.a + f.b);
      f.h = f.boundary() ? e.area / f.measure : 0.5 * (e.area + leaves_[f.outside].area) / f.measure;
      f.id = static_cast<int>(faces_.size());
      leaf_faces_[f.inside].push_back(f.id);
      if (!f.boundary()) leaf_faces_[f.outside].push_back(f.id);
      faces_.push_back(f);
    }
  }
}

FaceGeometry Mesh::face_geometry(int face) const {
  const Face& f = faces_.at(face);
  return {f.normal, f.measure, f.h};
}

int Mesh::locate(const Vec2& x) const {
  const double tol = 1e-12 * std::max(extent_.x(), extent_.y());
  if (!(x.x() >= -tol && x.x() <= extent_.x() + tol && x.y() >= -tol && x.y() <= extent_.y() + tol))
    throw ConfigurationError("point (" + std::to_string(x.x()) + ", " + std::to_string(x.y()) +
                             ") lies outside the domain");
  const int ix = std::clamp(static_cast<int>(std::floor(x.x() / extent_.x() * nx_)), 0, nx_ - 1);
  const int iy = std::clamp(static_cast<int>(std::floor(x.y() / extent_.y() * ny_)), 0, ny_ - 1);
  int n = find(0, ix, iy);
  while (!cells_[n].leaf()) {
    const Element e = node_element(n);
    const int k = (x.x() >= e.center.x() ? 1 : 0) + (x.y() >= e.center.y() ? 2 : 0);
    n = cells_[n].children[k];
  }
  return leaf_index_[n];
}

void Mesh::refine_cell(int node) {
  const Cell parent = cells_[node];
  std::array<int, 4> kids{};
  for (int k = 0; k < 4; ++k)
    kids[k] = add_cell(parent.level + 1, 2 * parent.ix + (k & 1), 2 * parent.iy + (k >> 1), node, parent.order);
  cells_[node].children = kids;
}

void Mesh::coarsen_cell(int parent) {
  Cell& p = cells_[parent];
  int order = 0;
  for (int child : p.children) {
    Cell& c = cells_[child];
    order = std::max(order, c.order);
    c.alive = false;
    lookup_.erase(key(c.level, c.ix, c.iy));
  }
  p.children = {-1, -1, -1, -1};
  p.order = order;
}

AdaptReport Mesh::execute_marks(std::span<const Mark> marks) {
  if (marks.size() != leaves_.size()) throw ConfigurationError("marks must be given for every leaf");
  AdaptReport report;
  const int n = static_cast<int>(leaves_.size());
  std::vector<int> target(n);
  for (int i = 0; i < n; ++i) {
    const int level = leaves_[i].level;
    target[i] = level;
    if (marks[i] == Mark::refine) {
      if (level < max_level_) target[i] = level + 1;
      else ++report.clamped_refine;
    } else if (marks[i] == Mark::coarsen) {
      if (level > 0) target[i] = level - 1;
      else ++report.clamped_coarsen;
    }
  }

  // A quartet coarsens only if all four siblings are leaves that want to.
  auto validate_quartets = [&](bool count) {
    for (int i = 0; i < n; ++i) {
      if (target[i] >= leaves_[i].level) continue;
      const int parent = cells_[leaves_[i].node].parent;
      bool ok = true;
      for (int child : cells_[parent].children) {
        const int li = leaf_index_[child];
        if (li < 0 || target[li] >= leaves_[li].level) {
          ok = false;
          break;
        }
      }
      if (!ok) {
        target[i] = leaves_[i].level;
        if (count) ++report.clamped_coarsen;
      }
    }
  };
  validate_quartets(true);

  for (bool changed = true; changed;) {
    changed = false;
    for (const Face& f : faces_) {
      if (f.boundary()) continue;
      const int a = f.inside, b = f.outside;
      if (target[a] < target[b] - 1) {
        target[a] = target[b] - 1;
        ++report.closure_promotions;
        changed = true;
      } else if (target[b] < target[a] - 1) {
        target[b] = target[a] - 1;
        ++report.closure_promotions;
        changed = true;
      }
    }
    if (changed) validate_quartets(false);
  }

  std::vector<int> to_coarsen, to_refine;
  for (int i = 0; i < n; ++i) {
    const Element& e = leaves_[i];
    if (target[i] > e.level) {
      to_refine.push_back(e.node);
    } else if (target[i] < e.level) {
      const int parent = cells_[e.node].parent;
      if (cells_[parent].children[0] == e.node) to_coarsen.push_back(parent);
    }
  }
  for (int parent : to_coarsen) {
    AdaptReport::Family fam{parent, cells_[parent].children};
    coarsen_cell(parent);
    report.coarsened.push_back(fam);
  }
  for (int node : to_refine) {
    refine_cell(node);
    report.refined.push_back({node, cells_[node].children});
  }
  if (report.changed()) rebuild();
  return report;
}

void Mesh::set_orders(std::span<const int> orders) {
  if (orders.size() != leaves_.size()) throw ConfigurationError("orders must be given for every leaf");
  for (std::size_t i = 0; i < orders.size(); ++i) {
    if (orders[i] < 0) throw ConfigurationError("polynomial order must be non-negative");
    cells_[leaves_[i].node].order = orders[i];
    leaves_[i].order = orders[i];
  }
  ++generation_;
}

void Mesh::set_uniform_order(int order) {
  std::vector<int> orders(leaves_.size(), order);
  set_orders(orders);
}

}  // namespace dgflow
