#include "dgflow/forms.hpp"

#include "dgflow/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

namespace dgflow {

const char* to_string(FieldSet set) {
  switch (set) {
    case FieldSet::pressure_only: return "pressure_only";
    case FieldSet::saturation_only: return "saturation_only";
    default: return "coupled";
  }
}

DofMap::DofMap(const DgSpace& space, FieldSet fields) : space_(&space), fields_(fields) {
  if (space.n_fields() != 2) throw ConfigurationError("DofMap expects a (p, s) space");
  if (fields != FieldSet::saturation_only) slot_[0] = n_selected_++;
  if (fields != FieldSet::pressure_only) slot_[1] = n_selected_++;
  offsets_.resize(space.size() + 1, 0);
  for (std::size_t e = 0; e < space.size(); ++e)
    offsets_[e + 1] = offsets_[e] + static_cast<std::size_t>(n_selected_) * space.n_modes(static_cast<int>(e));
}

void DofMap::gather(const DgFunction& u, Eigen::VectorXd& x) const {
  x.resize(static_cast<Eigen::Index>(size()));
  for (std::size_t ei = 0; ei < space_->size(); ++ei) {
    const int e = static_cast<int>(ei);
    for (int f = 0; f < 2; ++f) {
      if (slot_[f] < 0) continue;
      const auto c = u.block(e, static_cast<Field>(f));
      std::copy(c.begin(), c.end(), x.data() + offsets_[e] + slot_[f] * c.size());
    }
  }
}

void DofMap::scatter(const Eigen::VectorXd& x, DgFunction& u) const {
  for (std::size_t ei = 0; ei < space_->size(); ++ei) {
    const int e = static_cast<int>(ei);
    for (int f = 0; f < 2; ++f) {
      if (slot_[f] < 0) continue;
      auto c = u.block(e, static_cast<Field>(f));
      std::copy_n(x.data() + offsets_[e] + slot_[f] * c.size(), c.size(), c.begin());
    }
  }
}

double weighted_average(double q_minus, double q_plus, double k_minus, double k_plus) {
  const double sum = k_minus + k_plus;
  if (!(sum > 0.0)) throw ConfigurationError("degenerate face: zero normal permeability on both sides");
  return (k_plus * q_minus + k_minus * q_plus) / sum;
}

double harmonic_weight(double k_minus, double k_plus) {
  const double sum = k_minus + k_plus;
  if (!(sum > 0.0)) throw ConfigurationError("degenerate face: zero normal permeability on both sides");
  return 2.0 * k_plus * k_minus / sum;
}

PointValues point_values(const DgFunction& u, int e, const basis::Evaluation& ev) {
  const Element& el = u.space().element(e);
  const auto p = u.block(e, Field::pressure);
  const auto s = u.block(e, Field::saturation);
  PointValues v;
  Vec2 gp = Vec2::Zero(), gs = Vec2::Zero();
  for (std::size_t a = 0; a < p.size(); ++a) {
    v.p += p[a] * ev.value[a];
    v.s += s[a] * ev.value[a];
    gp += p[a] * ev.grad[a];
    gs += s[a] * ev.grad[a];
  }
  const Vec2 scale(2.0 / el.extent.x(), 2.0 / el.extent.y());
  v.grad_p = gp.cwiseProduct(scale);
  v.grad_s = gs.cwiseProduct(scale);
  return v;
}

Discretization::Discretization(const ProblemSetup& setup, const Model& model, FormConfig config)
    : setup_(&setup), model_(&model), config_(config), gravity_offset_(model.gravity_offset(setup.fluids)) {
  if (config_.delta_point < 0.0 || config_.delta_point > 1.0)
    throw ConfigurationError("penalty evaluation point must lie in [0, 1]");
}

double Discretization::beta(const DgSpace& space) const {
  if (config_.beta > 0.0) return config_.beta;
  const int r = std::max(1, space.max_order());
  return r * (r + 1.0);
}

FaceRocks Discretization::face_rocks(const Face& face, const Vec2& x) const {
  const double eps = 1e-10 * std::max(setup_->extent.x(), setup_->extent.y());
  FaceRocks r;
  r.minus = &setup_->rock(x - eps * face.normal);
  if (!face.boundary()) r.plus = &setup_->rock(x + eps * face.normal);
  return r;
}

PenaltyFactors Discretization::penalty_factors(const Face& face, const DgSpace& space, const Vec2& x) const {
  const FaceRocks rocks = face_rocks(face, x);
  const CutoffConfig& cut = setup_->cutoff;
  const FluidParams& fl = setup_->fluids;
  const double pt = config_.delta_point;
  const double km = rocks.minus->normal_permeability(face.normal);
  const double dpm = model_->delta_p(*rocks.minus, fl, pt, cut);
  const double dsm = model_->delta_s(*rocks.minus, fl, pt, cut);
  const double area_m = space.element(face.inside).area;
  PenaltyFactors out;
  if (face.boundary()) {
    const double geo = face.measure / area_m;
    out.gamma_p = dpm * km * geo;
    out.gamma_s = dsm * km * geo;
    return out;
  }
  const double kp = rocks.plus->normal_permeability(face.normal);
  const double dpp = model_->delta_p(*rocks.plus, fl, pt, cut);
  const double dsp = model_->delta_s(*rocks.plus, fl, pt, cut);
  const double geo = face.measure / std::min(area_m, space.element(face.outside).area);
  const double harm = harmonic_weight(km, kp);
  out.gamma_p = std::max(dpm, dpp) * harm * geo;
  out.gamma_s = std::max(dsm, dsp) * harm * geo;
  return out;
}

Vec2 Discretization::flux_p(const RockParams& rock, const PointCoefficients& c, const PointValues& v) const {
  return rock.K * (c.pp * v.grad_p + c.ps * v.grad_s + c.gp * setup_->fluids.g);
}

Vec2 Discretization::flux_s(const RockParams& rock, const PointCoefficients& c, const PointValues& v) const {
  return rock.K * (c.sp * (v.grad_p - gravity_offset_) + c.ss * v.grad_s + c.gs * setup_->fluids.g);
}

namespace {

/// Dense element-pair blocks of the Jacobian over the face-neighbour graph.
struct BlockStore {
  std::vector<std::vector<int>> nbrs;  // sorted, includes self
  std::vector<std::vector<Eigen::MatrixXd>> mats;

  void init(const Mesh& mesh, const DofMap& map) {
    const int n = static_cast<int>(mesh.size());
    nbrs.assign(n, {});
    mats.assign(n, {});
    for (int e = 0; e < n; ++e) {
      auto& list = nbrs[e];
      list.push_back(e);
      for (int fid : mesh.element_faces(e)) {
        const Face& f = mesh.faces()[fid];
        if (f.boundary()) continue;
        list.push_back(f.inside == e ? f.outside : f.inside);
      }
      std::sort(list.begin(), list.end());
      list.erase(std::unique(list.begin(), list.end()), list.end());
      for (int c : list) mats[e].push_back(Eigen::MatrixXd::Zero(map.local_size(e), map.local_size(c)));
    }
  }
  Eigen::MatrixXd& block(int r, int c) {
    const auto& list = nbrs[r];
    const auto it = std::lower_bound(list.begin(), list.end(), c);
    return mats[r][it - list.begin()];
  }

  SparseMatrix to_sparse(const DofMap& map) const {
    const int n = static_cast<int>(nbrs.size());
    const auto dim = static_cast<Eigen::Index>(map.size());
    std::vector<int> outer(map.size() + 1, 0);
    std::size_t nnz = 0;
    for (int c = 0; c < n; ++c)
      for (int r : nbrs[c]) nnz += static_cast<std::size_t>(map.local_size(r)) * map.local_size(c);
    std::vector<int> inner;
    std::vector<double> values;
    inner.reserve(nnz);
    values.reserve(nnz);
    std::size_t col = 0;
    for (int c = 0; c < n; ++c) {
      // the neighbour relation is symmetric, so the rows of column block c are nbrs[c]
      std::vector<const Eigen::MatrixXd*> column_blocks;
      for (int r : nbrs[c]) {
        const auto& rl = nbrs[r];
        column_blocks.push_back(&mats[r][std::lower_bound(rl.begin(), rl.end(), c) - rl.begin()]);
      }
      for (int j = 0; j < map.local_size(c); ++j) {
        for (std::size_t k = 0; k < nbrs[c].size(); ++k) {
          const int r = nbrs[c][k];
          const Eigen::MatrixXd& m = *column_blocks[k];
          for (int i = 0; i < m.rows(); ++i) {
            inner.push_back(static_cast<int>(map.offset(r)) + i);
            values.push_back(m(i, j));
          }
        }
        outer[++col] = static_cast<int>(inner.size());
      }
    }
    Eigen::Map<const SparseMatrix> view(dim, dim, static_cast<Eigen::Index>(inner.size()), outer.data(),
                                        inner.data(), values.data());
    return SparseMatrix(view);
  }
};

/// Everything needed at one quadrature point on one side.
struct SideState {
  int e = -1;
  int n = 0;
  basis::Evaluation ev;
  std::vector<Vec2> grad;  // physical
  PointValues v;
  const RockParams* rock = nullptr;
  PointCoefficients c;
  Vec2 fp, fs;  // fluxes
  Vec2 ep, es;  // d(flux)/d(s-bar) per unit trial value (implicit only)
};

class Assembler {
 public:
  Assembler(const Discretization& disc, const AssemblyInput& in, bool jacobian)
      : disc_(disc), in_(in), space_(in.u->space()), mesh_(space_.mesh()), map_(space_, in.fields),
        jacobian_(jacobian), beta_(disc.beta(space_)) {
    const auto n = space_.n_dofs();
    if (!space_.matches_mesh()) throw ConfigurationError("assembly requires a space on the current mesh");
    if (in.u_old == nullptr || in.u_old->space().n_dofs() != n)
      throw ConfigurationError("previous time level must live on the same space");
    if (!in.implicit && (in.s_bar == nullptr || in.s_bar->space().n_dofs() != n))
      throw ConfigurationError("frozen coefficients need an s_bar on the same space");
    if (!(in.tau > 0.0)) throw ConfigurationError("time step must be positive");
    if (in.alpha < 0.0 || in.alpha > 1.0) throw ConfigurationError("alpha must lie in [0, 1]");
    rows_p_ = map_.has(Field::pressure);
    rows_s_ = map_.has(Field::saturation);
    const auto& fl = disc.setup().fluids;
    g_ = fl.g;
    q_p_ = disc.setup().q_w + disc.setup().q_n;
    q_s_ = disc.setup().q_n;
    offset_ = disc.model().gravity_offset(fl);
  }

  AssembledSystem run() {
    residual_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(map_.size()));
    if (jacobian_) blocks_.init(mesh_, map_);
    const double ts = in_.tau * in_.alpha;
    const double ts_old = in_.tau * (1.0 - in_.alpha);
    volume_all(ts, ts_old);
    for (const Face& f : mesh_.faces()) {
      try {
        face(f, *in_.u, in_.implicit ? nullptr : in_.s_bar, in_.implicit, rows_p_ ? 1.0 : 0.0, rows_s_ ? ts : 0.0,
             jacobian_);
        if (rows_s_ && ts_old > 0.0) face(f, *in_.u_old, in_.u_old, false, 0.0, ts_old, false);
      } catch (const DomainError& err) {
        throw AssemblyError(err.what(), f.inside);
      }
    }
    AssembledSystem out;
    for (std::size_t e = 0; e < space_.size(); ++e) {
      for (int i = 0; i < map_.local_size(static_cast<int>(e)); ++i)
        if (!std::isfinite(residual_[static_cast<Eigen::Index>(map_.offset(static_cast<int>(e)) + i)]))
          throw AssemblyError("non-finite residual", static_cast<int>(e));
    }
    out.residual = std::move(residual_);
    if (jacobian_) out.jacobian = blocks_.to_sparse(map_);
    return out;
  }

 private:
  double coefficient_argument(const PointValues& v, const DgFunction* sbar, int e, const basis::Evaluation& ev,
                              bool implicit) const {
    if (implicit || sbar == nullptr) return v.s;
    const auto c = sbar->block(e, Field::saturation);
    double s = 0.0;
    for (std::size_t a = 0; a < c.size(); ++a) s += c[a] * ev.value[a];
    return s;
  }

  void fill_side(SideState& st, const DgFunction& u, const DgFunction* sbar, bool implicit, int e, const Vec2& x,
                 const RockParams& rock) const {
    const Element& el = space_.element(e);
    st.e = e;
    basis::evaluate(el.order, el.to_reference(x), st.ev);
    st.n = static_cast<int>(st.ev.value.size());
    st.grad.resize(st.n);
    const Vec2 scale(2.0 / el.extent.x(), 2.0 / el.extent.y());
    for (int b = 0; b < st.n; ++b) st.grad[b] = st.ev.grad[b].cwiseProduct(scale);
    st.v = point_values(u, e, st.ev);
    st.rock = &rock;
    st.c = disc_.coefficients(rock, coefficient_argument(st.v, sbar, e, st.ev, implicit));
    st.fp = disc_.flux_p(rock, st.c, st.v);
    st.fs = disc_.flux_s(rock, st.c, st.v);
    if (implicit) {
      const auto& c = st.c;
      st.ep = rock.K * (c.dpp * st.v.grad_p + c.dps * st.v.grad_s + c.dgp * g_);
      st.es = rock.K * (c.dsp * (st.v.grad_p - offset_) + c.dss * st.v.grad_s + c.dgs * g_);
    } else {
      st.ep = st.es = Vec2::Zero();
    }
  }

  void volume_all(double ts, double ts_old) {
    const int n = static_cast<int>(space_.size());
    const int threads = std::max(1, std::min(disc_.config().threads, n));
    if (threads == 1) {
      for (int e = 0; e < n; ++e) volume_guarded(e, ts, ts_old);
      return;
    }
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (int e = t; e < n; e += threads) volume_guarded(e, ts, ts_old);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& err : errors)
      if (err) std::rethrow_exception(err);
  }

  void volume_guarded(int e, double ts, double ts_old) {
    try {
      volume(e, ts, ts_old);
    } catch (const DomainError& err) {
      throw AssemblyError(err.what(), e);
    }
  }

  void volume(int e, double ts, double ts_old) {
    const Element& el = space_.element(e);
    const int r = el.order;
    const QuadratureRule& rule = square_rule(volume_degree(r));
    const BasisTable& tab = volume_table(r, volume_degree(r));
    const int n = tab.n_modes;
    const Vec2 scale(2.0 / el.extent.x(), 2.0 / el.extent.y());
    const double jac = el.area / 4.0;
    const auto up = in_.u->block(e, Field::pressure);
    const auto us = in_.u->block(e, Field::saturation);
    const auto os = in_.u_old->block(e, Field::saturation);
    const auto op = in_.u_old->block(e, Field::pressure);
    const std::span<const double> sb =
        in_.implicit ? us : in_.s_bar->block(e, Field::saturation);
    double* R = residual_.data() + map_.offset(e);
    Eigen::MatrixXd* J = jacobian_ ? &blocks_.block(e, e) : nullptr;
    const int lp = map_.local(e, Field::pressure, 0);
    const int ls = map_.local(e, Field::saturation, 0);

    std::vector<Vec2> grad(n), kgrad(n);
    for (int q = 0; q < tab.n_points; ++q) {
      const Vec2 x = el.to_physical(rule.points[q]);
      const RockParams& rock = disc_.setup().rock(x);
      const double w = rule.weights[q] * jac;
      PointValues v;
      double sbar = 0.0, s_old = 0.0;
      Vec2 gp = Vec2::Zero(), gs = Vec2::Zero();
      for (int a = 0; a < n; ++a) {
        const double phi = tab.phi(q, a);
        grad[a] = tab.dphi(q, a).cwiseProduct(scale);
        v.p += up[a] * phi;
        v.s += us[a] * phi;
        gp += up[a] * grad[a];
        gs += us[a] * grad[a];
        sbar += sb[a] * phi;
        s_old += os[a] * phi;
      }
      v.grad_p = gp;
      v.grad_s = gs;
      const PointCoefficients c = disc_.coefficients(rock, sbar);
      const Vec2 fp = disc_.flux_p(rock, c, v);
      const Vec2 fs = disc_.flux_s(rock, c, v);
      const double phi_por = rock.porosity;

      if (lp >= 0)
        for (int a = 0; a < n; ++a) R[lp + a] += w * (fp.dot(grad[a]) - q_p_ * tab.phi(q, a));
      if (ls >= 0) {
        for (int a = 0; a < n; ++a)
          R[ls + a] += w * (phi_por * (v.s - s_old) * tab.phi(q, a) + ts * (fs.dot(grad[a]) - q_s_ * tab.phi(q, a)));
        if (ts_old > 0.0) {
          PointValues vo;
          Vec2 ogp = Vec2::Zero(), ogs = Vec2::Zero();
          for (int a = 0; a < n; ++a) {
            vo.p += op[a] * tab.phi(q, a);
            ogp += op[a] * grad[a];
            ogs += os[a] * grad[a];
          }
          vo.s = s_old;
          vo.grad_p = ogp;
          vo.grad_s = ogs;
          const Vec2 fso = disc_.flux_s(rock, disc_.coefficients(rock, s_old), vo);
          for (int a = 0; a < n; ++a) R[ls + a] += w * ts_old * (fso.dot(grad[a]) - q_s_ * tab.phi(q, a));
        }
      }
      if (!J) continue;
      for (int b = 0; b < n; ++b) kgrad[b] = rock.K * grad[b];
      Vec2 ep = Vec2::Zero(), es = Vec2::Zero();
      if (in_.implicit) {
        ep = rock.K * (c.dpp * v.grad_p + c.dps * v.grad_s + c.dgp * g_);
        es = rock.K * (c.dsp * (v.grad_p - offset_) + c.dss * v.grad_s + c.dgs * g_);
      }
      for (int b = 0; b < n; ++b) {
        const double psi = tab.phi(q, b);
        const Vec2 dfp_dp = c.pp * kgrad[b];
        const Vec2 dfp_ds = c.ps * kgrad[b] + ep * psi;
        const Vec2 dfs_dp = c.sp * kgrad[b];
        const Vec2 dfs_ds = c.ss * kgrad[b] + es * psi;
        for (int a = 0; a < n; ++a) {
          if (lp >= 0) {
            (*J)(lp + a, lp + b) += w * dfp_dp.dot(grad[a]);
            if (ls >= 0) (*J)(lp + a, ls + b) += w * dfp_ds.dot(grad[a]);
          }
          if (ls >= 0) {
            if (lp >= 0) (*J)(ls + a, lp + b) += w * ts * dfs_dp.dot(grad[a]);
            (*J)(ls + a, ls + b) += w * (phi_por * psi * tab.phi(q, a) + ts * dfs_ds.dot(grad[a]));
          }
        }
      }
    }
  }

  /// Face terms for one function pass. scale_p / scale_s multiply the pressure and
  /// saturation rows (0 disables them).
  void face(const Face& f, const DgFunction& u, const DgFunction* sbar, bool implicit, double scale_p, double scale_s,
            bool jac) {
    const GaussRule1D& g = gauss_for_degree(face_degree(space_, f));
    const Vec2& nu = f.normal;
    const double beta = beta_;
    for (std::size_t qi = 0; qi < g.points.size(); ++qi) {
      const Vec2 x = f.point(g.points[qi]);
      const double w = g.weights[qi] * f.measure / 2.0;
      const FaceRocks rocks = disc_.face_rocks(f, x);
      fill_side(m_, u, sbar, implicit, f.inside, x, *rocks.minus);
      if (f.boundary()) {
        boundary_point(f, x, w, scale_p, scale_s, jac, beta);
        continue;
      }
      fill_side(p_, u, sbar, implicit, f.outside, x, *rocks.plus);
      const double km = rocks.minus->normal_permeability(nu);
      const double kp = rocks.plus->normal_permeability(nu);
      if (!(km + kp > 0.0)) throw ConfigurationError("degenerate face");
      const double om = kp / (km + kp), op = km / (km + kp);
      const PenaltyFactors pen = disc_.penalty_factors(f, space_, x);
      const double avg_p = om * m_.fp.dot(nu) + op * p_.fp.dot(nu);
      const double avg_s = om * m_.fs.dot(nu) + op * p_.fs.dot(nu);
      const double jump_p = m_.v.p - p_.v.p;
      const double jump_s = m_.v.s - p_.v.s;
      const double gp = beta * pen.gamma_p, gs = beta * pen.gamma_s;
      SideState* sides[2] = {&m_, &p_};
      const double sign[2] = {1.0, -1.0};
      const double omega[2] = {om, op};
      for (int sg = 0; sg < 2; ++sg) {
        const SideState& S = *sides[sg];
        double* R = residual_.data() + map_.offset(S.e);
        const int lp = map_.local(S.e, Field::pressure, 0);
        const int ls = map_.local(S.e, Field::saturation, 0);
        for (int a = 0; a < S.n; ++a) {
          const double phi = sign[sg] * S.ev.value[a] * w;
          if (lp >= 0 && scale_p != 0.0) R[lp + a] += scale_p * phi * (-avg_p + gp * jump_p);
          if (ls >= 0 && scale_s != 0.0) R[ls + a] += scale_s * phi * (-avg_s + gs * jump_s);
        }
      }
      if (!jac) continue;
      for (int tg = 0; tg < 2; ++tg) {
        SideState& T = *sides[tg];
        const Vec2 knu = T.rock->K * nu;
        nd_.resize(T.n);
        for (int b = 0; b < T.n; ++b) nd_[b] = T.grad[b].dot(knu);
        const double epn = T.ep.dot(nu), esn = T.es.dot(nu);
        for (int sg = 0; sg < 2; ++sg) {
          const SideState& S = *sides[sg];
          Eigen::MatrixXd& B = blocks_.block(S.e, T.e);
          const int rp = map_.local(S.e, Field::pressure, 0), rs = map_.local(S.e, Field::saturation, 0);
          const int cp = map_.local(T.e, Field::pressure, 0), cs = map_.local(T.e, Field::saturation, 0);
          for (int b = 0; b < T.n; ++b) {
            const double psi = T.ev.value[b];
            const double jb = sign[tg] * psi;
            const double dfp_dp = T.c.pp * nd_[b];
            const double dfp_ds = T.c.ps * nd_[b] + epn * psi;
            const double dfs_dp = T.c.sp * nd_[b];
            const double dfs_ds = T.c.ss * nd_[b] + esn * psi;
            for (int a = 0; a < S.n; ++a) {
              const double phi = sign[sg] * S.ev.value[a] * w;
              if (rp >= 0 && scale_p != 0.0) {
                if (cp >= 0) B(rp + a, cp + b) += scale_p * phi * (-omega[tg] * dfp_dp + gp * jb);
                if (cs >= 0) B(rp + a, cs + b) += scale_p * phi * (-omega[tg] * dfp_ds);
              }
              if (rs >= 0 && scale_s != 0.0) {
                if (cp >= 0) B(rs + a, cp + b) += scale_s * phi * (-omega[tg] * dfs_dp);
                if (cs >= 0) B(rs + a, cs + b) += scale_s * phi * (-omega[tg] * dfs_ds + gs * jb);
              }
            }
          }
        }
      }
    }
  }

  void boundary_point(const Face& f, const Vec2& x, double w, double scale_p, double scale_s, bool jac,
                      double beta) {
    const BoundaryData bd = disc_.setup().boundary(f.side, x);
    const Vec2& nu = f.normal;
    const SideState& S = m_;
    double* R = residual_.data() + map_.offset(S.e);
    const int lp = map_.local(S.e, Field::pressure, 0);
    const int ls = map_.local(S.e, Field::saturation, 0);
    const bool do_p = lp >= 0 && scale_p != 0.0;
    const bool do_s = ls >= 0 && scale_s != 0.0;
    PenaltyFactors pen;
    if (bd.p_dirichlet || bd.s_dirichlet) pen = disc_.penalty_factors(f, space_, x);
    const double gp = beta * pen.gamma_p, gs = beta * pen.gamma_s;
    const double p_D = bd.p_dirichlet ? disc_.pressure_dirichlet(*S.rock, bd) : 0.0;
    for (int a = 0; a < S.n; ++a) {
      const double phi = S.ev.value[a] * w;
      if (do_p) {
        if (bd.p_dirichlet) R[lp + a] += scale_p * phi * (-S.fp.dot(nu) + gp * (S.v.p - p_D));
        else R[lp + a] += scale_p * phi * (bd.J_n + bd.J_w);
      }
      if (do_s) {
        if (bd.s_dirichlet) R[ls + a] += scale_s * phi * (-S.fs.dot(nu) + gs * (S.v.s - bd.s_n));
        else R[ls + a] += scale_s * phi * bd.J_n;
      }
    }
    if (!jac || !(bd.p_dirichlet || bd.s_dirichlet)) return;
    Eigen::MatrixXd& B = blocks_.block(S.e, S.e);
    const Vec2 knu = S.rock->K * nu;
    const double epn = S.ep.dot(nu), esn = S.es.dot(nu);
    for (int b = 0; b < S.n; ++b) {
      const double psi = S.ev.value[b];
      const double nd = S.grad[b].dot(knu);
      for (int a = 0; a < S.n; ++a) {
        const double phi = S.ev.value[a] * w;
        if (do_p && bd.p_dirichlet) {
          B(lp + a, lp + b) += scale_p * phi * (-S.c.pp * nd + gp * psi);
          if (ls >= 0) B(lp + a, ls + b) += scale_p * phi * (-(S.c.ps * nd + epn * psi));
        }
        if (do_s && bd.s_dirichlet) {
          if (lp >= 0) B(ls + a, lp + b) += scale_s * phi * (-S.c.sp * nd);
          B(ls + a, ls + b) += scale_s * phi * (-(S.c.ss * nd + esn * psi) + gs * psi);
        }
      }
    }
  }

  const Discretization& disc_;
  const AssemblyInput& in_;
  const DgSpace& space_;
  const Mesh& mesh_;
  DofMap map_;
  bool jacobian_;
  double beta_;
  bool rows_p_ = false, rows_s_ = false;
  Vec2 g_, offset_;
  double q_p_ = 0.0, q_s_ = 0.0;
  Eigen::VectorXd residual_;
  BlockStore blocks_;
  SideState m_, p_;
  std::vector<double> nd_;
};

}  // namespace

AssembledSystem Discretization::assemble(const AssemblyInput& in, bool with_jacobian) const {
  if (in.u == nullptr) throw ConfigurationError("assembly needs a current iterate");
  Assembler assembler(*this, in, with_jacobian);
  return assembler.run();
}

}  // namespace dgflow
