#include "dgflow/solver.hpp"

#include <Eigen/SparseLU>
#include <Eigen/UmfPackSupport>
#include <unsupported/Eigen/IterativeSolvers>

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

namespace dgflow {

namespace {

double relative_residual(const SparseMatrix& A, const Eigen::VectorXd& x, const Eigen::VectorXd& b) {
  const double nb = b.norm();
  const double nr = (A * x - b).norm();
  return nb > 0.0 ? nr / nb : nr;
}

/// Symbolic UMFPACK analysis of the last sparsity pattern seen by this thread.
struct UmfpackCache {
  std::unique_ptr<Eigen::UmfPackLU<SparseMatrix>> lu;
  std::vector<int> outer, inner;

  bool same_pattern(const SparseMatrix& A) const {
    if (!lu || A.outerSize() + 1 != static_cast<Eigen::Index>(outer.size())) return false;
    if (A.nonZeros() != static_cast<Eigen::Index>(inner.size())) return false;
    return std::equal(outer.begin(), outer.end(), A.outerIndexPtr()) &&
           std::equal(inner.begin(), inner.end(), A.innerIndexPtr());
  }
  void remember(const SparseMatrix& A) {
    outer.assign(A.outerIndexPtr(), A.outerIndexPtr() + A.outerSize() + 1);
    inner.assign(A.innerIndexPtr(), A.innerIndexPtr() + A.nonZeros());
  }
  void forget() {
    lu.reset();
    outer.clear();
    inner.clear();
  }
};

UmfpackCache& umfpack_cache() {
  thread_local UmfpackCache cache;
  return cache;
}

}  // namespace

Eigen::VectorXd linear_solve(const SparseMatrix& A, const Eigen::VectorXd& b, const LinearSolverConfig& cfg,
                             LinearSolveInfo* info) {
  if (A.rows() != A.cols() || A.rows() != b.size()) throw LinearSolverError("inconsistent system dimensions", NAN);
  if (b.size() == 0) return b;
  if (!b.allFinite()) throw LinearSolverError("non-finite right-hand side", NAN);
  LinearSolveInfo local;
  Eigen::VectorXd x;
  if (static_cast<std::size_t>(A.rows()) <= cfg.direct_threshold) {
    SparseMatrix compressed;
    const SparseMatrix& M = A.isCompressed() ? A : (compressed = A, compressed.makeCompressed(), compressed);
    local.direct = true;
    bool done = false;
    {
      // UMFPACK is much faster on the dense element blocks but depends on the
      // system BLAS; any failure falls through to the BLAS-free SparseLU.
      UmfpackCache& cache = umfpack_cache();
      if (!cache.same_pattern(M)) {
        cache.lu = std::make_unique<Eigen::UmfPackLU<SparseMatrix>>();
        cache.lu->umfpackControl()(UMFPACK_IRSTEP) = 0;  // accuracy is checked below
        cache.lu->analyzePattern(M);
        cache.remember(M);
      }
      auto& lu = *cache.lu;
      if (lu.info() == Eigen::Success) lu.factorize(M);
      if (lu.info() == Eigen::Success) {
        x = lu.solve(b);
        if (lu.info() == Eigen::Success && x.allFinite()) {
          local.relative_residual = relative_residual(A, x, b);
          done = local.relative_residual < 1e-6;
        }
      }
      if (!done) cache.forget();
    }
    if (!done) {
      Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
      lu.compute(M);
      if (lu.info() != Eigen::Success) throw LinearSolverError("sparse LU factorization failed (singular matrix?)", NAN);
      x = lu.solve(b);
      if (lu.info() != Eigen::Success) throw LinearSolverError("sparse LU solve failed", NAN);
      local.relative_residual = relative_residual(A, x, b);
      if (!x.allFinite() || !(local.relative_residual < 1e-6))
        throw LinearSolverError("direct solve is inaccurate (numerically singular matrix)", local.relative_residual);
    }
  } else {
    Eigen::GMRES<SparseMatrix, Eigen::IncompleteLUT<double>> gmres;
    gmres.preconditioner().setDroptol(1e-6);
    gmres.preconditioner().setFillfactor(10);
    gmres.set_restart(cfg.restart);
    gmres.setTolerance(cfg.tolerance);
    gmres.setMaxIterations(cfg.max_iterations);
    gmres.compute(A);
    if (gmres.info() != Eigen::Success) throw LinearSolverError("preconditioner setup failed", NAN);
    x = gmres.solve(b);
    local.direct = false;
    local.iterations = static_cast<int>(gmres.iterations());
    local.relative_residual = relative_residual(A, x, b);
    if (gmres.info() != Eigen::Success || !x.allFinite() || !(local.relative_residual <= 10.0 * cfg.tolerance))
      throw LinearSolverError("GMRES did not converge", local.relative_residual);
  }
  if (info) *info = local;
  return x;
}

NewtonResult newton_solve(const ResidualProvider& provider, Eigen::VectorXd x0, const NewtonConfig& cfg,
                          const NewtonHook& hook) {
  if (!(cfg.atol > 0.0 && cfg.rtol > 0.0)) throw ConfigurationError("Newton tolerances must be positive");
  NewtonResult res;
  res.x = std::move(x0);
  Eigen::VectorXd R;
  SparseMatrix J;
  provider(res.x, R, &J);
  res.initial_residual = res.residual = R.norm();
  if (!std::isfinite(res.residual)) throw NonlinearSolverError("non-finite initial residual", res.x, 0);
  const double target = std::max(cfg.atol, cfg.rtol * res.initial_residual);
  int growth = 0;
  while (res.residual > target) {
    if (res.iterations >= cfg.max_iterations)
      throw NonlinearSolverError("Newton reached the iteration cap (residual " + std::to_string(res.residual) + ")",
                                 res.x, res.iterations);
    Eigen::VectorXd dx;
    try {
      dx = linear_solve(J, -R, cfg.linear);
    } catch (const LinearSolverError& err) {
      throw NonlinearSolverError(std::string("linear solve failed inside Newton: ") + err.what(), res.x,
                                 res.iterations);
    }
    const double previous = res.residual;
    double step = 1.0;
    Eigen::VectorXd trial = res.x + dx;
    if (hook) hook(trial);
    provider(trial, R, &J);
    double norm = R.norm();
    if (cfg.line_search) {
      while (!(norm < previous) && step > 1.0 / 64.0) {
        step *= 0.5;
        trial = res.x + step * dx;
        if (hook) hook(trial);
        provider(trial, R, &J);
        norm = R.norm();
      }
    }
    res.x = std::move(trial);
    res.residual = norm;
    ++res.iterations;
    if (!std::isfinite(norm)) throw NonlinearSolverError("Newton produced a non-finite residual", res.x, res.iterations);
    growth = norm > previous ? growth + 1 : 0;
    if (growth >= cfg.divergence_window)
      throw NonlinearSolverError("Newton diverged (residual grew " + std::to_string(growth) + " times in a row)", res.x,
                                 res.iterations);
  }
  return res;
}

}  // namespace dgflow
