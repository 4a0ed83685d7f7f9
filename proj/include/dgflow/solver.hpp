#pragma once

#include "dgflow/forms.hpp"

#include <functional>

namespace dgflow {

struct LinearSolverConfig {
  /// Systems up to this dimension are factorized directly.
  std::size_t direct_threshold = 200000;
  double tolerance = 1e-10;  // relative residual for the Krylov path
  int max_iterations = 2000;
  int restart = 200;
};

struct LinearSolveInfo {
  bool direct = true;
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Solves A x = b. Throws LinearSolverError on breakdown, singularity or when
/// the tolerance is not reached.
Eigen::VectorXd linear_solve(const SparseMatrix& A, const Eigen::VectorXd& b, const LinearSolverConfig& cfg = {},
                             LinearSolveInfo* info = nullptr);

struct NewtonConfig {
  double atol = 1e-10;
  double rtol = 1e-8;
  int max_iterations = 30;
  int divergence_window = 3;  // consecutive residual increases counted as divergence
  bool line_search = false;
  LinearSolverConfig linear;
};

/// R(x) and optionally J(x).
using ResidualProvider = std::function<void(const Eigen::VectorXd& x, Eigen::VectorXd& R, SparseMatrix* J)>;
/// Called after each update; may modify the iterate (e.g. limiting).
using NewtonHook = std::function<void(Eigen::VectorXd& x)>;

struct NewtonResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double residual = 0.0;
  double initial_residual = 0.0;
};

NewtonResult newton_solve(const ResidualProvider& provider, Eigen::VectorXd x0, const NewtonConfig& cfg = {},
                          const NewtonHook& hook = {});

}  // namespace dgflow
