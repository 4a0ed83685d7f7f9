#pragma once

#include "dgflow/forms.hpp"

#include <string>
#include <vector>

namespace dgflow {

enum class PStrategy { off, diff, frac };

const char* to_string(PStrategy s);
PStrategy parse_p_strategy(const std::string& name);

struct AdaptConfig {
  int max_level = 3;
  int max_order = 3;
  double initial_htol = 1e-16;
  double coarsen_factor = 0.01;
  PStrategy p_strategy = PStrategy::diff;
  /// markpDiff threshold relative to the current hTol.
  double ptol_diff_factor = 1e-2;
  /// markpFrac threshold on the ratio.
  double ptol_frac = 1.0;
  /// markpFrac: raise the order below the finest level first.
  bool frac_level_gate = true;
  int initial_passes = -1;  // < 0: max_level passes
};

/// Per-element indicator values eta_E^2 (volume residual, halved interior face
/// terms, full boundary terms). The coefficient argument is the solution itself.
/// u and u_old share the leaves but may differ in order.
std::vector<double> compute_estimator(const DgFunction& u, const DgFunction& u_old, double tau,
                                      const Discretization& disc);

/// Same residuals accumulated globally, each face once.
double estimator_total(const DgFunction& u, const DgFunction& u_old, double tau, const Discretization& disc);

/// tTol = (1/T) sum_E eta_E^0.
double compute_ttol(const std::vector<double>& eta0, double final_time);
/// hTol = tTol tau / N.
double compute_htol(double ttol, double tau, std::size_t n_elements);

std::vector<Mark> mark_h(const std::vector<double>& eta, const std::vector<Element>& elements, double htol,
                         int max_level, double coarsen_factor = 0.01);

/// varsigma = |eta^r - eta^{r-1}|: below ptol lower the order (floor 1), above 100 ptol raise it (cap).
std::vector<int> mark_p_diff(const std::vector<double>& eta_r, const std::vector<double>& eta_rm1,
                             const std::vector<Element>& elements, double ptol, int max_order);

/// Ratio test eta^r / eta^{r-1} (a zero denominator counts as an infinite ratio).
/// With the level gate every element below max_level is raised first.
std::vector<int> mark_p_frac(const std::vector<double>& eta_r, const std::vector<double>& eta_rm1,
                             const std::vector<Element>& elements, double ptol, int max_order, int max_level,
                             bool level_gate = true);

}  // namespace dgflow
