#pragma once

#include <functional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "trsearch/problem.hpp"

namespace trsearch {

// Radius-update schedule. Defaults follow the usual trust-region folklore:
// accept above 0.1, shrink below 0.25, expand above 0.75, halve / double.
struct TrConstants {
  double eta_accept = 0.1;
  double eta_shrink = 0.25;
  double eta_expand = 0.75;
  double gamma_shrink = 0.5;
  double gamma_expand = 2.0;
  double dr_init = 0.25;
  double dr_min = 0.0;  // resolved against the problem, see default_dr_min
  double dr_max = 1.0;

  void validate() const;  // throws std::logic_error on nonsense orderings

  bool operator==(const TrConstants&) const = default;
};

// Below half of the finest grid cell the region degenerates (every sample
// snaps back onto the center), so the floor is tied to the largest grid.
double default_dr_min(const ProblemSpec& p);

struct TrustRegionState {
  std::vector<double> center;  // unit cube, always grid-snapped
  double radius = 0.25;
  double incumbent_value = 0.0;  // true (not predicted) value at center
  TrConstants constants;
};

TrustRegionState make_tr_state(std::vector<double> center, double incumbent_value,
                               const TrConstants& constants);

// m candidate points: per-axis uniform draws from the region box clipped to
// [0,1], then snapped to the grid. Rows of the result are unit points.
// Draw order (point-major, then axis) is part of the contract so tests can
// replay it with a cloned generator.
Eigen::MatrixXd sample_region(const TrustRegionState& st, const ProblemSpec& p, int m,
                              std::mt19937_64& rng);

struct Subproblem {
  Sizing candidate;
  std::vector<double> unit;  // snapped coordinates of the candidate
  double predicted_value = 0.0;
};

// Monte-Carlo argmax of a predicted value over the region: sample, score
// every row with `batch_value` (takes the m x n sample matrix, returns m
// values), keep the best. Ties go to the lowest row index.
Subproblem solve_subproblem(const TrustRegionState& st, const ProblemSpec& p,
                            const std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>& batch_value,
                            int m, std::mt19937_64& rng);

// rho = (true improvement) / (predicted improvement). A predicted
// improvement at or below the noise floor yields 0 (the model promised
// nothing, so nothing was delivered).
double reduction_ratio(const TrustRegionState& st, double predicted_trial, double true_trial);

struct TrUpdate {
  bool accepted = false;
  TrustRegionState state;
};

// Accept/reject plus radius update, returned as a new state:
//   rho > eta_accept  -> move center to the trial point
//   rho > eta_expand  -> radius *= gamma_expand (capped at dr_max)
//   rho < eta_shrink  -> radius *= gamma_shrink (floored at dr_min)
TrUpdate update(const TrustRegionState& st, double rho, std::span<const double> trial_unit,
                double true_trial);

}  // namespace trsearch
