#pragma once

#include <functional>
#include <optional>
#include <random>

#include "trsearch/config.hpp"
#include "trsearch/environment.hpp"
#include "trsearch/surrogate.hpp"

namespace trsearch {

// Progressive corner scheduling: search against a small focus set, and only
// when the focus set is satisfied check the full pool. Each failed check
// pulls the worst offender into the focus set, so effort concentrates on
// the corners that actually bind. The focus set only ever grows.
struct VerificationRound {
  Sizing solution;
  std::vector<std::size_t> failed;        // pool indices that rejected the solution
  std::optional<std::size_t> grown;       // corner added to the focus set
  bool all_passed = false;
};

struct SchedulerState {
  Strategy strategy = Strategy::ProgressiveRandom;
  std::vector<std::size_t> focus;  // pool indices, in the order they joined
  std::vector<VerificationRound> rounds;

  bool in_focus(std::size_t corner) const;
};

// Picks the initial focus set: the named corner (hardest-first), a seeded
// uniform pick (random), or the whole pool (brute force).
SchedulerState init_focus(const ProblemSpec& p, Strategy strategy, const std::string& hardest_hint,
                          std::mt19937_64& rng);

struct VerifyOutcome {
  bool done = false;
  std::optional<std::size_t> grown;
  // Every non-focus corner that was checked, with its result and true value
  // (-inf for failed evaluations), in pool order.
  std::vector<std::tuple<std::size_t, EvalResult, double>> checked;
};

using EvalFn = std::function<EvalResult(const Sizing&, std::size_t)>;

// Called when the focus set is satisfied at `solution`: checks the rest of
// the pool. Either every corner passes (done) or the focus set grows by the
// corner with the lowest value (ties to the earliest pool index).
VerifyOutcome on_focus_satisfied(SchedulerState& st, const ProblemSpec& p, const Sizing& solution,
                                 const EvalFn& eval);
VerifyOutcome on_focus_satisfied(SchedulerState& st, const Sizing& solution, Environment& env);

// Predicted worth of a candidate under the current focus set: the minimum
// over focus corners of the constraint value of that corner's model output.
// A candidate only scores well if no focus corner is predicted to fail.
double candidate_value(const SchedulerState& st, const ProblemSpec& p,
                       const std::vector<std::optional<MlpSurrogate>>& models,
                       std::span<const double> unit);

// Batch flavor used by the planner: rows of `unit_rows` are candidates,
// result is one aggregated value per row.
Eigen::VectorXd candidate_values(const SchedulerState& st, const ProblemSpec& p,
                                 const std::vector<std::optional<MlpSurrogate>>& models,
                                 const Eigen::MatrixXd& unit_rows);

}  // namespace trsearch
