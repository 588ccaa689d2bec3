#include "trsearch/pvt.hpp"

#include <algorithm>
#include <limits>

namespace trsearch {

bool SchedulerState::in_focus(std::size_t corner) const {
  return std::find(focus.begin(), focus.end(), corner) != focus.end();
}

SchedulerState init_focus(const ProblemSpec& p, Strategy strategy, const std::string& hardest_hint,
                          std::mt19937_64& rng) {
  if (p.corners.empty()) throw ConfigError("cannot schedule over an empty corner pool");
  SchedulerState st;
  st.strategy = strategy;
  switch (strategy) {
    case Strategy::ProgressiveHardest: {
      if (hardest_hint.empty())
        throw ConfigError("strategy progressive_hardest needs hardest_corner");
      st.focus.push_back(p.corner_index(hardest_hint));
      break;
    }
    case Strategy::ProgressiveRandom: {
      std::uniform_int_distribution<std::size_t> pick(0, p.corners.size() - 1);
      st.focus.push_back(pick(rng));
      break;
    }
    case Strategy::BruteForce: {
      for (std::size_t i = 0; i < p.corners.size(); ++i) st.focus.push_back(i);
      break;
    }
  }
  return st;
}

VerifyOutcome on_focus_satisfied(SchedulerState& st, const ProblemSpec& p, const Sizing& solution,
                                 const EvalFn& eval) {
  VerifyOutcome out;
  VerificationRound round;
  round.solution = solution;

  constexpr double kFail = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < p.corners.size(); ++c) {
    if (st.in_focus(c)) continue;
    EvalResult r = eval(solution, c);
    double v = r.ok ? value_of(r.meas, p.constraints[c]) : kFail;
    if (v < 0.0) round.failed.push_back(c);
    out.checked.emplace_back(c, std::move(r), v);
  }

  if (round.failed.empty()) {
    round.all_passed = true;
    out.done = true;
  } else {
    // Grow by the worst corner; strict comparison over pool order breaks
    // ties toward the earliest index.
    std::size_t worst = round.failed.front();
    double worst_value = std::numeric_limits<double>::infinity();
    for (const auto& [c, r, v] : out.checked) {
      if (v >= 0.0) continue;
      if (v < worst_value) {
        worst = c;
        worst_value = v;
      }
    }
    st.focus.push_back(worst);
    round.grown = worst;
    out.grown = worst;
  }
  st.rounds.push_back(std::move(round));
  return out;
}

VerifyOutcome on_focus_satisfied(SchedulerState& st, const Sizing& solution, Environment& env) {
  const ProblemSpec& p = env.problem();
  // Fan the checks out as a batch so external simulators can run them in
  // parallel, then feed the cached results through the sequential path.
  std::vector<EvalRequest> requests;
  for (std::size_t c = 0; c < p.corners.size(); ++c)
    if (!st.in_focus(c)) requests.push_back(EvalRequest{solution, c});
  env.evaluate_batch(requests);
  return on_focus_satisfied(st, p, solution,
                            [&env](const Sizing& s, std::size_t c) { return env.evaluate(s, c); });
}

double candidate_value(const SchedulerState& st, const ProblemSpec& p,
                       const std::vector<std::optional<MlpSurrogate>>& models,
                       std::span<const double> unit) {
  Eigen::MatrixXd row(1, static_cast<Eigen::Index>(unit.size()));
  for (std::size_t i = 0; i < unit.size(); ++i) row(0, static_cast<Eigen::Index>(i)) = unit[i];
  return candidate_values(st, p, models, row)(0);
}

Eigen::VectorXd candidate_values(const SchedulerState& st, const ProblemSpec& p,
                                 const std::vector<std::optional<MlpSurrogate>>& models,
                                 const Eigen::MatrixXd& unit_rows) {
  if (st.focus.empty()) throw std::logic_error("scheduler has an empty focus set");
  const Eigen::Index m = unit_rows.rows();
  Eigen::VectorXd agg = Eigen::VectorXd::Constant(m, std::numeric_limits<double>::infinity());
  Measurements meas(p.measurements.size());
  for (std::size_t c : st.focus) {
    if (c >= models.size() || !models[c])
      throw std::logic_error("no surrogate for focus corner '" + p.corners[c].name + "'");
    Eigen::MatrixXd pred = models[c]->predict_batch(unit_rows);  // m x k, raw units
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index k = 0; k < pred.cols(); ++k)
        meas[static_cast<std::size_t>(k)] = pred(i, k);
      double v = value_of(meas, p.constraints[c]);
      if (v < agg(i)) agg(i) = v;
    }
  }
  return agg;
}

}  // namespace trsearch
