#pragma once

// Internals shared by the model-guided explorer and the random baseline:
// budget accounting, trajectory logging, and pool verification. Not part of
// the public API.

#include <limits>
#include <random>

#include "trsearch/baselines.hpp"
#include "trsearch/explorer.hpp"

namespace trsearch::detail {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Thrown when a fresh evaluation would exceed the budget; unwinds straight
// to the agent's top level, which turns it into a budget_exhausted report.
struct BudgetExhausted {};

struct LoggedEval {
  EvalResult result;
  std::ptrdiff_t row = -1;  // trajectory row index, -1 for cache hits
};

struct SearchDriver {
  const Config& cfg;
  const ProblemSpec& p;
  Environment& env;
  std::uint64_t seed;
  SchedulerState sched;

  std::vector<TrajectoryEntry> trajectory;
  std::vector<std::uint64_t> base_counts;
  std::uint64_t base_total = 0;

  long long iterations = 0;
  int restarts = 0;
  double best_value = kNegInf;
  Sizing best_sizing;

  SearchDriver(const Config& cfg_in, Environment& env_in, std::uint64_t seed_in)
      : cfg(cfg_in), p(cfg_in.problem), env(env_in), seed(seed_in) {
    // Counters may not start at zero if the caller reuses an environment;
    // everything below is relative to this baseline.
    base_counts.resize(p.corners.size());
    for (std::size_t c = 0; c < p.corners.size(); ++c) base_counts[c] = env.eval_count(c);
    base_total = env.total_eval_count();
    std::mt19937_64 rng_sched(derive_seed(seed, 0));
    sched = init_focus(p, cfg.search.strategy, cfg.search.hardest_corner, rng_sched);
  }

  std::uint64_t used() const { return env.total_eval_count() - base_total; }
  long long remaining() const { return p.budget - static_cast<long long>(used()); }

  // Evaluates and, if the call was fresh (budget-charged), logs one
  // trajectory row built from `proto` (caller fills the search context).
  LoggedEval eval_logged(const Sizing& s, std::size_t corner, TrajectoryEntry proto) {
    if (!env.is_cached(s, corner) && remaining() <= 0) throw BudgetExhausted{};
    EvalResult r = env.evaluate(s, corner);
    if (r.cached) return {std::move(r), -1};
    proto.restart = restarts;
    proto.corner = corner;
    proto.sizing = s;
    proto.ok = r.ok;
    proto.meas = r.meas;
    proto.error = r.error;
    proto.value = r.ok ? value_of(r.meas, p.constraints[corner]) : kNegInf;
    proto.cumulative_evals = used();
    trajectory.push_back(std::move(proto));
    return {std::move(r), static_cast<std::ptrdiff_t>(trajectory.size() - 1)};
  }

  // Evaluates `s` on every focus corner; returns the aggregated (minimum)
  // true value, -inf if any focus evaluation failed.
  double eval_on_focus(const Sizing& s, const TrajectoryEntry& proto,
                       std::vector<std::ptrdiff_t>* rows = nullptr) {
    double agg = std::numeric_limits<double>::infinity();
    for (std::size_t c : sched.focus) {
      LoggedEval le = eval_logged(s, c, proto);
      if (rows) rows->push_back(le.row);
      double v = le.result.ok ? value_of(le.result.meas, p.constraints[c]) : kNegInf;
      if (v < agg) agg = v;
    }
    return agg;
  }

  // Aggregated true value at a previously evaluated point (cache only).
  double cached_focus_value(const Sizing& s) {
    double agg = std::numeric_limits<double>::infinity();
    for (std::size_t c : sched.focus) {
      EvalResult r = env.evaluate(s, c);
      double v = r.ok ? value_of(r.meas, p.constraints[c]) : kNegInf;
      if (v < agg) agg = v;
    }
    return agg;
  }

  void track_best(double agg, const Sizing& s) {
    if (agg > best_value) {
      best_value = agg;
      best_sizing = s;
    }
  }

  // Pool check for a focus-satisfying point. True when every corner passed;
  // otherwise the scheduler has grown the focus set by the worst offender.
  bool verify(const Sizing& solution, long long iteration) {
    TrajectoryEntry proto;
    proto.iteration = iteration;
    proto.phase = Phase::Verify;
    VerifyOutcome out = on_focus_satisfied(
        sched, p, solution,
        [&](const Sizing& s, std::size_t c) { return eval_logged(s, c, proto).result; });
    return out.done;
  }

  Sizing random_sizing(std::mt19937_64& rng) const {
    Sizing s;
    s.idx.resize(p.var_count());
    for (std::size_t i = 0; i < p.var_count(); ++i) {
      int hi = static_cast<int>(p.variables[i].grid.size()) - 1;
      s.idx[i] = std::uniform_int_distribution<int>(0, hi)(rng);
    }
    return s;
  }

  // In degenerate spaces every remaining draw can hit the cache, consuming
  // no budget; this cap guarantees termination anyway.
  long long iteration_cap() const { return std::max<long long>(p.budget * 4, 10000); }

  SearchReport finish(bool satisfied, const Sizing* solution, const std::string& agent,
                      const std::vector<std::optional<MlpSurrogate>>* models = nullptr) {
    SearchReport rep;
    rep.agent = agent;
    rep.strategy = sched.strategy;
    rep.seed = seed;
    rep.satisfied = satisfied;
    if (satisfied && solution) {
      rep.solution = *solution;
      for (std::size_t c = 0; c < p.corners.size(); ++c)
        rep.solution_meas.push_back(env.evaluate(*solution, c).meas);  // all cached by now
    }
    rep.best_value = best_value;
    rep.best_sizing = best_sizing;
    rep.iterations = iterations;
    rep.restarts = restarts;
    rep.evals_per_corner.resize(p.corners.size());
    for (std::size_t c = 0; c < p.corners.size(); ++c)
      rep.evals_per_corner[c] = env.eval_count(c) - base_counts[c];
    rep.total_evals = used();
    rep.final_focus = sched.focus;
    rep.verification_rounds = sched.rounds;
    if (models) {
      for (std::size_t c = 0; c < models->size(); ++c)
        if ((*models)[c]) rep.models.emplace_back(p.corners[c].name, (*models)[c]->to_snapshot());
    }
    rep.trajectory = std::move(trajectory);
    return rep;
  }
};

}  // namespace trsearch::detail
