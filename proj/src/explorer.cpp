#include "trsearch/explorer.hpp"

#include <algorithm>
#include <cmath>

#include "search_common.hpp"

namespace trsearch {

using detail::BudgetExhausted;
using detail::kNegInf;
using detail::SearchDriver;

std::string to_string(Phase p) {
  switch (p) {
    case Phase::Bootstrap: return "bootstrap";
    case Phase::Trial: return "trial";
    case Phase::Verify: return "verify";
  }
  return "trial";
}

std::string to_string(WarmMode m) {
  switch (m) {
    case WarmMode::None: return "none";
    case WarmMode::PointOnly: return "point_only";
    case WarmMode::WeightsAndPoint: return "weights_and_point";
  }
  return "none";
}

WarmMode warm_mode_from_string(const std::string& s) {
  if (s == "none") return WarmMode::None;
  if (s == "point_only") return WarmMode::PointOnly;
  if (s == "weights_and_point") return WarmMode::WeightsAndPoint;
  throw ConfigError("unknown warm-start mode '" + s +
                    "' (expected none, point_only or weights_and_point)");
}

WarmStart make_warm_start(WarmMode mode, const ProblemSpec& source, const Sizing& solution,
                          const std::vector<std::pair<std::string, nlohmann::ordered_json>>& models) {
  WarmStart w;
  w.mode = mode;
  if (mode == WarmMode::None) return w;
  w.unit = normalize(solution, source);
  if (mode == WarmMode::WeightsAndPoint) w.corner_models = models;
  return w;
}

namespace {

// State for one local-search epoch plus the per-corner models; separated
// from SearchDriver because only the model-guided agent needs any of it.
struct Explorer {
  SearchDriver d;
  const WarmStart& warm;
  TrConstants constants;
  std::mt19937_64 rng_boot, rng_tr;
  std::vector<std::optional<MlpSurrogate>> models;

  TrustRegionState tr;
  Sizing center_sizing;
  int stall = 0;   // consecutive rejected trials
  int pinned = 0;  // consecutive iterations spent at the minimum radius

  Explorer(const Config& cfg, Environment& env, std::uint64_t seed, const WarmStart& warm_in)
      : d(cfg, env, seed),
        warm(warm_in),
        rng_boot(derive_seed(seed, 1)),
        rng_tr(derive_seed(seed, 2)),
        models(cfg.problem.corners.size()) {
    constants = cfg.search.tr;
    constants.dr_min = cfg.search.dr_min_override.value_or(default_dr_min(cfg.problem));
    constants.validate();
  }

  std::uint64_t model_seed(std::size_t corner) const {
    return derive_seed(d.seed, 0x10000 + corner * 4096 + static_cast<std::size_t>(d.restarts));
  }

  void ensure_model(std::size_t corner) {
    if (!models[corner])
      models[corner].emplace(static_cast<int>(d.p.var_count()),
                             static_cast<int>(d.p.measurements.size()), 64, model_seed(corner));
  }

  void install_warm_models() {
    for (const auto& [name, snapshot] : warm.corner_models) {
      std::size_t ci = d.p.corners.size();
      for (std::size_t c = 0; c < d.p.corners.size(); ++c)
        if (d.p.corners[c].name == name) ci = c;
      if (ci == d.p.corners.size()) continue;  // corner absent here: starts fresh
      MlpSurrogate m = MlpSurrogate::from_snapshot(snapshot);
      if (m.input_dim() != static_cast<int>(d.p.var_count()) ||
          m.output_dim() != static_cast<int>(d.p.measurements.size()))
        throw ConfigError("warm-start model for corner '" + name + "' maps " +
                          std::to_string(m.input_dim()) + " -> " + std::to_string(m.output_dim()) +
                          ", target problem needs " + std::to_string(d.p.var_count()) + " -> " +
                          std::to_string(d.p.measurements.size()));
      models[ci] = std::move(m);
    }
  }

  // Picks a center: the warm-start point on the first epoch, otherwise the
  // best of `bootstrap_samples` uniform draws evaluated on the focus set.
  void enter_locale(bool allow_warm) {
    double incumbent;
    TrajectoryEntry proto;
    proto.phase = Phase::Bootstrap;
    proto.iteration = d.iterations;

    if (allow_warm && warm.mode != WarmMode::None) {
      if (warm.unit.size() != d.p.var_count())
        throw ConfigError("warm-start point has " + std::to_string(warm.unit.size()) +
                          " coordinates, target problem has " + std::to_string(d.p.var_count()) +
                          " variables");
      if (warm.mode == WarmMode::WeightsAndPoint) install_warm_models();
      center_sizing = denormalize(warm.unit, d.p);
      incumbent = d.eval_on_focus(center_sizing, proto);
      d.track_best(incumbent, center_sizing);
      if (incumbent == kNegInf)
        throw SearchAbort("warm-start point failed to evaluate on the focus set",
                          d.finish(false, nullptr, to_string(Agent::TrustRegion), &models));
    } else {
      double best_agg = kNegInf;
      Sizing best;
      for (int i = 0; i < d.cfg.search.bootstrap_samples; ++i) {
        Sizing s = d.random_sizing(rng_boot);
        double agg = d.eval_on_focus(s, proto);
        d.track_best(agg, s);
        if (agg > best_agg) {
          best_agg = agg;
          best = s;
        }
      }
      if (best_agg == kNegInf)
        throw SearchAbort("every bootstrap evaluation failed; environment looks broken",
                          d.finish(false, nullptr, to_string(Agent::TrustRegion), &models));
      center_sizing = best;
      incumbent = best_agg;
    }

    tr = make_tr_state(normalize(center_sizing, d.p), incumbent, constants);
    stall = 0;
    pinned = 0;
    for (std::size_t c : d.sched.focus) ensure_model(c);
  }

  // Re-fits every focus model on the rows of the current epoch (training
  // restarts from scratch after an escape; the weights persist across
  // iterations inside an epoch, so later fits converge quickly). Only the
  // most recent `train_window` rows are kept to bound the per-step cost.
  void train_models() {
    for (std::size_t c : d.sched.focus) {
      ensure_model(c);
      std::vector<const TrajectoryEntry*> rows;
      for (const auto& e : d.trajectory)
        if (e.restart == d.restarts && e.corner == c && e.ok) rows.push_back(&e);
      if (rows.empty()) continue;
      std::size_t window = static_cast<std::size_t>(d.cfg.search.train_window);
      if (rows.size() > window) rows.erase(rows.begin(), rows.end() - window);

      Eigen::MatrixXd x(rows.size(), d.p.var_count());
      Eigen::MatrixXd t(rows.size(), d.p.measurements.size());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        std::vector<double> u = normalize(rows[i]->sizing, d.p);
        for (std::size_t j = 0; j < u.size(); ++j) x(i, static_cast<Eigen::Index>(j)) = u[j];
        for (std::size_t j = 0; j < rows[i]->meas.size(); ++j)
          t(i, static_cast<Eigen::Index>(j)) = rows[i]->meas[j];
      }
      models[c]->train(x, t);
    }
  }

  // Full-pool check at a focus-satisfying point. On growth, the incumbent
  // value is recomputed over the widened focus set and the counters reset:
  // the objective just changed under the agent's feet.
  bool verify_and_grow(const Sizing& solution) {
    if (d.verify(solution, d.iterations)) return true;
    std::size_t grown = d.sched.focus.back();
    ensure_model(grown);
    tr.incumbent_value = d.cached_focus_value(center_sizing);
    stall = 0;
    pinned = 0;
    return false;
  }

  SearchReport run() {
    try {
      enter_locale(true);
      while (true) {
        // A center that satisfies the whole focus set is a candidate
        // solution; checking the rest of the pool either ends the search
        // or pulls in a new corner (making the center unsatisfying again).
        if (d.cached_focus_value(center_sizing) == 0.0) {
          if (verify_and_grow(center_sizing))
            return d.finish(true, &center_sizing, to_string(Agent::TrustRegion), &models);
          continue;
        }
        if (d.remaining() <= 0 || d.iterations >= d.iteration_cap()) throw BudgetExhausted{};
        ++d.iterations;

        train_models();
        Subproblem sub = solve_subproblem(
            tr, d.p,
            [&](const Eigen::MatrixXd& rows) { return candidate_values(d.sched, d.p, models, rows); },
            d.cfg.search.mc_samples, rng_tr);

        // Trial rows carry the region context they were sampled in; the
        // ratio and verdict are patched in once known.
        TrajectoryEntry proto;
        proto.phase = Phase::Trial;
        proto.iteration = d.iterations;
        proto.radius = tr.radius;
        proto.center = tr.center;
        std::vector<std::ptrdiff_t> rows;
        double agg = d.eval_on_focus(sub.candidate, proto, &rows);
        d.track_best(agg, sub.candidate);

        double rho = reduction_ratio(tr, sub.predicted_value, agg);
        TrUpdate up = update(tr, rho, sub.unit, agg);
        bool accepted = up.accepted;
        if (agg == 0.0 && !accepted) {
          // Feasibility overrides the ratio test: a point that satisfies
          // every focus corner is always worth moving to.
          up.state.center = sub.unit;
          up.state.incumbent_value = agg;
          accepted = true;
        }
        tr = up.state;
        if (accepted) center_sizing = sub.candidate;
        for (std::ptrdiff_t row : rows) {
          if (row < 0) continue;
          d.trajectory[static_cast<std::size_t>(row)].rho = rho;
          d.trajectory[static_cast<std::size_t>(row)].accepted = accepted;
        }

        if (agg == 0.0) continue;  // loop head runs the verification

        if (accepted)
          stall = 0;
        else
          ++stall;
        pinned = tr.radius <= constants.dr_min ? pinned + 1 : 0;
        if (stall > d.p.escape_patience || pinned >= d.p.escape_patience) {
          // Stuck: abandon the region, re-bootstrap somewhere fresh with
          // fresh models. The budget ledger and the best-ever point persist.
          ++d.restarts;
          for (auto& m : models) m.reset();
          enter_locale(false);
        }
      }
    } catch (BudgetExhausted&) {
      return d.finish(false, nullptr, to_string(Agent::TrustRegion), &models);
    }
  }
};

}  // namespace

SearchReport run_trust_region(const Config& cfg, Environment& env, std::uint64_t seed,
                              const WarmStart& warm) {
  Explorer ex(cfg, env, seed, warm);
  return ex.run();
}

}  // namespace trsearch
