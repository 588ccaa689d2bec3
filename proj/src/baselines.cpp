#include "trsearch/baselines.hpp"

#include "search_common.hpp"

namespace trsearch {

using detail::BudgetExhausted;
using detail::SearchDriver;

SearchReport run_random(const Config& cfg, Environment& env, std::uint64_t seed) {
  SearchDriver d(cfg, env, seed);
  std::mt19937_64 rng(derive_seed(seed, 3));
  try {
    while (true) {
      if (d.remaining() <= 0 || d.iterations >= d.iteration_cap()) throw BudgetExhausted{};
      ++d.iterations;
      Sizing s = d.random_sizing(rng);
      TrajectoryEntry proto;
      proto.phase = Phase::Trial;
      proto.iteration = d.iterations;
      double agg = d.eval_on_focus(s, proto);
      d.track_best(agg, s);
      if (agg == 0.0 && d.verify(s, d.iterations))
        return d.finish(true, &s, to_string(Agent::Random));
    }
  } catch (BudgetExhausted&) {
    return d.finish(false, nullptr, to_string(Agent::Random));
  }
}

SearchReport run_agent(const Config& cfg, Environment& env, std::uint64_t seed,
                       const WarmStart& warm) {
  if (cfg.search.agent == Agent::Random) return run_random(cfg, env, seed);
  return run_trust_region(cfg, env, seed, warm);
}

}  // namespace trsearch
