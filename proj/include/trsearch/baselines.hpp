#pragma once

#include "trsearch/explorer.hpp"

namespace trsearch {

// Uniform random search under the same budget ledger, corner scheduling and
// report schema as the model-guided agent, so the two are directly
// comparable run for run.
SearchReport run_random(const Config& cfg, Environment& env, std::uint64_t seed);

// Dispatches on cfg.search.agent.
SearchReport run_agent(const Config& cfg, Environment& env, std::uint64_t seed,
                       const WarmStart& warm = {});

}  // namespace trsearch
