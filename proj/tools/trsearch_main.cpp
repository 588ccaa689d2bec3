// Command-line front end: solve one instance, benchmark repeated runs,
// compare two benchmark summaries, validate/inspect a config, or port a
// previous result onto a new problem as a warm start.
//
// Exit codes: 0 success, 1 goal not reached (unsatisfied runs), 2 bad
// config or usage, 3 environment fatal.

#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "trsearch/environment.hpp"
#include "trsearch/runner.hpp"

using namespace trsearch;

namespace {

struct CommonArgs {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int repeats = 1;
  std::string agent, strategy;
  long long budget = 0;
  std::string out_dir;
  bool deterministic = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_repeats) {
  cmd->add_option("-c,--config", args.config_path, "problem/search config file")->required();
  cmd->add_option("--seed", args.seed, "base RNG seed (default: config seed)")
      ->each([&args](const std::string&) { args.seed_set = true; });
  if (with_repeats) cmd->add_option("--repeats", args.repeats, "number of independent runs");
  cmd->add_option("--agent", args.agent, "override agent: trust_region | random");
  cmd->add_option("--strategy", args.strategy,
                  "override strategy: progressive_random | progressive_hardest | brute_force");
  cmd->add_option("--budget", args.budget, "override evaluation budget");
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_flag("--deterministic", args.deterministic,
                "omit wall-clock fields so repeated runs produce identical bytes");
}

Config load_with_overrides(const CommonArgs& args) {
  Config cfg = load_config(args.config_path);
  if (!args.agent.empty()) cfg.search.agent = agent_from_string(args.agent);
  if (!args.strategy.empty()) cfg.search.strategy = strategy_from_string(args.strategy);
  if (args.budget > 0) cfg.problem.budget = args.budget;
  if (args.seed_set) cfg.search.seed = args.seed;
  if (cfg.search.strategy == Strategy::ProgressiveHardest && cfg.search.hardest_corner.empty())
    throw ConfigError("strategy progressive_hardest needs hardest_corner in [search]");
  return cfg;
}

std::string default_out_dir(const CommonArgs& args, const Config& cfg) {
  if (!args.out_dir.empty()) return args.out_dir;
  std::string stem = args.config_path;
  if (auto slash = stem.find_last_of('/'); slash != std::string::npos) stem = stem.substr(slash + 1);
  if (auto dot = stem.find_last_of('.'); dot != std::string::npos) stem = stem.substr(0, dot);
  return "runs/" + stem + "-" + to_string(cfg.search.agent) + "-" + to_string(cfg.search.strategy);
}

void print_summary(const ExperimentSummary& s) {
  std::printf("agent=%s strategy=%s runs=%d success_rate=%.3f\n", s.agent.c_str(),
              s.strategy.c_str(), s.repeats, s.aggregates.success_rate);
  std::printf("evaluations: mean=%.2f std=%.2f min=%.0f max=%.0f\n", s.aggregates.evaluations.mean,
              s.aggregates.evaluations.stddev, s.aggregates.evaluations.min,
              s.aggregates.evaluations.max);
  std::printf("iterations:  mean=%.2f std=%.2f min=%.0f max=%.0f\n", s.aggregates.iterations.mean,
              s.aggregates.iterations.stddev, s.aggregates.iterations.min,
              s.aggregates.iterations.max);
}

int run_solve_like(const CommonArgs& args, const WarmStart& warm) {
  Config cfg = load_with_overrides(args);
  RunnerOptions opts;
  opts.repeats = args.repeats;
  opts.seed_base = args.seed_set ? args.seed : cfg.search.seed;
  opts.out_dir = default_out_dir(args, cfg);
  opts.deterministic = args.deterministic;
  opts.warm = warm;
  ExperimentSummary summary = run_experiment(cfg, opts);
  print_summary(summary);
  std::printf("results under %s\n", opts.out_dir.c_str());
  for (const auto& r : summary.runs)
    if (!r.error.empty()) {
      std::fprintf(stderr, "run %llu aborted: %s\n", static_cast<unsigned long long>(r.seed),
                   r.error.c_str());
      return 3;
    }
  return summary.aggregates.success_rate == 1.0 ? 0 : 1;
}

int cmd_validate(const std::string& config_path) {
  Config cfg = load_config(config_path);
  const ProblemSpec& p = cfg.problem;
  BigUint size = space_size(p);
  std::printf("config ok: %zu variables, %zu corners, %zu measurements\n", p.variables.size(),
              p.corners.size(), p.measurements.size());
  for (const auto& v : p.variables)
    std::printf("  %-12s %4zu points in [%s, %s]\n", v.name.c_str(), v.grid.size(),
                format_double(v.grid.front()).c_str(), format_double(v.grid.back()).c_str());
  std::printf("design space: %s points (~%.3g)\n", size.to_string().c_str(), size.to_double());
  for (std::size_t c = 0; c < p.corners.size(); ++c)
    std::printf("  corner %-10s %zu constraints\n", p.corners[c].name.c_str(),
                p.constraints[c].size());
  std::printf("environment: %s\n", to_string(cfg.env.kind).c_str());
  std::printf("agent: %s, strategy: %s, budget: %lld\n", to_string(cfg.search.agent).c_str(),
              to_string(cfg.search.strategy).c_str(), p.budget);
  std::printf("config hash: %s\n", config_hash(cfg).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"design-space search with a trust-region model-guided agent"};
  app.require_subcommand(1);

  CommonArgs solve_args, bench_args, port_args;
  std::string validate_config, compare_a, compare_b;
  std::string port_from, port_mode = "point_only";

  CLI::App* solve = app.add_subcommand("solve", "run one search");
  add_common(solve, solve_args, false);

  CLI::App* bench = app.add_subcommand("bench", "run repeated searches and aggregate");
  add_common(bench, bench_args, true);

  CLI::App* compare = app.add_subcommand("compare", "compare two benchmark summaries");
  compare->add_option("-a", compare_a, "first summary.json")->required();
  compare->add_option("-b", compare_b, "second summary.json")->required();

  CLI::App* validate = app.add_subcommand("validate", "check a config and print its shape");
  validate->add_option("-c,--config", validate_config, "config file")->required();

  CLI::App* port = app.add_subcommand("port", "warm-start a search from a previous report");
  add_common(port, port_args, true);
  port->add_option("--from", port_from, "report.json of the source run")->required();
  port->add_option("--mode", port_mode, "point_only | weights_and_point");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (solve->parsed()) return run_solve_like(solve_args, WarmStart{});
    if (bench->parsed()) return run_solve_like(bench_args, WarmStart{});
    if (validate->parsed()) return cmd_validate(validate_config);
    if (compare->parsed()) {
      ExperimentSummary a = load_summary(compare_a);
      ExperimentSummary b = load_summary(compare_b);
      std::printf("%s", compare_text(a, b).c_str());
      return 0;
    }
    if (port->parsed()) {
      LoadedReport source = load_report(port_from);
      if (source.solution.idx.empty())
        throw ConfigError("source report '" + port_from + "' has no solution or best sizing");
      WarmStart warm = make_warm_start(warm_mode_from_string(port_mode), source.cfg.problem,
                                       source.solution, source.models);
      return run_solve_like(port_args, warm);
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  } catch (const SearchAbort& e) {
    std::fprintf(stderr, "search aborted: %s\n", e.what());
    return 3;
  } catch (const EnvError& e) {
    std::fprintf(stderr, "environment error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
