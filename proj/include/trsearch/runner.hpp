#pragma once

#include "trsearch/baselines.hpp"

namespace trsearch {

struct RunnerOptions {
  int repeats = 1;
  std::uint64_t seed_base = 0;
  std::string out_dir = "runs/out";
  bool deterministic = false;  // drop wall-clock fields so output is byte-stable
  WarmStart warm;
};

struct RunStats {
  std::uint64_t seed = 0;
  bool satisfied = false;
  long long iterations = 0;
  std::uint64_t evaluations = 0;
  int restarts = 0;
  std::string error;  // set when the run aborted on an environment fatal
};

struct StatLine {
  double mean = 0.0, stddev = 0.0, min = 0.0, max = 0.0;
};

struct Aggregates {
  double success_rate = 0.0;
  StatLine iterations;
  StatLine evaluations;
};

struct ExperimentSummary {
  std::string config_hash;
  std::string problem_hash;  // config_hash with the searcher knobs masked out
  std::string agent;
  std::string strategy;
  std::uint64_t seed_base = 0;
  int repeats = 0;
  bool deterministic = false;
  std::vector<RunStats> runs;
  Aggregates aggregates;
  double wall_s = 0.0;  // not serialized in deterministic mode
};

// Runs `repeats` independent searches (seeds seed_base, seed_base+1, ...),
// each against a fresh environment, writing per-run trajectory.csv and
// report.json plus an aggregate summary.json under opts.out_dir. A run that
// aborts on an environment fatal is recorded as a failure with its error;
// the remaining runs still execute.
ExperimentSummary run_experiment(const Config& cfg, const RunnerOptions& opts);

// Aggregates are over all runs; failed runs contribute the evaluations and
// iterations they consumed before stopping.
Aggregates aggregate(const std::vector<RunStats>& runs);

void write_trajectory_csv(const std::string& path, const ProblemSpec& p, const SearchReport& rep);

nlohmann::ordered_json report_to_json(const Config& cfg, const SearchReport& rep,
                                      bool deterministic, double wall_s);
nlohmann::ordered_json summary_to_json(const ExperimentSummary& s);

// What `port` and `--resume` need back from a previous run.
struct LoadedReport {
  Config cfg;  // rebuilt from the embedded canonical config text
  bool satisfied = false;
  Sizing solution;
  std::vector<std::pair<std::string, nlohmann::ordered_json>> models;
};
LoadedReport load_report(const std::string& path);

// Validates schema version and re-derives the aggregates from the per-run
// stats, rejecting a summary whose stored aggregates don't match.
ExperimentSummary load_summary(const std::string& path);

// Side-by-side table of two summaries over the same config (hash-checked;
// throws ConfigError on mismatch).
std::string compare_text(const ExperimentSummary& a, const ExperimentSummary& b);

}  // namespace trsearch
