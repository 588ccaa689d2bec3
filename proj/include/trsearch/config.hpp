#pragma once

#include <optional>
#include <string>
#include <vector>

#include "trsearch/problem.hpp"
#include "trsearch/trust_region.hpp"

namespace trsearch {

enum class Agent { TrustRegion, Random };
enum class Strategy { ProgressiveRandom, ProgressiveHardest, BruteForce };

std::string to_string(Agent a);
std::string to_string(Strategy s);
Agent agent_from_string(const std::string& s);        // throws ConfigError
Strategy strategy_from_string(const std::string& s);  // throws ConfigError

struct SearchSettings {
  Agent agent = Agent::TrustRegion;
  Strategy strategy = Strategy::ProgressiveRandom;
  std::string hardest_corner;  // required by the hardest-first strategy
  std::uint64_t seed = 0;
  int bootstrap_samples = 50;  // global random draws before local search
  int mc_samples = 1000;       // candidates scored per planning step
  int train_window = 1024;     // most recent rows kept for per-step training
  TrConstants tr;
  std::optional<double> dr_min_override;  // dr_min default depends on the grids

  bool operator==(const SearchSettings&) const = default;
};

enum class EnvKind { SyntheticOpamp, ToyLandscape, External };

std::string to_string(EnvKind k);

// Settings for driving an out-of-process simulator.
struct ExternalSettings {
  std::string command;        // run through /bin/sh; {netlist} etc. substituted
  std::string template_path;  // netlist template with {placeholders}
  std::string output_source = "stdout";  // "stdout" or "file:<relative path>"
  std::vector<std::pair<std::string, std::string>> patterns;  // measurement -> regex
  double timeout_s = 300.0;
  int max_parallel = 1;

  bool operator==(const ExternalSettings&) const = default;
};

struct EnvSettings {
  EnvKind kind = EnvKind::SyntheticOpamp;
  std::vector<double> toy_center;  // toy landscape optimum, defaults to 0.5^n
  ExternalSettings external;

  bool operator==(const EnvSettings&) const = default;
};

struct Config {
  ProblemSpec problem;
  SearchSettings search;
  EnvSettings env;

  bool operator==(const Config&) const = default;
};

// Parses the TOML-style config dialect documented in the README. Errors
// carry line numbers. The returned Config is already validated.
Config parse_config(const std::string& text);
Config load_config(const std::string& path);  // reads the file, then parse_config

// Canonical text form: explicit grids, explicit scales, stable ordering.
// parse_config(write_config(c)) == c for every valid c, and the text is the
// input to the config fingerprint, so two semantically equal configs hash
// alike regardless of how they were written by hand.
std::string write_config(const Config& c);

std::string config_hash(const Config& c);  // fnv-1a of write_config, hex

// Like config_hash, but blind to the knobs the CLI can override per run
// (agent, strategy, seed). Two benchmarks are comparable exactly when their
// problem hashes match: same problem, same budget, different searcher.
std::string problem_hash(const Config& c);

}  // namespace trsearch
