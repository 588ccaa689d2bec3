#pragma once

#include <optional>

#include "json.hpp"
#include "trsearch/pvt.hpp"
#include "trsearch/trust_region.hpp"

namespace trsearch {

enum class Phase { Bootstrap, Trial, Verify };
std::string to_string(Phase p);

// One fresh environment evaluation, with the search context it happened in.
// The trajectory is both the surrogate training set and the audit log: its
// row count equals the number of budget-charged evaluations by construction.
struct TrajectoryEntry {
  long long iteration = 0;  // planning iteration; 0 while bootstrapping
  int restart = 0;          // which local-search epoch this row belongs to
  Phase phase = Phase::Trial;
  std::size_t corner = 0;
  Sizing sizing;
  bool ok = false;
  Measurements meas;  // empty when the evaluation failed
  std::string error;
  double value = 0.0;            // true constraint value; -inf for failures
  std::optional<double> radius;  // trust-region context, trial rows only
  std::optional<double> rho;
  std::optional<bool> accepted;
  std::vector<double> center;  // region center the trial was sampled around
  std::uint64_t cumulative_evals = 0;
};

enum class WarmMode { None, PointOnly, WeightsAndPoint };
std::string to_string(WarmMode m);
WarmMode warm_mode_from_string(const std::string& s);

// Carry-over from a previous run, possibly on different grids: the solution
// point in unit coordinates (re-snapped onto the target grids) and model
// snapshots keyed by corner name. Corners that don't exist in the target
// problem are simply ignored; shape mismatches are hard errors.
struct WarmStart {
  WarmMode mode = WarmMode::None;
  std::vector<double> unit;
  std::vector<std::pair<std::string, nlohmann::ordered_json>> corner_models;
};

WarmStart make_warm_start(WarmMode mode, const ProblemSpec& source, const Sizing& solution,
                          const std::vector<std::pair<std::string, nlohmann::ordered_json>>& models);

struct SearchReport {
  std::string agent;
  Strategy strategy = Strategy::ProgressiveRandom;
  std::uint64_t seed = 0;
  bool satisfied = false;
  std::string abort_error;  // why the run died, when it died on a fatal

  Sizing solution;                          // valid when satisfied
  std::vector<Measurements> solution_meas;  // per pool corner, when satisfied

  double best_value = 0.0;  // best aggregated focus value ever observed
  Sizing best_sizing;

  long long iterations = 0;
  int restarts = 0;
  std::vector<std::uint64_t> evals_per_corner;
  std::uint64_t total_evals = 0;

  std::vector<std::size_t> final_focus;
  std::vector<VerificationRound> verification_rounds;
  std::vector<std::pair<std::string, nlohmann::ordered_json>> models;  // corner name -> snapshot
  std::vector<TrajectoryEntry> trajectory;
};

// Fatal environment trouble (e.g. every bootstrap evaluation failed). The
// partially filled report is attached so callers can still persist what
// happened before the run died.
class SearchAbort : public std::runtime_error {
 public:
  SearchAbort(const std::string& msg, SearchReport partial)
      : std::runtime_error(msg), partial_(std::move(partial)) {}
  const SearchReport& partial() const { return partial_; }

 private:
  SearchReport partial_;
};

// The model-guided search: bootstrap globally, then alternate surrogate
// training and trust-region planning, escaping to a fresh region when
// progress stalls. Progressive corner handling as in pvt.hpp.
SearchReport run_trust_region(const Config& cfg, Environment& env, std::uint64_t seed,
                              const WarmStart& warm = {});

}  // namespace trsearch
