#pragma once

#include <future>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "trsearch/config.hpp"
#include "trsearch/problem.hpp"
#include "trsearch/value.hpp"

namespace trsearch {

// Unrecoverable environment problems (missing template, broken setup).
// Per-evaluation failures are not exceptions; they come back as EvalResult.
class EnvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EvalResult {
  bool ok = false;
  Measurements meas;   // one value per declared measurement when ok
  std::string error;   // diagnostic when !ok
  bool cached = false; // served from the result cache, cost no fresh call
};

struct EvalRequest {
  Sizing sizing;
  std::size_t corner = 0;
};

// Base class for everything that can be asked "what does this sizing measure
// at this corner". Results are cached per (sizing, corner) and the per-corner
// evaluation counters count fresh computations only, so the counters are the
// budget ledger: identical queries are free after the first. Failures are
// cached too -- a deterministic simulator that failed once will fail again.
class Environment {
 public:
  explicit Environment(ProblemSpec problem);
  virtual ~Environment() = default;

  const ProblemSpec& problem() const { return problem_; }

  EvalResult evaluate(const Sizing& s, std::size_t corner);
  std::vector<EvalResult> evaluate_batch(std::span<const EvalRequest> requests);

  // True when evaluate() would be served from the cache (no budget cost).
  bool is_cached(const Sizing& s, std::size_t corner) const;

  std::uint64_t eval_count(std::size_t corner) const;
  std::uint64_t total_eval_count() const;

 protected:
  virtual EvalResult compute(const Sizing& s, std::size_t corner) = 0;
  // Fan-out width for evaluate_batch; >1 only makes sense when compute()
  // leaves the process (the external simulator overrides this).
  virtual int max_parallel() const { return 1; }

 private:
  struct Key {
    std::size_t corner;
    std::vector<int> idx;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const;
  };

  EvalResult checked_compute(const Sizing& s, std::size_t corner);

  ProblemSpec problem_;
  mutable std::mutex mu_;
  std::unordered_map<Key, std::shared_future<EvalResult>, KeyHash> cache_;
  std::vector<std::uint64_t> counters_;
};

// Closed-form two-stage amplifier model. Variables must be exactly
// {w1, w2, l1, l2, cc, ib}; measurements are gain_db, ugbw_hz, pm_deg,
// power_w. Corner parameters kp, lambda, c_load, vdd shift the device
// physics the way process/voltage/temperature splits would.
class SyntheticOpamp : public Environment {
 public:
  explicit SyntheticOpamp(ProblemSpec problem);

  static constexpr double kDefaultKp = 5e-4;
  static constexpr double kDefaultLambda = 0.1;
  static constexpr double kDefaultCload = 1e-12;
  static constexpr double kDefaultVdd = 1.8;

 protected:
  EvalResult compute(const Sizing& s, std::size_t corner) override;

 private:
  std::size_t w1_, w2_, l1_, l2_, cc_, ib_;  // variable positions
};

// Smooth separable landscape for fast synthetic tests: value(u) is the
// negative squared distance to a center point in the unit cube, measured
// under the single measurement "value".
class ToyLandscape : public Environment {
 public:
  ToyLandscape(ProblemSpec problem, std::vector<double> center);

 protected:
  EvalResult compute(const Sizing& s, std::size_t corner) override;

 private:
  std::vector<double> center_;
};

// Builds the environment named by the config. `work_dir` is only used by
// the external simulator (scratch space for netlists and logs).
std::unique_ptr<Environment> make_environment(const Config& cfg, const std::string& work_dir = "");

}  // namespace trsearch
