#include "trsearch/environment.hpp"

#include <cmath>
#include <numbers>
#include <semaphore>
#include <thread>

#include "trsearch/external_sim.hpp"

namespace trsearch {

std::size_t Environment::KeyHash::operator()(const Key& k) const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 0x100000001b3ull;
    }
  };
  mix(k.corner);
  for (int idx : k.idx) mix(static_cast<std::uint64_t>(static_cast<std::uint32_t>(idx)));
  return static_cast<std::size_t>(h);
}

Environment::Environment(ProblemSpec problem) : problem_(std::move(problem)) {
  problem_.validate();
  counters_.assign(problem_.corners.size(), 0);
}

EvalResult Environment::checked_compute(const Sizing& s, std::size_t corner) {
  EvalResult r = compute(s, corner);
  if (r.ok) {
    if (r.meas.size() != problem_.measurements.size()) {
      r.ok = false;
      r.error = "environment returned " + std::to_string(r.meas.size()) + " measurements, expected " +
                std::to_string(problem_.measurements.size());
      r.meas.clear();
    } else {
      for (std::size_t i = 0; i < r.meas.size(); ++i) {
        if (!std::isfinite(r.meas[i])) {
          r.ok = false;
          r.error = "measurement '" + problem_.measurements[i] + "' is not finite";
          r.meas.clear();
          break;
        }
      }
    }
  }
  return r;
}

EvalResult Environment::evaluate(const Sizing& s, std::size_t corner) {
  check_sizing(s, problem_);
  if (corner >= problem_.corners.size())
    throw EnvError("corner index " + std::to_string(corner) + " out of range");

  Key key{corner, s.idx};
  std::promise<EvalResult> promise;
  std::shared_future<EvalResult> fut;
  bool owner = false;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(key);
    if (it == cache_.end()) {
      fut = promise.get_future().share();
      cache_.emplace(std::move(key), fut);
      owner = true;
    } else {
      fut = it->second;
    }
  }
  if (!owner) {
    EvalResult r = fut.get();
    r.cached = true;
    return r;
  }
  EvalResult r = checked_compute(s, corner);
  {
    std::lock_guard<std::mutex> lock(mu_);
    ++counters_[corner];
  }
  r.cached = false;
  promise.set_value(r);
  return r;
}

std::vector<EvalResult> Environment::evaluate_batch(std::span<const EvalRequest> requests) {
  // Deduplicate so repeated (sizing, corner) pairs cost one computation and
  // the duplicates are reported as cache hits.
  std::vector<std::size_t> owner_of(requests.size());
  std::vector<std::size_t> unique;
  {
    std::unordered_map<Key, std::size_t, KeyHash> seen;
    for (std::size_t i = 0; i < requests.size(); ++i) {
      Key key{requests[i].corner, requests[i].sizing.idx};
      auto [it, inserted] = seen.emplace(std::move(key), i);
      owner_of[i] = it->second;
      if (inserted) unique.push_back(i);
    }
  }

  std::vector<EvalResult> results(requests.size());
  int width = max_parallel();
  if (width <= 1 || unique.size() <= 1) {
    for (std::size_t i : unique) results[i] = evaluate(requests[i].sizing, requests[i].corner);
  } else {
    std::counting_semaphore<> slots(width);
    std::vector<std::thread> workers;
    workers.reserve(unique.size());
    for (std::size_t i : unique) {
      workers.emplace_back([this, &slots, &results, &requests, i] {
        slots.acquire();
        results[i] = evaluate(requests[i].sizing, requests[i].corner);
        slots.release();
      });
    }
    for (auto& w : workers) w.join();
  }
  for (std::size_t i = 0; i < requests.size(); ++i) {
    if (owner_of[i] != i) {
      results[i] = results[owner_of[i]];
      results[i].cached = true;
    }
  }
  return results;
}

bool Environment::is_cached(const Sizing& s, std::size_t corner) const {
  Key key{corner, s.idx};
  std::lock_guard<std::mutex> lock(mu_);
  return cache_.find(key) != cache_.end();
}

std::uint64_t Environment::eval_count(std::size_t corner) const {
  std::lock_guard<std::mutex> lock(mu_);
  return counters_.at(corner);
}

std::uint64_t Environment::total_eval_count() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::uint64_t total = 0;
  for (auto c : counters_) total += c;
  return total;
}

// ---------------------------------------------------------------------------
// SyntheticOpamp

SyntheticOpamp::SyntheticOpamp(ProblemSpec problem) : Environment(std::move(problem)) {
  const ProblemSpec& p = this->problem();
  const std::vector<std::string> wanted = {"w1", "w2", "l1", "l2", "cc", "ib"};
  if (p.variables.size() != wanted.size())
    throw EnvError("synthetic_opamp needs exactly the variables w1, w2, l1, l2, cc, ib");
  std::size_t* slots[] = {&w1_, &w2_, &l1_, &l2_, &cc_, &ib_};
  for (std::size_t i = 0; i < wanted.size(); ++i) {
    bool found = false;
    for (std::size_t j = 0; j < p.variables.size(); ++j) {
      if (p.variables[j].name == wanted[i]) {
        *slots[i] = j;
        found = true;
        break;
      }
    }
    if (!found) throw EnvError("synthetic_opamp is missing variable '" + wanted[i] + "'");
  }
  for (const auto& v : p.variables)
    if (v.grid.front() <= 0.0)
      throw EnvError("synthetic_opamp variable '" + v.name + "' must have a positive grid");
  const std::vector<std::string> meas = {"gain_db", "ugbw_hz", "pm_deg", "power_w"};
  if (p.measurements != meas)
    throw EnvError("synthetic_opamp measurements must be gain_db, ugbw_hz, pm_deg, power_w");
}

EvalResult SyntheticOpamp::compute(const Sizing& s, std::size_t corner) {
  const ProblemSpec& p = problem();
  const Corner& c = p.corners[corner];
  const double kp = c.number_or("kp", kDefaultKp);
  const double lambda = c.number_or("lambda", kDefaultLambda);
  const double c_load = c.number_or("c_load", kDefaultCload);
  const double vdd = c.number_or("vdd", kDefaultVdd);

  const double w1 = raw_value(p, s, w1_);
  const double w2 = raw_value(p, s, w2_);
  const double l1 = raw_value(p, s, l1_);
  const double l2 = raw_value(p, s, l2_);
  const double cc = raw_value(p, s, cc_);
  const double ib = raw_value(p, s, ib_);

  // First-order square-law stage models: transconductance from the device
  // aspect ratio and tail current, output resistance from channel-length
  // modulation. Two gain stages, Miller compensation cc, load c_load.
  const double gm1 = kp * std::sqrt(2.0 * (w1 / l1) * ib);
  const double gm2 = kp * std::sqrt(2.0 * (w2 / l2) * ib);
  const double ro1 = 1.0 / (lambda * ib);
  const double ro2 = ro1;

  const double gain_db = 20.0 * std::log10(gm1 * ro1 * gm2 * ro2);
  const double ugbw = gm1 / (2.0 * std::numbers::pi * cc);
  const double pole2 = gm2 / (2.0 * std::numbers::pi * c_load);
  const double pm_deg = 90.0 - (180.0 / std::numbers::pi) * std::atan(ugbw / pole2);
  const double power = vdd * 3.0 * ib;

  EvalResult r;
  r.ok = true;
  r.meas = {gain_db, ugbw, pm_deg, power};
  return r;
}

// ---------------------------------------------------------------------------
// ToyLandscape

ToyLandscape::ToyLandscape(ProblemSpec problem, std::vector<double> center)
    : Environment(std::move(problem)), center_(std::move(center)) {
  const ProblemSpec& p = this->problem();
  if (center_.empty()) center_.assign(p.var_count(), 0.5);
  if (center_.size() != p.var_count())
    throw EnvError("toy landscape center has " + std::to_string(center_.size()) +
                   " coordinates, problem has " + std::to_string(p.var_count()) + " variables");
  if (p.measurements != std::vector<std::string>{"value"})
    throw EnvError("toy landscape expects the single measurement 'value'");
}

EvalResult ToyLandscape::compute(const Sizing& s, std::size_t /*corner*/) {
  std::vector<double> u = normalize(s, problem());
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    double d = u[i] - center_[i];
    acc -= d * d;
  }
  EvalResult r;
  r.ok = true;
  r.meas = {acc};
  return r;
}

std::unique_ptr<Environment> make_environment(const Config& cfg, const std::string& work_dir) {
  switch (cfg.env.kind) {
    case EnvKind::SyntheticOpamp:
      return std::make_unique<SyntheticOpamp>(cfg.problem);
    case EnvKind::ToyLandscape:
      return std::make_unique<ToyLandscape>(cfg.problem, cfg.env.toy_center);
    case EnvKind::External:
      return std::make_unique<ExternalSimulator>(cfg.problem, cfg.env.external, work_dir);
  }
  throw EnvError("unknown environment kind");
}

}  // namespace trsearch
