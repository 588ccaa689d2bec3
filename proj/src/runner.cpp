#include "trsearch/runner.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "trsearch/environment.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace trsearch {

namespace {

void write_text_file(const std::string& path, const std::string& text) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string sanitize_csv(const std::string& s) {
  std::string out;
  for (char c : s) out += (c == ',' || c == '\n' || c == '\r') ? ';' : c;
  return out;
}

json number_or_null(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

}  // namespace

void write_trajectory_csv(const std::string& path, const ProblemSpec& p, const SearchReport& rep) {
  std::ostringstream out;
  out << "iteration,corner";
  for (const auto& v : p.variables) out << ",idx_" << v.name;
  for (const auto& v : p.variables) out << ",val_" << v.name;
  for (const auto& m : p.measurements) out << "," << m;
  out << ",value,delta_r,rho,accepted,cumulative_evals,phase,restart,status\n";

  for (const auto& e : rep.trajectory) {
    out << e.iteration << "," << p.corners[e.corner].name;
    for (int idx : e.sizing.idx) out << "," << idx;
    for (std::size_t v = 0; v < p.variables.size(); ++v)
      out << "," << format_double(raw_value(p, e.sizing, v));
    for (std::size_t m = 0; m < p.measurements.size(); ++m)
      out << "," << (e.ok ? format_double(e.meas[m]) : std::string());
    out << "," << (e.ok ? format_double(e.value) : std::string());
    out << "," << (e.radius ? format_double(*e.radius) : std::string());
    out << "," << (e.rho ? format_double(*e.rho) : std::string());
    out << "," << (e.accepted ? (*e.accepted ? "1" : "0") : "");
    out << "," << e.cumulative_evals;
    out << "," << to_string(e.phase);
    out << "," << e.restart;
    out << "," << (e.ok ? "ok" : sanitize_csv(e.error));
    out << "\n";
  }
  write_text_file(path, out.str());
}

json report_to_json(const Config& cfg, const SearchReport& rep, bool deterministic, double wall_s) {
  const ProblemSpec& p = cfg.problem;
  json j;
  j["schema_version"] = "1.0";
  j["agent"] = rep.agent;
  j["strategy"] = to_string(rep.strategy);
  j["seed"] = rep.seed;
  j["outcome"] = !rep.abort_error.empty() ? "aborted"
                 : rep.satisfied          ? "satisfied"
                                          : "budget_exhausted";
  if (!rep.abort_error.empty()) j["abort_error"] = rep.abort_error;
  j["iterations"] = rep.iterations;
  j["restarts"] = rep.restarts;
  j["total_evals"] = rep.total_evals;
  json per_corner = json::object();
  for (std::size_t c = 0; c < p.corners.size(); ++c)
    per_corner[p.corners[c].name] = rep.evals_per_corner.size() > c ? rep.evals_per_corner[c] : 0;
  j["evals_per_corner"] = std::move(per_corner);
  j["best_value"] = number_or_null(rep.best_value);
  j["best_sizing"] = rep.best_sizing.idx;

  if (rep.satisfied) {
    json sol;
    sol["indices"] = rep.solution.idx;
    json values = json::object();
    for (std::size_t v = 0; v < p.variables.size(); ++v)
      values[p.variables[v].name] = raw_value(p, rep.solution, v);
    sol["values"] = std::move(values);
    j["solution"] = std::move(sol);
    json meas = json::object();
    for (std::size_t c = 0; c < p.corners.size(); ++c) {
      json one = json::object();
      for (std::size_t m = 0; m < p.measurements.size(); ++m)
        one[p.measurements[m]] = rep.solution_meas[c][m];
      meas[p.corners[c].name] = std::move(one);
    }
    j["solution_measurements"] = std::move(meas);
  }

  json focus = json::array();
  for (std::size_t c : rep.final_focus) focus.push_back(p.corners[c].name);
  j["final_focus"] = std::move(focus);

  json rounds = json::array();
  for (const auto& r : rep.verification_rounds) {
    json round;
    round["solution"] = r.solution.idx;
    json failed = json::array();
    for (std::size_t c : r.failed) failed.push_back(p.corners[c].name);
    round["failed"] = std::move(failed);
    round["grown"] = r.grown ? json(p.corners[*r.grown].name) : json(nullptr);
    round["all_passed"] = r.all_passed;
    rounds.push_back(std::move(round));
  }
  j["verification_rounds"] = std::move(rounds);

  json models = json::object();
  for (const auto& [name, snapshot] : rep.models) models[name] = snapshot;
  j["models"] = std::move(models);

  j["config"] = write_config(cfg);
  j["config_hash"] = config_hash(cfg);
  if (!deterministic) j["wall_s"] = wall_s;
  return j;
}

LoadedReport load_report(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& err) {
    throw std::runtime_error("report '" + path + "' is not valid JSON: " + err.what());
  }
  std::string version = j.value("schema_version", "");
  if (version.rfind("1.", 0) != 0)
    throw std::runtime_error("report '" + path + "' has unsupported schema_version '" + version +
                             "'");
  LoadedReport out;
  out.cfg = parse_config(j.at("config").get<std::string>());
  out.satisfied = j.value("outcome", "") == "satisfied";
  if (j.contains("solution")) {
    for (const auto& idx : j.at("solution").at("indices")) out.solution.idx.push_back(idx.get<int>());
  } else {
    for (const auto& idx : j.at("best_sizing")) out.solution.idx.push_back(idx.get<int>());
  }
  if (j.contains("models"))
    for (const auto& [name, snapshot] : j.at("models").items())
      out.models.emplace_back(name, snapshot);
  return out;
}

Aggregates aggregate(const std::vector<RunStats>& runs) {
  Aggregates a;
  if (runs.empty()) return a;
  auto stat = [&](auto pick) {
    StatLine s;
    double sum = 0.0;
    s.min = std::numeric_limits<double>::infinity();
    s.max = -std::numeric_limits<double>::infinity();
    for (const auto& r : runs) {
      double v = static_cast<double>(pick(r));
      sum += v;
      s.min = std::min(s.min, v);
      s.max = std::max(s.max, v);
    }
    s.mean = sum / static_cast<double>(runs.size());
    if (runs.size() > 1) {
      double acc = 0.0;
      for (const auto& r : runs) {
        double d = static_cast<double>(pick(r)) - s.mean;
        acc += d * d;
      }
      s.stddev = std::sqrt(acc / static_cast<double>(runs.size() - 1));
    }
    return s;
  };
  int ok = 0;
  for (const auto& r : runs) ok += r.satisfied ? 1 : 0;
  a.success_rate = static_cast<double>(ok) / static_cast<double>(runs.size());
  a.iterations = stat([](const RunStats& r) { return r.iterations; });
  a.evaluations = stat([](const RunStats& r) { return r.evaluations; });
  return a;
}

namespace {

json stat_to_json(const StatLine& s) {
  json j;
  j["mean"] = s.mean;
  j["std"] = s.stddev;
  j["min"] = s.min;
  j["max"] = s.max;
  return j;
}

StatLine stat_from_json(const json& j) {
  StatLine s;
  s.mean = j.at("mean").get<double>();
  s.stddev = j.at("std").get<double>();
  s.min = j.at("min").get<double>();
  s.max = j.at("max").get<double>();
  return s;
}

bool stat_close(const StatLine& a, const StatLine& b) {
  auto close = [](double x, double y) { return std::abs(x - y) <= 1e-9 * std::max(1.0, std::abs(y)); };
  return close(a.mean, b.mean) && close(a.stddev, b.stddev) && close(a.min, b.min) &&
         close(a.max, b.max);
}

}  // namespace

json summary_to_json(const ExperimentSummary& s) {
  json j;
  j["schema_version"] = "1.0";
  j["config_hash"] = s.config_hash;
  j["problem_hash"] = s.problem_hash;
  j["agent"] = s.agent;
  j["strategy"] = s.strategy;
  j["seed_base"] = s.seed_base;
  j["repeats"] = s.repeats;
  j["deterministic"] = s.deterministic;
  json runs = json::array();
  for (const auto& r : s.runs) {
    json one;
    one["seed"] = r.seed;
    one["outcome"] = !r.error.empty() ? "aborted" : r.satisfied ? "satisfied" : "budget_exhausted";
    if (!r.error.empty()) one["error"] = r.error;
    one["iterations"] = r.iterations;
    one["evaluations"] = r.evaluations;
    one["restarts"] = r.restarts;
    runs.push_back(std::move(one));
  }
  j["runs"] = std::move(runs);
  json agg;
  agg["success_rate"] = s.aggregates.success_rate;
  agg["iterations"] = stat_to_json(s.aggregates.iterations);
  agg["evaluations"] = stat_to_json(s.aggregates.evaluations);
  j["aggregates"] = std::move(agg);
  if (!s.deterministic) j["wall_s"] = s.wall_s;
  return j;
}

ExperimentSummary load_summary(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& err) {
    throw std::runtime_error("summary '" + path + "' is not valid JSON: " + err.what());
  }
  std::string version = j.value("schema_version", "");
  if (version.rfind("1.", 0) != 0)
    throw std::runtime_error("summary '" + path + "' has unsupported schema_version '" + version +
                             "'");
  ExperimentSummary s;
  s.config_hash = j.at("config_hash").get<std::string>();
  s.problem_hash = j.value("problem_hash", s.config_hash);
  s.agent = j.at("agent").get<std::string>();
  s.strategy = j.at("strategy").get<std::string>();
  s.seed_base = j.at("seed_base").get<std::uint64_t>();
  s.repeats = j.at("repeats").get<int>();
  s.deterministic = j.value("deterministic", false);
  for (const auto& rj : j.at("runs")) {
    RunStats r;
    r.seed = rj.at("seed").get<std::uint64_t>();
    r.satisfied = rj.at("outcome").get<std::string>() == "satisfied";
    r.error = rj.value("error", "");
    r.iterations = rj.at("iterations").get<long long>();
    r.evaluations = rj.at("evaluations").get<std::uint64_t>();
    r.restarts = rj.at("restarts").get<int>();
    s.runs.push_back(std::move(r));
  }
  s.wall_s = j.value("wall_s", 0.0);

  // The stored aggregates are redundant on purpose; a summary whose stored
  // numbers drift from its own runs is corrupt and gets rejected here.
  Aggregates derived = aggregate(s.runs);
  const json& agg = j.at("aggregates");
  s.aggregates.success_rate = agg.at("success_rate").get<double>();
  s.aggregates.iterations = stat_from_json(agg.at("iterations"));
  s.aggregates.evaluations = stat_from_json(agg.at("evaluations"));
  bool ok = std::abs(s.aggregates.success_rate - derived.success_rate) <= 1e-9 &&
            stat_close(s.aggregates.iterations, derived.iterations) &&
            stat_close(s.aggregates.evaluations, derived.evaluations);
  if (!ok)
    throw std::runtime_error("summary '" + path +
                             "': stored aggregates do not match the per-run stats");
  return s;
}

ExperimentSummary run_experiment(const Config& cfg, const RunnerOptions& opts) {
  if (opts.repeats < 1) throw ConfigError("repeats must be >= 1");
  auto t0 = std::chrono::steady_clock::now();

  ExperimentSummary summary;
  summary.config_hash = config_hash(cfg);
  summary.problem_hash = problem_hash(cfg);
  summary.agent = to_string(cfg.search.agent);
  summary.strategy = to_string(cfg.search.strategy);
  summary.seed_base = opts.seed_base;
  summary.repeats = opts.repeats;
  summary.deterministic = opts.deterministic;

  fs::create_directories(opts.out_dir);
  for (int i = 0; i < opts.repeats; ++i) {
    std::uint64_t seed = opts.seed_base + static_cast<std::uint64_t>(i);
    std::string run_dir = opts.out_dir + "/run_" + std::to_string(seed);
    auto r0 = std::chrono::steady_clock::now();

    // Fresh environment per run: caches and counters start clean, so runs
    // are independent and reproducible in isolation.
    std::unique_ptr<Environment> env = make_environment(cfg, run_dir + "/scratch");
    SearchReport rep;
    std::string error;
    try {
      rep = run_agent(cfg, *env, seed, opts.warm);
    } catch (const SearchAbort& abort) {
      rep = abort.partial();
      error = abort.what();
      rep.abort_error = error;
    }
    double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - r0).count();

    write_trajectory_csv(run_dir + "/trajectory.csv", cfg.problem, rep);
    write_text_file(run_dir + "/report.json",
                    report_to_json(cfg, rep, opts.deterministic, wall).dump(2) + "\n");

    RunStats stats;
    stats.seed = seed;
    stats.satisfied = rep.satisfied;
    stats.iterations = rep.iterations;
    stats.evaluations = rep.total_evals;
    stats.restarts = rep.restarts;
    stats.error = error;
    summary.runs.push_back(std::move(stats));
  }

  summary.aggregates = aggregate(summary.runs);
  summary.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_text_file(opts.out_dir + "/summary.json", summary_to_json(summary).dump(2) + "\n");
  return summary;
}

std::string compare_text(const ExperimentSummary& a, const ExperimentSummary& b) {
  // Agent, strategy and seed are exactly what a comparison is supposed to
  // vary, so the check uses the hash that is blind to them.
  if (a.problem_hash != b.problem_hash)
    throw ConfigError("cannot compare runs of different problems (hash " + a.problem_hash +
                      " vs " + b.problem_hash + ")");
  std::ostringstream out;
  char line[160];
  auto label = [](const ExperimentSummary& s) { return s.agent + "/" + s.strategy; };
  std::snprintf(line, sizeof(line), "%-22s %18s %18s\n", "metric", label(a).c_str(),
                label(b).c_str());
  out << line;
  auto row = [&](const char* name, double va, double vb) {
    std::snprintf(line, sizeof(line), "%-22s %18.6g %18.6g\n", name, va, vb);
    out << line;
  };
  row("success_rate", a.aggregates.success_rate, b.aggregates.success_rate);
  row("evals_mean", a.aggregates.evaluations.mean, b.aggregates.evaluations.mean);
  row("evals_std", a.aggregates.evaluations.stddev, b.aggregates.evaluations.stddev);
  row("evals_min", a.aggregates.evaluations.min, b.aggregates.evaluations.min);
  row("evals_max", a.aggregates.evaluations.max, b.aggregates.evaluations.max);
  row("iterations_mean", a.aggregates.iterations.mean, b.aggregates.iterations.mean);
  row("iterations_std", a.aggregates.iterations.stddev, b.aggregates.iterations.stddev);
  if (a.aggregates.evaluations.mean > 0.0) {
    std::snprintf(line, sizeof(line), "%-22s %18.6g\n", "evals ratio (b/a)",
                  b.aggregates.evaluations.mean / a.aggregates.evaluations.mean);
    out << line;
  }
  return out.str();
}

}  // namespace trsearch
