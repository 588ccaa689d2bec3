#include "doctest.h"

#include <cmath>
#include <vector>

#include "test_helpers.hpp"
#include "trsearch/config.hpp"
#include "trsearch/environment.hpp"

using namespace trsearch;

namespace {

// Single-point grids so the one valid sizing measures a hand-checked design:
// w1=w2=16u, l1=l2=0.2u, cc=2p, ib=10u. Variable order is deliberately
// shuffled; the amplifier must find variables by name.
ProblemSpec opamp_point_problem() {
  ProblemSpec p;
  p.variables = {
      {"cc", {2e-12}},  {"w1", {16e-6}},  {"ib", {1e-5}},
      {"w2", {16e-6}},  {"l1", {0.2e-6}}, {"l2", {0.2e-6}},
  };
  p.measurements = {"gain_db", "ugbw_hz", "pm_deg", "power_w"};
  p.corners = {
      Corner{"tt",
             {{"kp", CornerParam{5e-4}},
              {"lambda", CornerParam{0.1}},
              {"c_load", CornerParam{1e-12}},
              {"vdd", CornerParam{1.8}}}},
      Corner{"bare", {}},  // must fall back to the same numbers as tt
      Corner{"weak_kp", {{"kp", CornerParam{4e-4}}}},
      Corner{"hot_lambda", {{"lambda", CornerParam{0.2}}}},
      Corner{"low_vdd", {{"vdd", CornerParam{1.62}}}},
  };
  ConstraintSpec cs;
  cs.measurement = "gain_db";
  cs.meas_index = 0;
  cs.direction = Direction::AtLeast;
  cs.threshold = 0.0;
  cs.scale = 1.0;
  p.constraints.assign(p.corners.size(), {cs});
  return p;
}

// Environments with deliberately broken compute() results, for the
// result-sanitization tests.
class BadCountEnv : public Environment {
 public:
  using Environment::Environment;

 protected:
  EvalResult compute(const Sizing&, std::size_t) override {
    EvalResult r;
    r.ok = true;
    r.meas = {1.0, 2.0};  // problem declares one measurement
    return r;
  }
};

class NanEnv : public Environment {
 public:
  using Environment::Environment;
  int computes = 0;

 protected:
  EvalResult compute(const Sizing&, std::size_t) override {
    ++computes;
    EvalResult r;
    r.ok = true;
    r.meas = {NAN};
    return r;
  }
};

ProblemSpec toy_problem(std::size_t vars = 2, int points = 5, std::size_t corners = 1) {
  return test_helpers::toy_config(vars, points, 0.0, corners).problem;
}

}  // namespace

TEST_CASE("amplifier measurements match the hand-derived design point") {
  SyntheticOpamp env(opamp_point_problem());
  Sizing s{{0, 0, 0, 0, 0, 0}};

  EvalResult r = env.evaluate(s, 0);
  REQUIRE(r.ok);
  REQUIRE(r.meas.size() == 4);
  // gm1 = 5e-4 * sqrt(2 * 80 * 1e-5) = 20 uS; ro = 1 MOhm; two identical
  // stages give 20*log10(400) dB, and the rest follows from cc and c_load.
  CHECK(r.meas[0] == doctest::Approx(52.04119982655925).epsilon(1e-12));
  CHECK(r.meas[1] == doctest::Approx(1591549.4309189536).epsilon(1e-12));
  CHECK(r.meas[2] == doctest::Approx(63.43494882292201).epsilon(1e-12));
  CHECK(r.meas[3] == doctest::Approx(5.4e-5).epsilon(1e-12));
}

TEST_CASE("corner parameters default to the typical values") {
  SyntheticOpamp env(opamp_point_problem());
  Sizing s{{0, 0, 0, 0, 0, 0}};
  EvalResult tt = env.evaluate(s, 0);
  EvalResult bare = env.evaluate(s, 1);
  REQUIRE(bare.ok);
  CHECK(bare.meas == tt.meas);
}

TEST_CASE("corner parameters shift the physics the expected way") {
  SyntheticOpamp env(opamp_point_problem());
  Sizing s{{0, 0, 0, 0, 0, 0}};
  EvalResult tt = env.evaluate(s, 0);
  EvalResult weak = env.evaluate(s, 2);    // kp * 0.8
  EvalResult hot = env.evaluate(s, 3);     // lambda * 2
  EvalResult low_v = env.evaluate(s, 4);   // vdd * 0.9

  // kp scales both gm's: gain drops by 40*log10(0.8), bandwidth by 0.8,
  // while the pole ratio (and so the phase margin) and power are untouched.
  CHECK(weak.meas[0] - tt.meas[0] == doctest::Approx(40.0 * std::log10(0.8)).epsilon(1e-12));
  CHECK(weak.meas[1] == doctest::Approx(0.8 * tt.meas[1]).epsilon(1e-12));
  CHECK(weak.meas[2] == doctest::Approx(tt.meas[2]).epsilon(1e-12));
  CHECK(weak.meas[3] == tt.meas[3]);

  // lambda scales both output resistances: gain only.
  CHECK(hot.meas[0] - tt.meas[0] == doctest::Approx(40.0 * std::log10(0.5)).epsilon(1e-12));
  CHECK(hot.meas[1] == tt.meas[1]);
  CHECK(hot.meas[2] == tt.meas[2]);
  CHECK(hot.meas[3] == tt.meas[3]);

  // vdd scales power only.
  CHECK(low_v.meas[3] == doctest::Approx(0.9 * tt.meas[3]).epsilon(1e-12));
  CHECK(low_v.meas[0] == tt.meas[0]);
}

TEST_CASE("amplifier construction rejects malformed problems") {
  ProblemSpec p = opamp_point_problem();
  p.variables.erase(p.variables.begin());  // drop cc
  CHECK_THROWS_WITH_AS(SyntheticOpamp{p}, doctest::Contains("w1, w2, l1, l2, cc, ib"), EnvError);

  p = opamp_point_problem();
  p.variables[2].name = "ibias";  // right count, wrong name
  CHECK_THROWS_WITH_AS(SyntheticOpamp{p}, doctest::Contains("missing variable 'ib'"), EnvError);

  p = opamp_point_problem();
  p.variables[0].grid = {-1e-12};
  CHECK_THROWS_WITH_AS(SyntheticOpamp{p}, doctest::Contains("positive grid"), EnvError);

  p = opamp_point_problem();
  p.measurements = {"gain_db", "ugbw_hz", "pm_deg", "current_a"};
  p.constraints.assign(p.corners.size(), p.constraints[0]);
  CHECK_THROWS_AS(SyntheticOpamp{p}, EnvError);
}

TEST_CASE("toy landscape peaks at its center") {
  // 5-point grids include u = 0.5 exactly, which is the default center.
  ToyLandscape env(toy_problem(), {});
  EvalResult top = env.evaluate(Sizing{{2, 2}}, 0);
  REQUIRE(top.ok);
  CHECK(top.meas[0] == 0.0);
  EvalResult off = env.evaluate(Sizing{{0, 4}}, 0);
  CHECK(off.meas[0] == doctest::Approx(-0.5));

  ToyLandscape shifted(toy_problem(), {0.0, 0.0});
  CHECK(shifted.evaluate(Sizing{{0, 0}}, 0).meas[0] == 0.0);
  CHECK(shifted.evaluate(Sizing{{2, 2}}, 0).meas[0] == doctest::Approx(-0.5));

  CHECK_THROWS_WITH_AS(ToyLandscape(toy_problem(), {0.5}),
                       doctest::Contains("1 coordinates, problem has 2"), EnvError);
}

TEST_CASE("results are cached per sizing and corner; counters track fresh work only") {
  ToyLandscape env(toy_problem(2, 5, 2), {});
  Sizing a{{0, 0}}, b{{1, 3}};

  CHECK_FALSE(env.is_cached(a, 0));
  EvalResult first = env.evaluate(a, 0);
  CHECK_FALSE(first.cached);
  CHECK(env.is_cached(a, 0));
  CHECK_FALSE(env.is_cached(a, 1));  // corners cache independently

  EvalResult again = env.evaluate(a, 0);
  CHECK(again.cached);
  CHECK(again.meas == first.meas);
  CHECK(env.eval_count(0) == 1);

  env.evaluate(a, 1);
  env.evaluate(b, 0);
  CHECK(env.eval_count(0) == 2);
  CHECK(env.eval_count(1) == 1);
  CHECK(env.total_eval_count() == 3);
}

TEST_CASE("batch evaluation deduplicates repeated requests") {
  ToyLandscape env(toy_problem(), {});
  std::vector<EvalRequest> reqs{
      {Sizing{{0, 0}}, 0},
      {Sizing{{0, 0}}, 0},  // duplicate of [0]
      {Sizing{{1, 1}}, 0},
  };
  std::vector<EvalResult> rs = env.evaluate_batch(reqs);
  REQUIRE(rs.size() == 3);
  CHECK_FALSE(rs[0].cached);
  CHECK(rs[1].cached);
  CHECK(rs[1].meas == rs[0].meas);
  CHECK_FALSE(rs[2].cached);
  CHECK(env.total_eval_count() == 2);

  // A second batch over known points is all cache hits.
  std::vector<EvalResult> rs2 = env.evaluate_batch(reqs);
  for (const auto& r : rs2) CHECK(r.cached);
  CHECK(env.total_eval_count() == 2);
}

TEST_CASE("malformed compute results are turned into failures") {
  BadCountEnv bad(toy_problem());
  EvalResult r = bad.evaluate(Sizing{{0, 0}}, 0);
  CHECK_FALSE(r.ok);
  CHECK(r.meas.empty());
  CHECK(r.error == "environment returned 2 measurements, expected 1");

  NanEnv nan_env(toy_problem());
  EvalResult n = nan_env.evaluate(Sizing{{0, 0}}, 0);
  CHECK_FALSE(n.ok);
  CHECK(n.error == "measurement 'value' is not finite");
  // Failures are cached: a deterministic simulator that failed will fail again.
  EvalResult n2 = nan_env.evaluate(Sizing{{0, 0}}, 0);
  CHECK(n2.cached);
  CHECK_FALSE(n2.ok);
  CHECK(nan_env.computes == 1);
  CHECK(nan_env.eval_count(0) == 1);
}

TEST_CASE("evaluate validates its arguments") {
  ToyLandscape env(toy_problem(), {});
  CHECK_THROWS_AS(env.evaluate(Sizing{{0}}, 0), ConfigError);      // arity
  CHECK_THROWS_AS(env.evaluate(Sizing{{0, 9}}, 0), ConfigError);   // index range
  CHECK_THROWS_AS(env.evaluate(Sizing{{0, 0}}, 7), EnvError);      // corner range
}

TEST_CASE("make_environment dispatches on the config kind") {
  Config toy = test_helpers::toy_config(2, 5, 0.0);
  std::unique_ptr<Environment> env = make_environment(toy);
  CHECK(env->evaluate(Sizing{{2, 2}}, 0).meas[0] == 0.0);

  Config amp = parse_config(test_helpers::opamp_config_text());
  std::unique_ptr<Environment> amp_env = make_environment(amp);
  EvalResult r = amp_env->evaluate(Sizing{{10, 10, 5, 5, 10, 10}}, 0);
  CHECK(r.ok);
  REQUIRE(r.meas.size() == 4);
}
