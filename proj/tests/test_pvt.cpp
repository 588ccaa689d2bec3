#include "doctest.h"

#include <cmath>
#include <limits>
#include <set>

#include "test_helpers.hpp"
#include "trsearch/pvt.hpp"

using namespace trsearch;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ProblemSpec three_corner_problem() {
  return test_helpers::toy_config(2, 5, 0.0, 3).problem;
}

// A surrogate that has learned to predict a constant, to make aggregated
// candidate values hand-checkable.
MlpSurrogate constant_model(int inputs, double value, std::uint64_t seed) {
  MlpSurrogate m(inputs, 1, 8, seed);
  Eigen::MatrixXd x(12, inputs);
  std::mt19937_64 rng(seed + 100);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    for (Eigen::Index c = 0; c < x.cols(); ++c) x(r, c) = dist(rng);
  m.train(x, Eigen::MatrixXd::Constant(12, 1, value));
  return m;
}

// Environment whose corner 2 always fails to evaluate.
class BrokenCornerToy : public test_helpers::OffsetToy {
 public:
  using OffsetToy::OffsetToy;

 protected:
  EvalResult compute(const Sizing& s, std::size_t corner) override {
    if (corner == 2) {
      EvalResult r;
      r.error = "simulator crashed";
      return r;
    }
    return OffsetToy::compute(s, corner);
  }
};

}  // namespace

TEST_CASE("initial focus per strategy") {
  ProblemSpec p = three_corner_problem();
  std::mt19937_64 rng(5);

  SchedulerState hardest = init_focus(p, Strategy::ProgressiveHardest, "c2", rng);
  CHECK(hardest.focus == std::vector<std::size_t>{2});
  CHECK(hardest.in_focus(2));
  CHECK_FALSE(hardest.in_focus(0));

  SchedulerState brute = init_focus(p, Strategy::BruteForce, "", rng);
  CHECK(brute.focus == std::vector<std::size_t>{0, 1, 2});

  // The random pick is seeded and lands on every corner eventually.
  std::set<std::size_t> seen;
  for (std::uint64_t s = 0; s < 64; ++s) {
    std::mt19937_64 r(s);
    SchedulerState st = init_focus(p, Strategy::ProgressiveRandom, "", r);
    REQUIRE(st.focus.size() == 1);
    REQUIRE(st.focus[0] < 3);
    seen.insert(st.focus[0]);
  }
  CHECK(seen.size() == 3);

  // Same seed, same pick.
  std::mt19937_64 r1(9), r2(9);
  CHECK(init_focus(p, Strategy::ProgressiveRandom, "", r1).focus ==
        init_focus(p, Strategy::ProgressiveRandom, "", r2).focus);

  CHECK_THROWS_AS(init_focus(p, Strategy::ProgressiveHardest, "", rng), ConfigError);
  CHECK_THROWS_AS(init_focus(p, Strategy::ProgressiveHardest, "zz", rng), ConfigError);
  ProblemSpec empty;
  CHECK_THROWS_AS(init_focus(empty, Strategy::BruteForce, "", rng), ConfigError);
}

TEST_CASE("verification grows the focus set by the worst failing corner") {
  ProblemSpec p = three_corner_problem();
  // At the solution (the landscape peak) corner values are just the offsets:
  // c0 passes, c1 misses by 0.03, c2 misses by 0.05.
  test_helpers::OffsetToy env(p, {0.02, -0.03, -0.05});
  Sizing peak{{2, 2}};

  std::mt19937_64 rng(0);
  SchedulerState st = init_focus(p, Strategy::ProgressiveHardest, "c0", rng);

  VerifyOutcome first = on_focus_satisfied(st, peak, env);
  CHECK_FALSE(first.done);
  REQUIRE(first.grown.has_value());
  CHECK(*first.grown == 2);  // the worst offender, not merely the first
  CHECK(st.focus == std::vector<std::size_t>{0, 2});
  REQUIRE(first.checked.size() == 2);
  CHECK(std::get<0>(first.checked[0]) == 1);  // pool order
  CHECK(std::get<2>(first.checked[0]) == doctest::Approx(-0.03));
  CHECK(std::get<0>(first.checked[1]) == 2);
  CHECK(std::get<2>(first.checked[1]) == doctest::Approx(-0.05));

  // Exactly the non-focus corners were spent from the budget.
  CHECK(env.total_eval_count() == 2);

  VerifyOutcome second = on_focus_satisfied(st, peak, env);
  CHECK_FALSE(second.done);
  CHECK(*second.grown == 1);
  CHECK(st.focus == std::vector<std::size_t>{0, 2, 1});
  CHECK(env.total_eval_count() == 2);  // served from the cache this time

  // With the whole pool in focus there is nothing left to check.
  VerifyOutcome third = on_focus_satisfied(st, peak, env);
  CHECK(third.done);
  CHECK_FALSE(third.grown.has_value());
  CHECK(third.checked.empty());

  // The history preserves the whole story.
  REQUIRE(st.rounds.size() == 3);
  CHECK(st.rounds[0].failed == std::vector<std::size_t>{1, 2});
  CHECK(st.rounds[0].grown == 2);
  CHECK_FALSE(st.rounds[0].all_passed);
  CHECK(st.rounds[2].all_passed);
  CHECK(st.rounds[2].solution == peak);
}

TEST_CASE("a clean pool check reports success") {
  ProblemSpec p = three_corner_problem();
  test_helpers::OffsetToy env(p, {0.5, 0.25, 0.125});
  std::mt19937_64 rng(0);
  SchedulerState st = init_focus(p, Strategy::ProgressiveRandom, "", rng);
  VerifyOutcome out = on_focus_satisfied(st, Sizing{{2, 2}}, env);
  CHECK(out.done);
  CHECK(st.focus.size() == 1);
  REQUIRE(st.rounds.size() == 1);
  CHECK(st.rounds[0].all_passed);
  CHECK(st.rounds[0].failed.empty());
}

TEST_CASE("ties between equally bad corners go to the earliest pool index") {
  ProblemSpec p = three_corner_problem();
  test_helpers::OffsetToy env(p, {0.02, -0.05, -0.05});
  std::mt19937_64 rng(0);
  SchedulerState st = init_focus(p, Strategy::ProgressiveHardest, "c0", rng);
  VerifyOutcome out = on_focus_satisfied(st, Sizing{{2, 2}}, env);
  CHECK(*out.grown == 1);
}

TEST_CASE("failed evaluations count as infinitely bad") {
  ProblemSpec p = three_corner_problem();
  BrokenCornerToy env(p, {0.02, -0.05, 0.5});
  std::mt19937_64 rng(0);
  SchedulerState st = init_focus(p, Strategy::ProgressiveHardest, "c0", rng);
  VerifyOutcome out = on_focus_satisfied(st, Sizing{{2, 2}}, env);
  // c1 fails its constraint by 0.05, but c2 cannot be measured at all, which
  // is worse.
  CHECK(*out.grown == 2);
  for (const auto& [c, r, v] : out.checked) {
    if (c == 2) {
      CHECK_FALSE(r.ok);
      CHECK(v == -kInf);
    }
  }
}

TEST_CASE("the callback flavor drives arbitrary evaluators") {
  ProblemSpec p = three_corner_problem();
  std::mt19937_64 rng(0);
  SchedulerState st = init_focus(p, Strategy::ProgressiveHardest, "c1", rng);

  int calls = 0;
  EvalFn eval = [&calls](const Sizing&, std::size_t corner) {
    ++calls;
    EvalResult r;
    r.ok = true;
    r.meas = {corner == 0 ? 1.0 : -1.0};
    return r;
  };
  VerifyOutcome out = on_focus_satisfied(st, p, Sizing{{0, 0}}, eval);
  CHECK(calls == 2);        // corners 0 and 2
  CHECK(*out.grown == 2);   // corner 2 measured -1 against threshold 0
  CHECK(st.focus == std::vector<std::size_t>{1, 2});
}

TEST_CASE("candidate values aggregate predicted constraint values over the focus") {
  // Two corners sharing a threshold of 4 (scale 4): a model that predicts 5
  // satisfies it, one that predicts 3 misses by a quarter.
  ProblemSpec p = test_helpers::toy_config(2, 5, 4.0, 2, 4.0).problem;
  std::vector<std::optional<MlpSurrogate>> models;
  models.emplace_back(constant_model(2, 5.0, 1));
  models.emplace_back(constant_model(2, 3.0, 2));

  SchedulerState st;
  st.focus = {0};
  std::vector<double> unit{0.5, 0.5};
  CHECK(candidate_value(st, p, models, unit) == doctest::Approx(0.0).epsilon(1e-6));

  st.focus = {0, 1};
  CHECK(candidate_value(st, p, models, unit) == doctest::Approx(-0.25).epsilon(1e-6));

  // The aggregate is the minimum over corners, not the sum: two failing
  // corners score as badly as the worse one alone.
  std::vector<std::optional<MlpSurrogate>> failing;
  failing.emplace_back(constant_model(2, 2.0, 3));  // value (2-4)/4 = -0.5
  failing.emplace_back(constant_model(2, 3.0, 4));  // value -0.25
  CHECK(candidate_value(st, p, failing, unit) == doctest::Approx(-0.5).epsilon(1e-6));
}

TEST_CASE("batch candidate values match the single-point flavor") {
  ProblemSpec p = test_helpers::toy_config(3, 5, 4.0, 2, 4.0).problem;
  std::vector<std::optional<MlpSurrogate>> models;
  // Non-constant models this time.
  for (std::uint64_t c = 0; c < 2; ++c) {
    MlpSurrogate m(3, 1, 8, c);
    Eigen::MatrixXd x(20, 3);
    std::mt19937_64 rng(c + 7);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (Eigen::Index r = 0; r < x.rows(); ++r)
      for (Eigen::Index j = 0; j < x.cols(); ++j) x(r, j) = dist(rng);
    Eigen::MatrixXd t =
        (4.0 + x.rowwise().sum().array() - 1.5 * static_cast<double>(c)).matrix();
    m.train(x, t);
    models.emplace_back(std::move(m));
  }

  SchedulerState st;
  st.focus = {0, 1};
  Eigen::MatrixXd rows(4, 3);
  rows << 0.0, 0.25, 0.5,
      1.0, 1.0, 1.0,
      0.5, 0.5, 0.5,
      0.25, 0.0, 0.75;
  Eigen::VectorXd batch = candidate_values(st, p, models, rows);
  REQUIRE(batch.size() == 4);
  for (Eigen::Index i = 0; i < 4; ++i) {
    std::vector<double> u{rows(i, 0), rows(i, 1), rows(i, 2)};
    CHECK(candidate_value(st, p, models, u) == doctest::Approx(batch(i)).epsilon(1e-12));
    CHECK(batch(i) <= 0.0);  // constraint values never go positive
  }
}

TEST_CASE("candidate scoring refuses to run without models for the focus") {
  ProblemSpec p = test_helpers::toy_config(2, 5, 4.0, 2, 4.0).problem;
  std::vector<std::optional<MlpSurrogate>> models(2);  // both empty
  models[0] = constant_model(2, 5.0, 1);

  SchedulerState st;
  std::vector<double> unit{0.5, 0.5};
  CHECK_THROWS_WITH_AS(candidate_value(st, p, models, unit), doctest::Contains("empty focus"),
                       std::logic_error);

  st.focus = {1};
  CHECK_THROWS_WITH_AS(candidate_value(st, p, models, unit),
                       doctest::Contains("no surrogate for focus corner 'c1'"), std::logic_error);
}
