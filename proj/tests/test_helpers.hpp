#pragma once

// Shared fixtures for the unit tests.

#include <string>

#include "trsearch/config.hpp"
#include "trsearch/environment.hpp"

namespace test_helpers {

// Small single-corner amplifier config used across config/environment tests.
inline std::string opamp_config_text() {
  return R"cfg(
[variables]
w1 = { min = 1e-6, max = 100e-6, points = 20, spacing = "log" }
w2 = { min = 1e-6, max = 100e-6, points = 20, spacing = "log" }
l1 = { min = 0.1e-6, max = 2e-6, points = 20, spacing = "log" }
l2 = { min = 0.1e-6, max = 2e-6, points = 20, spacing = "log" }
cc = { min = 0.1e-12, max = 10e-12, points = 20, spacing = "log" }
ib = { min = 1e-6, max = 100e-6, points = 20, spacing = "log" }

[corners.tt]
kp = 5e-4
lambda = 0.1
c_load = 1e-12
vdd = 1.8

[constraints.tt]
gain_db = { at_least = 55 }
pm_deg = { at_least = 60 }
ugbw_hz = { at_least = 2e6 }
power_w = { at_most = 8e-5 }

[search]
budget = 2000
seed = 7

[environment]
kind = "synthetic_opamp"
)cfg";
}

// Tiny N-variable toy problem over the unit cube with a single constraint
// "value >= threshold" on every corner.
inline trsearch::Config toy_config(std::size_t vars, int points, double threshold,
                                   std::size_t corners = 1, double scale = 1.0) {
  trsearch::Config cfg;
  for (std::size_t v = 0; v < vars; ++v) {
    trsearch::Variable var;
    var.name = "x" + std::to_string(v);
    for (int i = 0; i < points; ++i)
      var.grid.push_back(static_cast<double>(i) / static_cast<double>(points - 1));
    cfg.problem.variables.push_back(std::move(var));
  }
  cfg.problem.measurements = {"value"};
  for (std::size_t c = 0; c < corners; ++c) {
    trsearch::Corner corner;
    corner.name = "c" + std::to_string(c);
    cfg.problem.corners.push_back(std::move(corner));
    trsearch::ConstraintSpec cs;
    cs.measurement = "value";
    cs.meas_index = 0;
    cs.direction = trsearch::Direction::AtLeast;
    cs.threshold = threshold;
    cs.scale = scale;
    cfg.problem.constraints.push_back({cs});
  }
  cfg.problem.budget = 2000;
  cfg.env.kind = trsearch::EnvKind::ToyLandscape;
  return cfg;
}

// Toy landscape where each corner shifts the measured value by a fixed
// offset: corner c measures -|u - 0.5|^2 + offset[c]. Offsets order the
// corners by difficulty without changing where the optimum sits.
class OffsetToy : public trsearch::Environment {
 public:
  OffsetToy(trsearch::ProblemSpec p, std::vector<double> offsets)
      : Environment(std::move(p)), offsets_(std::move(offsets)) {}

 protected:
  trsearch::EvalResult compute(const trsearch::Sizing& s, std::size_t corner) override {
    std::vector<double> u = trsearch::normalize(s, problem());
    double acc = 0.0;
    for (double x : u) {
      double d = x - 0.5;
      acc -= d * d;
    }
    trsearch::EvalResult r;
    r.ok = true;
    r.meas = {acc + offsets_.at(corner)};
    return r;
  }

 private:
  std::vector<double> offsets_;
};

}  // namespace test_helpers
