#include "trsearch/trust_region.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace trsearch {

namespace {
constexpr double kPredFloor = 1e-12;  // predicted improvements below this count as zero
}

void TrConstants::validate() const {
  auto fail = [](const char* msg) { throw std::logic_error(std::string("trust region: ") + msg); };
  if (!(0.0 < eta_accept)) fail("eta_accept must be > 0");
  if (!(eta_accept <= eta_shrink)) fail("eta_accept must be <= eta_shrink");
  if (!(eta_shrink < eta_expand)) fail("eta_shrink must be < eta_expand");
  if (!(0.0 < gamma_shrink && gamma_shrink < 1.0)) fail("gamma_shrink must be in (0,1)");
  if (!(gamma_expand > 1.0)) fail("gamma_expand must be > 1");
  if (!(0.0 < dr_min)) fail("dr_min must be > 0");
  if (!(dr_min <= dr_init)) fail("dr_min must be <= dr_init");
  if (!(dr_init <= dr_max)) fail("dr_init must be <= dr_max");
  if (!(dr_max <= 1.0)) fail("dr_max must be <= 1");
}

double default_dr_min(const ProblemSpec& p) {
  std::size_t longest = 1;
  for (const auto& v : p.variables) longest = std::max(longest, v.grid.size());
  return 1.0 / (2.0 * static_cast<double>(longest));
}

TrustRegionState make_tr_state(std::vector<double> center, double incumbent_value,
                               const TrConstants& constants) {
  constants.validate();
  TrustRegionState st;
  st.center = std::move(center);
  st.radius = constants.dr_init;
  st.incumbent_value = incumbent_value;
  st.constants = constants;
  return st;
}

Eigen::MatrixXd sample_region(const TrustRegionState& st, const ProblemSpec& p, int m,
                              std::mt19937_64& rng) {
  const std::size_t n = p.var_count();
  if (st.center.size() != n)
    throw std::logic_error("trust region: center arity does not match problem");
  Eigen::MatrixXd samples(m, static_cast<Eigen::Index>(n));
  std::vector<double> point(n);
  for (int row = 0; row < m; ++row) {
    for (std::size_t j = 0; j < n; ++j) {
      double lo = std::max(0.0, st.center[j] - st.radius);
      double hi = std::min(1.0, st.center[j] + st.radius);
      point[j] = std::uniform_real_distribution<double>(lo, hi)(rng);
    }
    // Snap onto the grid so predicted values are only ever asked for
    // points the environment could actually be handed.
    std::vector<double> snapped = normalize(denormalize(point, p), p);
    for (std::size_t j = 0; j < n; ++j) samples(row, static_cast<Eigen::Index>(j)) = snapped[j];
  }
  return samples;
}

Subproblem solve_subproblem(const TrustRegionState& st, const ProblemSpec& p,
                            const std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>& batch_value,
                            int m, std::mt19937_64& rng) {
  if (m < 1) throw std::logic_error("trust region: sample count must be >= 1");
  Eigen::MatrixXd samples = sample_region(st, p, m, rng);
  Eigen::VectorXd values = batch_value(samples);
  if (values.size() != samples.rows())
    throw std::logic_error("trust region: batch value function returned wrong arity");
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < values.size(); ++i)
    if (values(i) > values(best)) best = i;
  Subproblem out;
  out.unit.resize(p.var_count());
  for (std::size_t j = 0; j < p.var_count(); ++j)
    out.unit[j] = samples(best, static_cast<Eigen::Index>(j));
  out.candidate = denormalize(out.unit, p);
  out.predicted_value = values(best);
  return out;
}

double reduction_ratio(const TrustRegionState& st, double predicted_trial, double true_trial) {
  if (!std::isfinite(st.incumbent_value)) {
    // The incumbent never produced a usable value (e.g. a failed corner during
    // bootstrap). Any finite trial beats it outright; another failure does not.
    return std::isfinite(true_trial) ? 1.0 : 0.0;
  }
  double predicted_gain = predicted_trial - st.incumbent_value;
  if (!(predicted_gain > kPredFloor)) return 0.0;
  if (!std::isfinite(true_trial)) return -1.0;  // failed trial: firmly rejected
  return (true_trial - st.incumbent_value) / predicted_gain;
}

TrUpdate update(const TrustRegionState& st, double rho, std::span<const double> trial_unit,
                double true_trial) {
  TrUpdate out;
  out.state = st;
  out.accepted = rho > st.constants.eta_accept;
  if (out.accepted) {
    out.state.center.assign(trial_unit.begin(), trial_unit.end());
    out.state.incumbent_value = true_trial;
  }
  if (rho > st.constants.eta_expand)
    out.state.radius = std::min(st.radius * st.constants.gamma_expand, st.constants.dr_max);
  else if (rho < st.constants.eta_shrink)
    out.state.radius = std::max(st.radius * st.constants.gamma_shrink, st.constants.dr_min);
  return out;
}

}  // namespace trsearch
