#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "trsearch/problem.hpp"

namespace trsearch {

using Measurements = std::vector<double>;

// Scaled slack of one measurement against one constraint. Positive when the
// constraint holds with room to spare, negative when violated.
inline double margin(double meas_value, const ConstraintSpec& c) {
  double raw = c.direction == Direction::AtLeast ? meas_value - c.threshold
                                                 : c.threshold - meas_value;
  return raw / c.scale;
}

inline double margin(const Measurements& m, const ConstraintSpec& c) {
  return margin(m[c.meas_index], c);
}

// Merit of a measurement vector at one corner: the sum of clamped margins,
// counting only violations. Always <= 0, and 0 exactly when every
// constraint holds, so "satisfied" and "value == 0" are the same test.
inline double value_of(const Measurements& m, std::span<const ConstraintSpec> cs) {
  double v = 0.0;
  for (const auto& c : cs) v += std::min(margin(m, c), 0.0);
  return v;
}

inline bool is_satisfied(const Measurements& m, std::span<const ConstraintSpec> cs) {
  for (const auto& c : cs)
    if (margin(m, c) < 0.0) return false;
  return true;
}

}  // namespace trsearch
