#include "trsearch/problem.hpp"

#include <cmath>
#include <set>

namespace trsearch {

const CornerParam* Corner::find(std::string_view key) const {
  for (const auto& [k, v] : params)
    if (k == key) return &v;
  return nullptr;
}

double Corner::number_or(std::string_view key, double fallback) const {
  const CornerParam* p = find(key);
  if (!p) return fallback;
  if (const double* d = std::get_if<double>(p)) return *d;
  throw ConfigError("corner '" + name + "' parameter '" + std::string(key) +
                    "' is a string, expected a number");
}

std::size_t ProblemSpec::corner_index(std::string_view name) const {
  for (std::size_t i = 0; i < corners.size(); ++i)
    if (corners[i].name == name) return i;
  std::string known;
  for (const auto& c : corners) known += (known.empty() ? "" : ", ") + c.name;
  throw ConfigError("unknown corner '" + std::string(name) + "' (have: " + known + ")");
}

std::size_t ProblemSpec::measurement_index(std::string_view name) const {
  for (std::size_t i = 0; i < measurements.size(); ++i)
    if (measurements[i] == name) return i;
  std::string known;
  for (const auto& m : measurements) known += (known.empty() ? "" : ", ") + m;
  throw ConfigError("unknown measurement '" + std::string(name) + "' (have: " + known + ")");
}

void ProblemSpec::validate() const {
  if (variables.empty()) throw ConfigError("no variables defined");
  if (measurements.empty()) throw ConfigError("no measurements defined");
  if (corners.empty()) throw ConfigError("no corners defined");
  if (budget < 1) throw ConfigError("budget must be >= 1");
  if (escape_patience < 1) throw ConfigError("escape_patience must be >= 1");

  std::set<std::string> seen;
  for (const auto& v : variables) {
    if (v.name.empty()) throw ConfigError("variable with empty name");
    if (!seen.insert(v.name).second)
      throw ConfigError("duplicate variable name '" + v.name + "'");
    if (v.grid.empty()) throw ConfigError("variable '" + v.name + "' has an empty grid");
    for (std::size_t i = 0; i < v.grid.size(); ++i) {
      if (!std::isfinite(v.grid[i]))
        throw ConfigError("variable '" + v.name + "' has a non-finite grid value");
      if (i > 0 && !(v.grid[i - 1] < v.grid[i]))
        throw ConfigError("variable '" + v.name + "' grid is not strictly increasing at index " +
                          std::to_string(i));
    }
  }

  seen.clear();
  for (const auto& m : measurements)
    if (!seen.insert(m).second) throw ConfigError("duplicate measurement name '" + m + "'");

  seen.clear();
  for (const auto& c : corners) {
    if (c.name.empty()) throw ConfigError("corner with empty name");
    if (!seen.insert(c.name).second) throw ConfigError("duplicate corner name '" + c.name + "'");
  }

  if (constraints.size() != corners.size())
    throw ConfigError("constraint table has " + std::to_string(constraints.size()) +
                      " corner entries, expected " + std::to_string(corners.size()));
  for (std::size_t ci = 0; ci < corners.size(); ++ci) {
    if (constraints[ci].empty())
      throw ConfigError("corner '" + corners[ci].name + "' has no constraints");
    for (const auto& cs : constraints[ci]) {
      if (cs.meas_index >= measurements.size() || measurements[cs.meas_index] != cs.measurement)
        throw ConfigError("constraint on '" + cs.measurement + "' at corner '" +
                          corners[ci].name + "' does not match a declared measurement");
      if (!(cs.scale > 0.0) || !std::isfinite(cs.scale))
        throw ConfigError("constraint on '" + cs.measurement + "' at corner '" +
                          corners[ci].name + "' has non-positive scale");
      if (!std::isfinite(cs.threshold))
        throw ConfigError("constraint on '" + cs.measurement + "' at corner '" +
                          corners[ci].name + "' has non-finite threshold");
    }
  }
}

void check_sizing(const Sizing& s, const ProblemSpec& p) {
  if (s.idx.size() != p.variables.size())
    throw ConfigError("sizing has " + std::to_string(s.idx.size()) + " indices, problem has " +
                      std::to_string(p.variables.size()) + " variables");
  for (std::size_t i = 0; i < s.idx.size(); ++i) {
    int n = static_cast<int>(p.variables[i].grid.size());
    if (s.idx[i] < 0 || s.idx[i] >= n)
      throw ConfigError("sizing index " + std::to_string(s.idx[i]) + " out of range for variable '" +
                        p.variables[i].name + "' (grid size " + std::to_string(n) + ")");
  }
}

std::vector<double> normalize(const Sizing& s, const ProblemSpec& p) {
  check_sizing(s, p);
  std::vector<double> u(s.idx.size());
  for (std::size_t i = 0; i < s.idx.size(); ++i) {
    std::size_t n = p.variables[i].grid.size();
    u[i] = n <= 1 ? 0.0 : static_cast<double>(s.idx[i]) / static_cast<double>(n - 1);
  }
  return u;
}

Sizing denormalize(std::span<const double> u, const ProblemSpec& p) {
  if (u.size() != p.variables.size())
    throw ConfigError("unit point has " + std::to_string(u.size()) + " coordinates, problem has " +
                      std::to_string(p.variables.size()) + " variables");
  Sizing s;
  s.idx.resize(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    int n = static_cast<int>(p.variables[i].grid.size());
    // Round half up, then clamp; out-of-range inputs land on the edge.
    int k = static_cast<int>(std::floor(u[i] * (n - 1) + 0.5));
    if (k < 0) k = 0;
    if (k > n - 1) k = n - 1;
    s.idx[i] = k;
  }
  return s;
}

BigUint space_size(const ProblemSpec& p) {
  BigUint total(1);
  for (const auto& v : p.variables) total *= static_cast<std::uint32_t>(v.grid.size());
  return total;
}

double raw_value(const ProblemSpec& p, const Sizing& s, std::size_t var) {
  return p.variables[var].grid[static_cast<std::size_t>(s.idx[var])];
}

}  // namespace trsearch
