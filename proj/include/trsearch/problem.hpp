#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "trsearch/util.hpp"

namespace trsearch {

// Raised for malformed configs and malformed problem definitions alike.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg, int line = 0)
      : std::runtime_error(line > 0 ? "config error (line " + std::to_string(line) + "): " + msg
                                    : "config error: " + msg),
        message_(msg),
        line_(line) {}
  // The bare message, for call sites that re-raise with a line number.
  const std::string& message() const { return message_; }
  int line() const { return line_; }

 private:
  std::string message_;
  int line_;
};

// One search variable: an ordered, strictly increasing grid of raw values.
// The search itself works in [0,1]^n; the grid is the only place raw units
// (meters, farads, amps) appear.
struct Variable {
  std::string name;
  std::vector<double> grid;

  bool operator==(const Variable&) const = default;
};

// A point in the design space, one grid index per variable.
struct Sizing {
  std::vector<int> idx;

  bool operator==(const Sizing&) const = default;
};

// Environment parameters for one operating condition. Values are numbers
// (supply voltage, a process constant) or strings (a model-file section).
using CornerParam = std::variant<double, std::string>;

struct Corner {
  std::string name;
  std::vector<std::pair<std::string, CornerParam>> params;  // insertion order

  const CornerParam* find(std::string_view key) const;
  double number_or(std::string_view key, double fallback) const;

  bool operator==(const Corner&) const = default;
};

enum class Direction { AtLeast, AtMost };

// One inequality a measurement must satisfy at one corner. `scale` makes
// margins from different measurements comparable; it defaults to
// max(|threshold|, 1e-9) when a config does not set it.
struct ConstraintSpec {
  std::string measurement;
  std::size_t meas_index = 0;  // position in ProblemSpec::measurements
  Direction direction = Direction::AtLeast;
  double threshold = 0.0;
  double scale = 1.0;

  bool operator==(const ConstraintSpec&) const = default;
};

// The full constraint-satisfaction problem: variables with their grids, the
// corner pool, per-corner constraints, and the evaluation budget. The
// measurement name list is the single schema shared by environments,
// constraints and surrogates; everything else refers to it by index.
struct ProblemSpec {
  std::vector<Variable> variables;
  std::vector<std::string> measurements;
  std::vector<Corner> corners;
  std::vector<std::vector<ConstraintSpec>> constraints;  // [corner][...]
  long long budget = 10000;
  int escape_patience = 20;

  std::size_t var_count() const { return variables.size(); }
  std::size_t corner_index(std::string_view name) const;  // throws ConfigError
  std::size_t measurement_index(std::string_view name) const;

  // Checks every structural invariant (unique names, increasing grids,
  // positive scales, resolved measurement indices, ...). Throws ConfigError.
  void validate() const;

  bool operator==(const ProblemSpec&) const = default;
};

// Index point -> [0,1]^n. Single-point grids map to 0.
std::vector<double> normalize(const Sizing& s, const ProblemSpec& p);

// [0,1]^n -> nearest grid point, rounding half up, clamped to the grid.
Sizing denormalize(std::span<const double> u, const ProblemSpec& p);

// Exact number of grid points in the space.
BigUint space_size(const ProblemSpec& p);

// Raw grid value of variable `var` at sizing `s`.
double raw_value(const ProblemSpec& p, const Sizing& s, std::size_t var);

// Throws ConfigError if s has the wrong arity or an index is out of range.
void check_sizing(const Sizing& s, const ProblemSpec& p);

}  // namespace trsearch
