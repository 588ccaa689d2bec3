#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace trsearch {

// Unsigned big integer, just large enough to count design-space points
// exactly. Grids of 100+ points over 8+ variables overflow uint64 routinely,
// and reporting "1.2e13" when the real count matters is not acceptable.
class BigUint {
 public:
  BigUint() : limbs_{0} {}
  explicit BigUint(std::uint64_t v);

  BigUint& operator*=(std::uint32_t factor);

  // Decimal digits, no separators.
  std::string to_string() const;
  // Approximate magnitude for log lines; exact below 2^53.
  double to_double() const;

  bool operator==(const BigUint&) const = default;

 private:
  void trim();
  std::vector<std::uint32_t> limbs_;  // base 2^32, least significant first
};

// splitmix64 step; used to derive independent seed streams from one base
// seed so that per-corner / per-restart RNGs never share state.
std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

// FNV-1a, used to fingerprint canonical config text.
std::uint64_t fnv1a64(std::string_view data);

// Round-trippable decimal form (%.17g); used everywhere a double crosses a
// text boundary so re-parsing reproduces the exact bits.
std::string format_double(double v);
std::string format_hex64(std::uint64_t v);

}  // namespace trsearch
