#include "trsearch/util.hpp"

#include <cstdio>

namespace trsearch {

BigUint::BigUint(std::uint64_t v) {
  limbs_.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
  limbs_.push_back(static_cast<std::uint32_t>(v >> 32));
  trim();
}

void BigUint::trim() {
  while (limbs_.size() > 1 && limbs_.back() == 0) limbs_.pop_back();
}

BigUint& BigUint::operator*=(std::uint32_t factor) {
  std::uint64_t carry = 0;
  for (auto& limb : limbs_) {
    std::uint64_t cur = static_cast<std::uint64_t>(limb) * factor + carry;
    limb = static_cast<std::uint32_t>(cur & 0xffffffffu);
    carry = cur >> 32;
  }
  if (carry) limbs_.push_back(static_cast<std::uint32_t>(carry));
  trim();
  return *this;
}

std::string BigUint::to_string() const {
  // Repeated divmod by 1e9, collecting 9-digit groups.
  std::vector<std::uint32_t> work = limbs_;
  std::string out;
  auto is_zero = [&] {
    for (auto limb : work)
      if (limb) return false;
    return true;
  };
  if (is_zero()) return "0";
  std::vector<std::uint32_t> groups;
  while (!is_zero()) {
    std::uint64_t rem = 0;
    for (std::size_t i = work.size(); i-- > 0;) {
      std::uint64_t cur = (rem << 32) | work[i];
      work[i] = static_cast<std::uint32_t>(cur / 1000000000u);
      rem = cur % 1000000000u;
    }
    groups.push_back(static_cast<std::uint32_t>(rem));
    while (work.size() > 1 && work.back() == 0) work.pop_back();
  }
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%u", groups.back());
  out = buf;
  for (std::size_t i = groups.size() - 1; i-- > 0;) {
    std::snprintf(buf, sizeof(buf), "%09u", groups[i]);
    out += buf;
  }
  return out;
}

double BigUint::to_double() const {
  double acc = 0.0;
  for (std::size_t i = limbs_.size(); i-- > 0;) acc = acc * 4294967296.0 + limbs_[i];
  return acc;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t state = base;
  std::uint64_t first = splitmix64(state);
  state = first ^ (stream * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull);
  return splitmix64(state);
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  return hash;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace trsearch
