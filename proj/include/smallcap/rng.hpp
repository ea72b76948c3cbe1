#pragma once
// Counter-based splittable RNG.  Every draw is a pure function of
// (seed, stream tag, counter), so results never depend on call order,
// thread count, or how work is partitioned across workers.

#include <cstdint>
#include <cmath>
#include <string_view>

namespace smallcap {

namespace detail {
// SplitMix64 finalizer (Stafford mix13).
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

// FNV-1a, used to turn purpose strings into stream tags.
constexpr std::uint64_t stream_tag(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t tag) : base_(derive(seed, tag)) {}
  CounterRng(std::uint64_t seed, std::string_view purpose)
      : CounterRng(seed, stream_tag(purpose)) {}

  std::uint64_t bits(std::uint64_t counter) const {
    return detail::mix64(base_ ^ detail::mix64(counter));
  }

  // Uniform in [0, 1).
  double uniform(std::uint64_t counter) const {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  double uniform(std::uint64_t counter, double lo, double hi) const {
    return lo + (hi - lo) * uniform(counter);
  }

  // Uniform integer in [0, m).
  std::uint64_t below(std::uint64_t counter, std::uint64_t m) const {
    return bits(counter) % m;
  }

  // Standard normal (Box-Muller on two decorrelated counters).
  double normal(std::uint64_t counter) const {
    double u1 = uniform(2 * counter);
    double u2 = uniform(2 * counter + 1);
    if (u1 < 0x1.0p-60) u1 = 0x1.0p-60;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  // Child generator for a sub-task; independent of the parent's counters.
  CounterRng split(std::uint64_t key) const {
    CounterRng c = *this;
    c.base_ = detail::mix64(base_ + 0x632be59bd9b4e019ULL * (key + 1));
    return c;
  }

 private:
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t tag) {
    return detail::mix64(detail::mix64(seed) ^ tag);
  }
  std::uint64_t base_;
};

}  // namespace smallcap
