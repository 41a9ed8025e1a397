#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace dimg {

// Counter-based pseudo-random generator.  The k-th output is a pure function
// of (seed, stream, k), so sequences are reproducible bit-for-bit on any
// platform and independent substreams can be derived without sharing state.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix(seed ^ 0x6a09e667f3bcc909ull) ^ mix(~stream * 0x100000001b3ull)),
        counter_(0) {}

  std::uint64_t next_u64() {
    return mix(key_ + (++counter_) * 0x9e3779b97f4a7c15ull);
  }

  // Uniform in [0, 1) with 53 bits of resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Uniform integer in [0, n).
  int uniform_int(int n) {
    if (n <= 0) throw std::domain_error("uniform_int: n must be positive");
    return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n));
  }

  // Index drawn with probability proportional to the (nonnegative) weights.
  int categorical(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (total <= 0.0) throw std::domain_error("categorical: weights sum to zero");
    double u = next_double() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc && weights[i] > 0.0) return static_cast<int>(i);
    }
    // Fall through on rounding: return the last positive-weight index.
    for (std::size_t i = weights.size(); i-- > 0;)
      if (weights[i] > 0.0) return static_cast<int>(i);
    throw std::domain_error("categorical: no positive weight");
  }

  // Random point on the probability simplex of dimension n (flat density).
  std::vector<double> simplex_point(int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    double total = 0.0;
    for (auto& x : v) {
      double u = next_double();
      if (u <= 0.0) u = 0x1.0p-53;
      x = -std::log(u);
      total += x;
    }
    for (auto& x : v) x /= total;
    return v;
  }

  // Derived generator whose outputs are independent of this one's.
  CounterRng substream(std::uint64_t k) const {
    return CounterRng(key_, k + 1);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace dimg
