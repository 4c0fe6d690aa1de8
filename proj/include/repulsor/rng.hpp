#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace repulsor {

// Counter-based generator: the i-th output is mix64(key + i * GOLDEN), where
// mix64 is the splitmix64 finalizer and key is derived from (seed, stream
// name) by FNV-1a. Streams are independent by name, so adding a consumer
// (e.g. the projection-head initializer) never perturbs the draws seen by
// another stream. Platform-portable: integer arithmetic plus std::sqrt/log/
// cos on IEEE-754 doubles.
class Rng {
 public:
  Rng(uint64_t seed, std::string_view stream)
      : key_(fnv1a(stream) ^ mix64(seed + 0x9e3779b97f4a7c15ULL)) {}

  // Child stream independent of the parent and of its sibling names.
  Rng split(std::string_view name) const {
    Rng r = *this;
    r.key_ = fnv1a(name) ^ mix64(key_);
    r.counter_ = 0;
    r.has_spare_ = false;
    return r;
  }

  uint64_t next_u64() { return mix64(key_ + (counter_++) * 0x9e3779b97f4a7c15ULL); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // index in [0, n)
  uint64_t below(uint64_t n) { return next_u64() % n; }

  // Standard normal via Box-Muller; one spare is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform(), u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  static uint64_t mix64(uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
  }

  static uint64_t fnv1a(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
    return h;
  }

 private:
  uint64_t key_;
  uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace repulsor
