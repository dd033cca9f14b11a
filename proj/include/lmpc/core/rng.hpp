#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace lmpc {

// Root of all randomness for a run. Streams are derived by hashing
// (master_seed, purpose tag, index tuple), so any unit of work can be handed
// its own statistically independent generator regardless of evaluation order
// or worker count.
struct SeedSpec {
  std::uint64_t master_seed = 0;
};

namespace detail {

// splitmix64 finalizer; good avalanche, cheap.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_tag(std::string_view tag) {
  // FNV-1a
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

// Sequential generator backed by mt19937_64. Draw order is part of the
// reproducibility contract: callers that share a stream must consume from it
// in a fixed order.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : gen_(seed) {}

  double uniform() { return unif_(gen_); }                     // [0,1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() { return norm_(gen_); }
  std::uint64_t bits() { return gen_(); }

  Vec normal_vec(int n) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = normal();
    return v;
  }

  Vec uniform_vec(int n, double lo, double hi) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = uniform(lo, hi);
    return v;
  }

 private:
  std::mt19937_64 gen_;
  std::normal_distribution<double> norm_{0.0, 1.0};
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
};

// Deterministic function of (master seed, tag, indices). Distinct tuples give
// streams that behave independently.
inline RandomStream derive_stream(const SeedSpec& spec, std::string_view tag,
                                  std::initializer_list<std::uint64_t> indices = {}) {
  std::uint64_t s = detail::mix64(spec.master_seed ^ detail::hash_tag(tag));
  for (std::uint64_t idx : indices) {
    s = detail::mix64(s + 0x9e3779b97f4a7c15ULL * (idx + 1));
  }
  return RandomStream(s);
}

}  // namespace lmpc
