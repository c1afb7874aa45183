#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace marcus {

// SplitMix64 finalizer. Used both as the key-derivation hash and as the
// output function of the counter generator below.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent random substreams of a single path.
enum class Substream : std::uint64_t {
  brownian = 1,
  levy = 2,
  bridge = 3,
  probe = 4,
  exact = 5,
};

/// Derives the key of the substream (seed, path, step, substream). Every
/// random quantity in the library is a pure function of such a key, so
/// results do not depend on the order in which paths are processed.
constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t path,
                                   std::uint64_t step,
                                   Substream substream) noexcept {
  std::uint64_t k = splitmix64(seed ^ 0x6a09e667f3bcc909ULL);
  k = splitmix64(k + 0xbb67ae8584caa73bULL * (path + 1));
  k = splitmix64(k + 0x3c6ef372fe94f82bULL * (step + 1));
  k = splitmix64(k + 0xa54ff53a5f1d36f1ULL *
                         (static_cast<std::uint64_t>(substream) + 1));
  return k;
}

/// Counter-based generator: the n-th output is splitmix64(key + n * gamma).
/// Satisfies UniformRandomBitGenerator, so it plugs into <random>
/// distributions.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(key) {}
  CounterRng(std::uint64_t seed, std::uint64_t path, std::uint64_t step,
             Substream substream) noexcept
      : key_(stream_key(seed, path, step, substream)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() noexcept {
    return splitmix64(key_ + 0x9e3779b97f4a7c15ULL * counter_++);
  }

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Standard normal pair from two uniforms (Box-Muller).
struct NormalPair {
  double first;
  double second;
};

inline NormalPair box_muller(CounterRng& rng) noexcept {
  const double u1 = rng.uniform();
  const double u2 = rng.uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(angle), r * std::sin(angle)};
}

inline double standard_normal(CounterRng& rng) noexcept {
  return box_muller(rng).first;
}

/// Random-access standard normal number `index` of a keyed sequence. Two
/// consecutive indices share one Box-Muller pair.
inline double indexed_normal(std::uint64_t seed, std::uint64_t path,
                             std::uint64_t index, Substream substream) noexcept {
  CounterRng rng(seed, path, index / 2, substream);
  const NormalPair p = box_muller(rng);
  return (index % 2 == 0) ? p.first : p.second;
}

}  // namespace marcus
