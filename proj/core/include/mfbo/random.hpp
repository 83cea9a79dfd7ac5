#pragma once

#include <cstdint>
#include <random>

namespace mfbo {

/// Seedable random stream.
///
/// Backed by std::mt19937_64, whose output sequence is fixed by the C++
/// standard, so a given seed replays the same numbers on every conforming
/// platform. Real-valued draws are derived by hand (53-bit mantissa for
/// uniforms, Box-Muller for normals) instead of the <random> distributions,
/// whose algorithms are implementation-defined.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed = 0);

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on (0, 1); never returns exactly zero.
  double uniform_open();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal draw.
  double normal();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  /// Independent child stream keyed by `tag`; does not advance this stream.
  RandomStream derive(std::uint64_t tag) const;

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// SplitMix64 finalizer, used to decorrelate derived seeds.
std::uint64_t mix_seed(std::uint64_t x) noexcept;

}  // namespace mfbo
