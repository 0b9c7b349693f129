#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>

#include "svnn/linalg.hpp"

namespace svnn {

/// Counter-based generator (Philox4x32-10). The 64-bit seed is the key and the
/// 64-bit stream id occupies the upper half of the counter, so every
/// (seed, stream) pair owns a disjoint, platform-independent sequence.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  /// Independent child stream, derived deterministically from this stream id
  /// and `id`. Does not consume draws from *this.
  RandomSource substream(std::uint64_t id) const;

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal();
  bool bernoulli(double p);
  /// Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  std::optional<double> cached_normal_;
};

/// n i.i.d. N(0,1) draws.
Vector standard_normal(RandomSource& rng, std::size_t n);

}  // namespace svnn
