#pragma once

#include <cstdint>

namespace multimarker {

/// Deterministic, counted random stream.
///
/// xoshiro256** seeded through splitmix64. The same seed always reproduces
/// the same draw sequence bit for bit; `position()` counts raw 64-bit draws.
/// `substream(k)` derives an independently seeded stream from (seed, k) so
/// chains, cross-validation folds and prediction targets can be run in
/// parallel without sharing state.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) noexcept;

  std::uint64_t next_u64() noexcept;

  /// Uniform draw strictly inside (0, 1); safe for inverse-CDF and log().
  double uniform() noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t position() const noexcept { return position_; }

  /// Independent stream derived from the ORIGINAL seed and a child index;
  /// unaffected by how many draws this stream has produced.
  RngStream substream(std::uint64_t child) const noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t position_;
  std::uint64_t s_[4];
};

}  // namespace multimarker
