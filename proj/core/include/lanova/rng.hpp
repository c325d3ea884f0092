#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace lanova {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// The 64-bit seed is the key; the 64-bit stream id occupies the upper half
/// of the counter, so every (seed, stream) pair is an independent substream
/// that can be created in O(1) without advancing any shared state.
/// Satisfies UniformRandomBitGenerator with 64-bit outputs.
class Philox4x32 {
 public:
  using result_type = std::uint64_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox4x32(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Skips `n` outputs.
  void discard(std::uint64_t n);

  /// One application of the 10-round bijection.
  static Block bijection(Block counter, Key key);

 private:
  void refill();

  Key key_;
  std::uint64_t stream_;
  std::uint64_t block_index_ = 0;
  Block buffer_{};
  unsigned used_ = 4;  // 64-bit words consumed from buffer_ (0, 1 or 2); 4 forces refill
};

}  // namespace lanova
