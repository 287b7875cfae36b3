#pragma once

#include <array>
#include <cstdint>

namespace freeent {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
///
/// A block is a pure function of a 64-bit key and a 128-bit counter, so any
/// position of any stream can be reproduced without replaying the stream.
/// Layout used throughout the library:
///   key     = (seed & 0xffffffff, seed >> 32)
///   counter = (index & 0xffffffff, index >> 32, stream & 0xffffffff, stream >> 32)
/// Each block yields four 32-bit words, consumed as two 64-bit values
/// (word0 | word1 << 32, word2 | word3 << 32).
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Block generate(const Block& counter, const Key& key);
};

/// Sequential view of one Philox stream.
///
/// uniform(): (u64 >> 11) * 2^-53 + 2^-54, so the value lies strictly inside (0, 1).
/// normal():  Box-Muller on two consecutive uniforms u1, u2:
///            r = sqrt(-2 log u1); returns r cos(2 pi u2), then r sin(2 pi u2).
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();
  double uniform();
  double normal();
  /// Uniform integer in [0, bound), unbiased by rejection.
  std::uint64_t below(std::uint64_t bound);

 private:
  Philox4x32::Key key_;
  std::uint64_t stream_;
  std::uint64_t index_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace freeent
