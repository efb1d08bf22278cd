#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace centroidlab {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// The 64-bit key is the master seed; the upper half of the 128-bit counter is
/// the stream index and the lower half counts blocks within the stream, so
/// every (seed, stream) pair addresses a disjoint sequence.
class Philox4x32 {
 public:
  using result_type = std::uint64_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox4x32(std::uint64_t seed, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (cursor_ == 2) refill();
    const std::uint64_t lo = buffer_[2 * cursor_];
    const std::uint64_t hi = buffer_[2 * cursor_ + 1];
    ++cursor_;
    return lo | (hi << 32);
  }

  /// The raw ten-round bijection.
  static Block encrypt(Block counter, Key key) {
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * counter[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * counter[2];
      counter = {static_cast<std::uint32_t>(p1 >> 32) ^ counter[1] ^ key[0],
                 static_cast<std::uint32_t>(p1),
                 static_cast<std::uint32_t>(p0 >> 32) ^ counter[3] ^ key[1],
                 static_cast<std::uint32_t>(p0)};
    }
    return counter;
  }

 private:
  void refill() {
    const Block counter{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                        static_cast<std::uint32_t>(stream_),
                        static_cast<std::uint32_t>(stream_ >> 32)};
    buffer_ = encrypt(counter, key_);
    ++block_;
    cursor_ = 0;
  }

  Key key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  Block buffer_{};
  int cursor_ = 2;
};

/// Identifies one reproducible random stream.
struct RngStream {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_index = 0;

  Philox4x32 engine() const { return Philox4x32(master_seed, stream_index); }
};

/// Uniform integer in [0, bound) by Lemire's multiply-and-reject method.
template <class Urbg>
std::uint64_t uniform_below(Urbg& gen, std::uint64_t bound) {
  using u128 = unsigned __int128;
  u128 product = static_cast<u128>(gen()) * bound;
  auto low = static_cast<std::uint64_t>(product);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      product = static_cast<u128>(gen()) * bound;
      low = static_cast<std::uint64_t>(product);
    }
  }
  return static_cast<std::uint64_t>(product >> 64);
}

/// Uniform double in [0, 1) with 53 random bits.
template <class Urbg>
double uniform_unit(Urbg& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

}  // namespace centroidlab
