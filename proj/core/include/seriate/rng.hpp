#pragma once

#include <array>
#include <cstdint>

namespace seriate {

// Philox4x32-10 counter-based generator (Salmon et al., "Parallel random
// numbers: as easy as 1, 2, 3").  Chosen because sampled corpora must be
// bit-reproducible across platforms and generator streams must be splittable
// per instance/step without coordination.
//
// Byte-level behavior, fixed for all time:
//   * state is a 128-bit counter (four little-endian u32 words) and a 64-bit
//     key (two u32 words);
//   * block(counter, key) applies 10 Philox rounds with multipliers
//     0xD2511F53, 0xCD9E8D57 and Weyl constants 0x9E3779B9, 0xBB67AE85,
//     yielding four u32 outputs;
//   * next_u32 consumes the block words in order 0,1,2,3, then increments the
//     counter (word 0 first, carrying upward);
//   * next_u64 = lo32 | hi32<<32 from two consecutive next_u32 draws;
//   * uniform() = next_u64 >> 11, scaled by 2^-53 (in [0,1));
//   * split(i) derives an independent stream: child key words come from the
//     parent block evaluated at counter {i_lo, i_hi, 0x5EED5EED, 0x0DDC0FFE}
//     with the parent's key; the child counter starts at zero.
class Philox {
public:
  explicit Philox(std::uint64_t seed) noexcept
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32)} {}

  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key) noexcept {
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = 0xD2511F53ull * ctr[0];
      const std::uint64_t p2 = 0xCD9E8D57ull * ctr[2];
      const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      const std::uint32_t hi2 = static_cast<std::uint32_t>(p2 >> 32);
      const std::uint32_t lo2 = static_cast<std::uint32_t>(p2);
      ctr = {hi2 ^ ctr[1] ^ key[0], lo2, hi0 ^ ctr[3] ^ key[1], lo0};
      key[0] += 0x9E3779B9u;
      key[1] += 0xBB67AE85u;
    }
    return ctr;
  }

  std::uint32_t next_u32() noexcept {
    if (block_pos_ == 4) {
      buffer_ = block(counter_, key_);
      block_pos_ = 0;
      bump_counter();
    }
    return buffer_[block_pos_++];
  }

  std::uint64_t next_u64() noexcept {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return lo | (hi << 32);
  }

  // 53-bit uniform in [0, 1).
  double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n); n > 0.  Rejection-free modulo is acceptable
  // here only because n is tiny relative to 2^64 in every call site; keep the
  // unbiased ladder anyway since corpora freeze on exact draws.
  std::uint64_t below(std::uint64_t n) noexcept {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t v = next_u64();
      if (v >= threshold) return v % n;
    }
  }

  // Independent child stream; deterministic function of (parent key, index).
  Philox split(std::uint64_t index) const noexcept {
    const std::array<std::uint32_t, 4> out =
        block({static_cast<std::uint32_t>(index),
               static_cast<std::uint32_t>(index >> 32), 0x5EED5EEDu, 0x0DDC0FFEu},
              key_);
    Philox child(0);
    child.key_ = {out[0], out[1]};
    return child;
  }

private:
  void bump_counter() noexcept {
    for (auto& word : counter_) {
      if (++word != 0) break;
    }
  }

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_{0, 0, 0, 0};
  std::array<std::uint32_t, 4> buffer_{};
  int block_pos_ = 4;
};

}  // namespace seriate
