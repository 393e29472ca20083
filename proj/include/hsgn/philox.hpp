#pragma once

// Philox4x64-10 counter-based generator (Salmon et al., "Parallel random
// numbers: as easy as 1, 2, 3"). Output is a pure function of (key, counter),
// so any stream position can be reached directly and streams split by key.

#include <array>
#include <cstdint>

namespace hsgn {

struct Philox4x64 {
  using Counter = std::array<std::uint64_t, 4>;
  using Key = std::array<std::uint64_t, 2>;

  static constexpr const char* kName = "philox4x64-10";
  static constexpr int kVersion = 1;

  static Counter block(Counter ctr, Key key) {
    constexpr std::uint64_t kM0 = 0xD2E7470EE14C6C93ULL;
    constexpr std::uint64_t kM1 = 0xCA5A826395121157ULL;
    constexpr std::uint64_t kW0 = 0x9E3779B97F4A7C15ULL;
    constexpr std::uint64_t kW1 = 0xBB67AE8584CAA73BULL;
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kW0;
        key[1] += kW1;
      }
      const auto p0 = static_cast<unsigned __int128>(kM0) * ctr[0];
      const auto p1 = static_cast<unsigned __int128>(kM1) * ctr[2];
      const auto hi0 = static_cast<std::uint64_t>(p0 >> 64);
      const auto lo0 = static_cast<std::uint64_t>(p0);
      const auto hi1 = static_cast<std::uint64_t>(p1 >> 64);
      const auto lo1 = static_cast<std::uint64_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }
};

// Uniform double in [0, 1) from the top 53 bits.
inline double to_unit(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

// Stream of uniforms for one logical item (e.g. one prime) of one experiment.
class PhiloxStream {
 public:
  PhiloxStream(std::uint64_t seed, std::uint64_t stream, std::uint64_t item)
      : key_{seed, stream}, item_(item) {}

  std::uint64_t next_u64() {
    if (pos_ == 4) {
      buf_ = Philox4x64::block({item_, block_++, 0, 0}, key_);
      pos_ = 0;
    }
    return buf_[pos_++];
  }

  double next_unit() { return to_unit(next_u64()); }

 private:
  Philox4x64::Key key_;
  std::uint64_t item_;
  std::uint64_t block_ = 0;
  Philox4x64::Counter buf_{};
  int pos_ = 4;
};

}  // namespace hsgn
