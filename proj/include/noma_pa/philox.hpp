#ifndef NOMA_PA_PHILOX_HPP
#define NOMA_PA_PHILOX_HPP

// Philox4x32-10 counter-based generator (Salmon et al., SC'11) and the
// keyed streams built on it. A stream is a pure function of
// (seed, stream id, substream id), so Monte Carlo trial t always sees the
// same numbers no matter which worker runs it.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace noma_pa {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

inline PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) {
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

/// Sequential view of one Philox stream. Satisfies
/// std::uniform_random_bit_generator.
class PhiloxStream {
 public:
  using result_type = std::uint32_t;

  PhiloxStream(std::uint64_t seed, std::uint64_t stream, std::uint32_t domain = 0)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_lo_(static_cast<std::uint32_t>(stream)),
        stream_hi_(static_cast<std::uint32_t>(stream >> 32)),
        domain_(domain) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (used_ == 4) {
      block_ = philox4x32_10({block_index_++, stream_lo_, stream_hi_, domain_}, key_);
      used_ = 0;
    }
    return block_[used_++];
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() {
    const std::uint64_t hi = (*this)();
    const std::uint64_t lo = (*this)();
    return static_cast<double>(((hi << 32) | lo) >> 11) * 0x1.0p-53;
  }

  /// Unit-mean exponential.
  double exponential() { return -std::log1p(-uniform()); }

  /// Pair of independent standard normals (Box-Muller).
  std::array<double, 2> normal_pair() {
    const double radius = std::sqrt(-2.0 * std::log1p(-uniform()));
    const double angle = 2.0 * std::numbers::pi * uniform();
    return {radius * std::cos(angle), radius * std::sin(angle)};
  }

 private:
  PhiloxKey key_;
  std::uint32_t stream_lo_;
  std::uint32_t stream_hi_;
  std::uint32_t domain_;
  std::uint32_t block_index_ = 0;
  PhiloxCounter block_{};
  int used_ = 4;
};

/// Stream domains keep independent uses of one seed apart.
enum class RngDomain : std::uint32_t { Trial = 0, Precoder = 1 };

inline PhiloxStream trial_stream(std::uint64_t seed, std::uint64_t trial) {
  return PhiloxStream(seed, trial, static_cast<std::uint32_t>(RngDomain::Trial));
}

}  // namespace noma_pa

#endif  // NOMA_PA_PHILOX_HPP
