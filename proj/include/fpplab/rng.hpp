#pragma once

// Counter-based random streams.
//
// Every stream is addressed by (seed, replica, substream). The generator is
// Philox4x32-10: the 64-bit key comes from (seed, substream), the 128-bit
// counter is (position, replica). Streams with different replica indices
// therefore draw from disjoint counter ranges of the same keyed permutation.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>

namespace fpplab {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
class Philox4x32 {
 public:
  using result_type = std::uint64_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  Philox4x32(std::uint64_t key, std::uint64_t stream_hi)
      : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)},
        stream_hi_(stream_hi) {}

  static Block encrypt(Block ctr, Key key) {
    constexpr std::uint32_t M0 = 0xD2511F53, M1 = 0xCD9E8D57;
    constexpr std::uint32_t W0 = 0x9E3779B9, W1 = 0xBB67AE85;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
      key[0] += W0;
      key[1] += W1;
    }
    return ctr;
  }

  result_type operator()() {
    if (have_ == 0) {
      const Block ctr{static_cast<std::uint32_t>(position_), static_cast<std::uint32_t>(position_ >> 32),
                      static_cast<std::uint32_t>(stream_hi_),
                      static_cast<std::uint32_t>(stream_hi_ >> 32)};
      buffer_ = encrypt(ctr, key_);
      ++position_;
      have_ = 2;
    }
    const int i = 2 - have_;
    --have_;
    return (static_cast<std::uint64_t>(buffer_[2 * i]) << 32) | buffer_[2 * i + 1];
  }

  void discard(std::uint64_t n) {
    for (; n > 0; --n) (*this)();
  }

 private:
  Key key_;
  std::uint64_t stream_hi_;
  std::uint64_t position_ = 0;
  Block buffer_{};
  int have_ = 0;
};

/// Address of an independent random stream.
struct RngStream {
  static constexpr const char* kAlgorithm = "philox4x32-10";

  std::uint64_t seed = 0;
  std::uint64_t replica = 0;
  std::uint64_t substream = 0;

  RngStream with_replica(std::uint64_t r) const { return {seed, r, substream}; }
  RngStream with_substream(std::uint64_t s) const { return {seed, replica, s}; }

  std::string algorithm() const { return kAlgorithm; }
};

/// Draws uniforms, normals and other variates from one stream.
class RandomSource {
 public:
  explicit RandomSource(const RngStream& s)
      : engine_(splitmix64(s.seed ^ splitmix64(s.substream + 0x5851f42d4c957f2dULL)), s.replica) {}

  Philox4x32& engine() { return engine_; }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_pos() { return 1.0 - uniform(); }

  /// Standard normal by Box–Muller; pairs are cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
    const double angle = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(angle);
    has_spare_ = true;
    return r * std::cos(angle);
  }

  double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t uniform_int(std::uint64_t n) {
    std::uniform_int_distribution<std::uint64_t> dist(0, n - 1);
    return dist(engine_);
  }

  std::int64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    std::poisson_distribution<std::int64_t> dist(mean);
    return dist(engine_);
  }

 private:
  Philox4x32 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace fpplab
