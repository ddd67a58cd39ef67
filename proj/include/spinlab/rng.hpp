// Counter-based random streams (Philox4x32-10).
//
// Every stream is a pure function of (master seed, stream id, draw counter),
// so trajectories can be farmed out to any number of workers and still
// produce bit-identical draws.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace spinlab {

namespace detail {

inline void philox_mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                           std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace detail

struct Philox4x32 {
  static constexpr std::uint32_t kMult0 = 0xD2511F53u;
  static constexpr std::uint32_t kMult1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter round(const Counter& c, const Key& k) {
    std::uint32_t hi0, lo0, hi1, lo1;
    detail::philox_mulhilo(kMult0, c[0], hi0, lo0);
    detail::philox_mulhilo(kMult1, c[2], hi1, lo1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }

  static Counter generate(Counter c, Key k) {
    for (int i = 0; i < 10; ++i) {
      if (i > 0) {
        k[0] += kWeyl0;
        k[1] += kWeyl1;
      }
      c = round(c, k);
    }
    return c;
  }
};

// One logical random stream. Draws are consumed sequentially; the block
// index is the high half of the counter, the stream id the low half.
class CounterRng {
 public:
  CounterRng(std::uint64_t master_seed, std::uint64_t stream_id)
      : key_{static_cast<std::uint32_t>(master_seed),
             static_cast<std::uint32_t>(master_seed >> 32)},
        stream_(stream_id) {}

  std::uint32_t next_u32() {
    if (buf_pos_ == 4) refill();
    return buf_[buf_pos_++];
  }

  // Uniform on [0, 1).
  double uniform() { return next_u32() * 0x1.0p-32; }

  // Uniform on (0, 1]; safe as a log() argument.
  double uniform_oc() { return (static_cast<double>(next_u32()) + 1.0) * 0x1.0p-32; }

  // Standard normal via Box-Muller; consumes two uniforms per pair.
  double gaussian() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = uniform_oc();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.28318530717958647692 * u2;
    cached_ = radius * std::sin(angle);
    have_cached_ = true;
    return radius * std::cos(angle);
  }

 private:
  void refill() {
    const Philox4x32::Counter ctr = {
        static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32),
        static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32)};
    buf_ = Philox4x32::generate(ctr, key_);
    ++block_;
    buf_pos_ = 0;
  }

  Philox4x32::Key key_;
  std::uint64_t stream_ = 0;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int buf_pos_ = 4;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace spinlab
