#pragma once

// Counter-based random numbers (Philox4x64-10).
//
// A stream is identified by a 128-bit key; the counter advances by one per
// block of four 64-bit outputs. Trajectory i of an experiment with master
// seed s uses key {s, i}, so streams are independent of thread scheduling.

#include <array>
#include <cstdint>
#include <limits>

namespace lampshuffler {

using PhiloxCounter = std::array<std::uint64_t, 4>;
using PhiloxKey = std::array<std::uint64_t, 2>;

PhiloxCounter philox4x64_10(PhiloxCounter ctr, PhiloxKey key);

class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng() = default;
  explicit CounterRng(PhiloxKey key, std::uint64_t block = 0) : key_(key), block_(block) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (pos_ == 4) refill();
    return buffer_[pos_++];
  }

  // Uniform on {0, ..., bound - 1}; bound > 0. Exact (rejection sampling).
  std::uint64_t below(std::uint64_t bound);
  // Uniform on (0, 1], multiples of 2^-53.
  double uniform_open0();
  // Uniform on [0, 1), multiples of 2^-53.
  double uniform01() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  PhiloxKey key() const { return key_; }
  // Number of 64-bit outputs consumed so far.
  std::uint64_t draws() const { return block_ * 4 - (4 - pos_); }

 private:
  void refill() {
    buffer_ = philox4x64_10({block_, 0, 0, 0}, key_);
    ++block_;
    pos_ = 0;
  }

  PhiloxKey key_{0, 0};
  std::uint64_t block_ = 0;
  PhiloxCounter buffer_{};
  int pos_ = 4;
};

// Stream for trajectory `index` of an experiment seeded with `master_seed`.
inline CounterRng trajectory_rng(std::uint64_t master_seed, std::uint64_t index) {
  return CounterRng(PhiloxKey{master_seed, index});
}

}  // namespace lampshuffler
