#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>

namespace opera {

// Philox4x32-10 counter-based generator (Salmon et al., Random123).
// Pure function of (counter, key).
inline std::array<uint32_t, 4> philox4x32(std::array<uint32_t, 4> ctr,
                                          std::array<uint32_t, 2> key) {
  constexpr uint32_t kM0 = 0xD2511F53u;
  constexpr uint32_t kM1 = 0xCD9E8D57u;
  constexpr uint32_t kW0 = 0x9E3779B9u;
  constexpr uint32_t kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kW0;
      key[1] += kW1;
    }
    const uint64_t p0 = uint64_t{kM0} * ctr[0];
    const uint64_t p1 = uint64_t{kM1} * ctr[2];
    const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32);
    const uint32_t lo0 = static_cast<uint32_t>(p0);
    const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32);
    const uint32_t lo1 = static_cast<uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

// Seed for the index-th member of a family (instances of an experiment, for
// example), mixed with splitmix64 so nearby seeds do not share streams.
inline uint64_t derive_seed(uint64_t seed, uint64_t index) {
  uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// What a stream is used for. Separate purposes keep, e.g., arrival sampling
// identical across policies regardless of how many decisions each makes.
enum class StreamPurpose : uint32_t {
  kArrivals = 1,
  kPolicy = 2,
  kOccupancy = 3,
  kEstimatorArrivals = 4,
  kEstimatorPolicy = 5,
  kEstimatorOccupancy = 6,
  kGenerator = 7,
  kVerification = 8,
};

// Stream of random numbers identified by (seed, index, purpose). The index is
// typically the run or particle number.
class RngStream {
 public:
  using result_type = uint64_t;

  RngStream(uint64_t seed, uint32_t index, StreamPurpose purpose)
      : key_{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32)},
        index_(index),
        purpose_(static_cast<uint32_t>(purpose)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  uint32_t next_u32() {
    if (lane_ == 4) refill();
    return block_[lane_++];
  }

  result_type operator()() {
    const uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform() {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  // Uniform integer on [0, n). Lemire's multiply-shift with rejection.
  uint64_t below(uint64_t n) {
    uint64_t x = (*this)();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    uint64_t low = static_cast<uint64_t>(m);
    if (low < n) {
      const uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        x = (*this)();
        m = static_cast<__uint128_t>(x) * n;
        low = static_cast<uint64_t>(m);
      }
    }
    return static_cast<uint64_t>(m >> 64);
  }

  // Inverse-CDF draw from a probability vector. Mass lost to rounding goes to
  // the last entry with positive probability.
  int categorical(std::span<const double> probs) {
    const double u = uniform();
    double acc = 0.0;
    int last_positive = -1;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (probs[i] <= 0.0) continue;
      acc += probs[i];
      last_positive = static_cast<int>(i);
      if (u < acc) return static_cast<int>(i);
    }
    return last_positive;
  }

  // Standard exponential variate.
  double exponential() { return -std::log1p(-uniform()); }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  void refill() {
    block_ = philox4x32({static_cast<uint32_t>(block_index_),
                         static_cast<uint32_t>(block_index_ >> 32), index_,
                         purpose_},
                        key_);
    ++block_index_;
    lane_ = 0;
  }

  std::array<uint32_t, 2> key_;
  uint32_t index_;
  uint32_t purpose_;
  uint64_t block_index_ = 0;
  std::array<uint32_t, 4> block_{};
  int lane_ = 4;
};

}  // namespace opera
