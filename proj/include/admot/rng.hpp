#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <utility>

namespace admot::rng {

// Philox-4x32 block function, 10 rounds (Salmon et al., "Parallel random
// numbers: as easy as 1, 2, 3").  128 output bits per (key, counter) pair.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 2> key,
                                        std::array<std::uint32_t, 4> counter);

// SplitMix64-style finalizer used to derive subkeys from (key, index).
std::uint64_t mix64(std::uint64_t a, std::uint64_t b);

struct Block {
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;
};

// A keyed random stream addressed by a 128-bit counter.  Every sample is a
// pure function of (key, counter): streams can be replayed, split per
// column/node/round, and read concurrently without shared state.
class Stream {
 public:
  Stream() = default;
  explicit Stream(std::uint64_t key) : key_(key) {}

  Stream substream(std::uint64_t id) const { return Stream(mix64(key_, id)); }
  std::uint64_t key() const { return key_; }

  Block block(std::uint64_t ctr_lo, std::uint64_t ctr_hi = 0) const;

  // First value in (0,1], second in [0,1); one block consumed.
  std::pair<double, double> uniform_pair(std::uint64_t ctr_lo,
                                         std::uint64_t ctr_hi = 0) const;

  double uniform(std::uint64_t ctr_lo, std::uint64_t ctr_hi = 0) const;

  // Independent N(0,1) pair (Box-Muller); one block consumed.
  std::pair<double, double> gaussian_pair(std::uint64_t ctr_lo,
                                          std::uint64_t ctr_hi = 0) const;

  std::complex<double> complex_gaussian(std::uint64_t ctr_lo,
                                        std::uint64_t ctr_hi = 0) const;

 private:
  std::uint64_t key_ = 0;
};

}  // namespace admot::rng
