#include "admot/rng.hpp"

#include <cmath>

namespace admot::rng {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void philox_round(std::array<std::uint32_t, 4>& ctr,
                         const std::array<std::uint32_t, 2>& key) {
  const std::uint64_t p0 = std::uint64_t(kPhiloxM0) * ctr[0];
  const std::uint64_t p1 = std::uint64_t(kPhiloxM1) * ctr[2];
  const auto hi0 = std::uint32_t(p0 >> 32);
  const auto lo0 = std::uint32_t(p0);
  const auto hi1 = std::uint32_t(p1 >> 32);
  const auto lo1 = std::uint32_t(p1);
  ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 2> key,
                                        std::array<std::uint32_t, 4> counter) {
  for (int r = 0; r < 10; ++r) {
    philox_round(counter, key);
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return counter;
}

std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9E3779B97F4A7C15ull + b * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

Block Stream::block(std::uint64_t ctr_lo, std::uint64_t ctr_hi) const {
  const std::array<std::uint32_t, 2> key = {std::uint32_t(key_),
                                            std::uint32_t(key_ >> 32)};
  const std::array<std::uint32_t, 4> ctr = {
      std::uint32_t(ctr_lo), std::uint32_t(ctr_lo >> 32),
      std::uint32_t(ctr_hi), std::uint32_t(ctr_hi >> 32)};
  const auto out = philox4x32(key, ctr);
  return Block{std::uint64_t(out[0]) | (std::uint64_t(out[1]) << 32),
               std::uint64_t(out[2]) | (std::uint64_t(out[3]) << 32)};
}

std::pair<double, double> Stream::uniform_pair(std::uint64_t ctr_lo,
                                               std::uint64_t ctr_hi) const {
  const Block b = block(ctr_lo, ctr_hi);
  // 53-bit mantissas; first shifted into (0,1] so log() is always finite.
  const double u1 = double((b.lo >> 11) + 1) * 0x1.0p-53;
  const double u2 = double(b.hi >> 11) * 0x1.0p-53;
  return {u1, u2};
}

double Stream::uniform(std::uint64_t ctr_lo, std::uint64_t ctr_hi) const {
  return uniform_pair(ctr_lo, ctr_hi).second;
}

std::pair<double, double> Stream::gaussian_pair(std::uint64_t ctr_lo,
                                                std::uint64_t ctr_hi) const {
  const auto [u1, u2] = uniform_pair(ctr_lo, ctr_hi);
  const double r = std::sqrt(-2.0 * std::log(u1));
  return {r * std::cos(kTwoPi * u2), r * std::sin(kTwoPi * u2)};
}

std::complex<double> Stream::complex_gaussian(std::uint64_t ctr_lo,
                                              std::uint64_t ctr_hi) const {
  const auto [re, im] = gaussian_pair(ctr_lo, ctr_hi);
  return {re, im};
}

}  // namespace admot::rng
