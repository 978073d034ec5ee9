#include "sysrisk/rng.hpp"

#include <cmath>
#include <numbers>

namespace sysrisk {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void round(std::array<std::uint32_t, 4>& c, const std::array<std::uint32_t, 2>& k) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
  const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const auto lo0 = static_cast<std::uint32_t>(p0);
  const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const auto lo1 = static_cast<std::uint32_t>(p1);
  c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

inline double to_unit(std::uint64_t x) {
  return static_cast<double>((x >> 11) + 1) * 0x1.0p-53;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key) {
  round(counter, key);
  for (int r = 1; r < 10; ++r) {
    key[0] += kWeyl0;
    key[1] += kWeyl1;
    round(counter, key);
  }
  return counter;
}

std::array<std::uint64_t, 2> CounterRng::bits(std::uint64_t replicate, std::uint32_t stream,
                                              std::uint32_t block) const {
  const std::array<std::uint32_t, 4> ctr{static_cast<std::uint32_t>(replicate),
                                         static_cast<std::uint32_t>(replicate >> 32), stream, block};
  const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
  const auto out = philox4x32(ctr, key);
  return {(static_cast<std::uint64_t>(out[1]) << 32) | out[0], (static_cast<std::uint64_t>(out[3]) << 32) | out[2]};
}

double CounterRng::uniform(std::uint64_t replicate, std::uint32_t stream, std::uint32_t block, unsigned lane) const {
  return to_unit(bits(replicate, stream, block)[lane & 1u]);
}

double CounterRng::exponential(std::uint64_t replicate, std::uint32_t stream, std::uint32_t block) const {
  return -std::log(uniform(replicate, stream, block));
}

std::array<double, 2> CounterRng::normals(std::uint64_t replicate, std::uint32_t stream, std::uint32_t block) const {
  const auto b = bits(replicate, stream, block);
  const double r = std::sqrt(-2.0 * std::log(to_unit(b[0])));
  const double theta = 2.0 * std::numbers::pi * to_unit(b[1]);
  return {r * std::cos(theta), r * std::sin(theta)};
}

}  // namespace sysrisk
