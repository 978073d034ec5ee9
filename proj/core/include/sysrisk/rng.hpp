#pragma once

// Counter-based random numbers: every draw is a pure function of
// (seed, replicate, stream, block), so replications can be generated in any
// order or on any number of threads with identical results.

#include <array>
#include <cstdint>

namespace sysrisk {

/// Philox4x32-10 block cipher (Salmon et al., "Parallel random numbers: as
/// easy as 1, 2, 3").
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  /// 128 random bits for one (replicate, stream, block) triple.
  std::array<std::uint64_t, 2> bits(std::uint64_t replicate, std::uint32_t stream, std::uint32_t block = 0) const;

  /// Uniform on (0, 1]; `lane` selects one of the two 64-bit words.
  double uniform(std::uint64_t replicate, std::uint32_t stream, std::uint32_t block = 0, unsigned lane = 0) const;

  /// Exp(1) draw.
  double exponential(std::uint64_t replicate, std::uint32_t stream, std::uint32_t block = 0) const;

  /// Two independent standard normals (Box-Muller on one block).
  std::array<double, 2> normals(std::uint64_t replicate, std::uint32_t stream, std::uint32_t block) const;

 private:
  std::uint64_t seed_;
};

}  // namespace sysrisk
