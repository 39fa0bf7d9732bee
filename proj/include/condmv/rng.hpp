#pragma once

#include <array>
#include <cstdint>

namespace condmv {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
/// Output is a pure function of (key, counter).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

/// Which consumer a draw belongs to. Distinct streams never share counters.
enum class Stream : std::uint16_t {
  initial = 1,
  increment = 2,
  auxiliary = 3,
};

/// Address of one Gaussian draw: (particle, block, component, step) plus the stream.
struct NoiseAddress {
  std::uint64_t particle = 0;
  std::uint32_t block = 0;
  std::uint32_t component = 0;
  std::uint32_t step = 0;
  Stream stream = Stream::increment;
};

/// Keyed counter RNG. Every variate is determined by the seed and its address
/// alone, so thread count, evaluation order and the particle count never
/// perturb existing streams.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::array<std::uint32_t, 4> bits(const NoiseAddress& a) const noexcept;

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform(const NoiseAddress& a) const noexcept;

  /// Standard normal via the inverse CDF of uniform(a).
  double normal(const NoiseAddress& a) const;

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t seed_;
};

/// Standard normal quantile.
double normal_quantile(double u);

}  // namespace condmv
