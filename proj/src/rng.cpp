#include "condmv/rng.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <numbers>

namespace condmv {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> c,
                                        std::array<std::uint32_t, 2> k) noexcept {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kWeyl0;
    k[1] += kWeyl1;
  }
  return c;
}

std::array<std::uint32_t, 4> CounterRng::bits(const NoiseAddress& a) const noexcept {
  // particle: 48 bits, stream: 16 bits, block/component: 16 bits each, step: 32 bits.
  const std::array<std::uint32_t, 4> counter{
      static_cast<std::uint32_t>(a.particle),
      static_cast<std::uint32_t>((a.particle >> 32) & 0xFFFFu) |
          (static_cast<std::uint32_t>(a.stream) << 16),
      (a.block << 16) | (a.component & 0xFFFFu),
      a.step,
  };
  return philox4x32(counter, key_);
}

double CounterRng::uniform(const NoiseAddress& a) const noexcept {
  const auto w = bits(a);
  const std::uint64_t x = (static_cast<std::uint64_t>(w[0]) << 32) | w[1];
  return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal(const NoiseAddress& a) const { return normal_quantile(uniform(a)); }

double normal_quantile(double u) {
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
}

}  // namespace condmv
