#include "proxlmc/random.hpp"

#include <cmath>
#include <numbers>

namespace proxlmc {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t &hi, std::uint32_t &lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

// 53 random bits mapped to the open unit interval.
inline double to_open_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

Philox4x32::Counter Philox4x32::block(Counter ctr, Key key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

NoiseSource::NoiseSource(std::uint64_t seed, std::optional<double> scale_override, StreamDomain domain)
    : seed_(seed), scale_override_(scale_override), domain_(domain) {
  if (scale_override_ && !(*scale_override_ >= 0.0))
    throw std::invalid_argument("noise scale override must be nonnegative");
}

NoiseSource NoiseSource::with_domain(StreamDomain domain) const {
  return NoiseSource(seed_, scale_override_, domain);
}

double NoiseSource::diffusion_scale(double h) const {
  return scale_override_.value_or(std::sqrt(2.0 * h));
}

std::array<std::uint64_t, 2> NoiseSource::raw_pair(std::uint64_t stream, std::uint64_t step,
                                                   std::uint64_t block) const {
  const Philox4x32::Counter ctr = {
      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
      static_cast<std::uint32_t>(step),
      static_cast<std::uint32_t>(block) ^ (static_cast<std::uint32_t>(step >> 32) << 16)};
  const Philox4x32::Key key = {static_cast<std::uint32_t>(seed_),
                              static_cast<std::uint32_t>(seed_ >> 32) ^
                                  (static_cast<std::uint32_t>(domain_) * 0x85EBCA6Bu)};
  const auto out = Philox4x32::block(ctr, key);
  return {(static_cast<std::uint64_t>(out[0]) << 32) | out[1],
          (static_cast<std::uint64_t>(out[2]) << 32) | out[3]};
}

void NoiseSource::standard_normal(std::uint64_t stream, std::uint64_t step,
                                  Eigen::Ref<Vector> out) const {
  const auto n = static_cast<std::uint64_t>(out.size());
  for (std::uint64_t j = 0; 2 * j < n; ++j) {
    const auto bits = raw_pair(stream, step, j);
    // Box-Muller
    const double r = std::sqrt(-2.0 * std::log(to_open_unit(bits[0])));
    const double theta = 2.0 * std::numbers::pi * to_open_unit(bits[1]);
    out[static_cast<Eigen::Index>(2 * j)] = r * std::cos(theta);
    if (2 * j + 1 < n) out[static_cast<Eigen::Index>(2 * j + 1)] = r * std::sin(theta);
  }
}

double NoiseSource::uniform(std::uint64_t stream, std::uint64_t step, std::uint64_t index) const {
  const auto bits = raw_pair(stream, step, index / 2);
  return to_open_unit(bits[index % 2]);
}

}  // namespace proxlmc
