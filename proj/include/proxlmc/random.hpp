#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "proxlmc/common.hpp"

namespace proxlmc {

// Philox4x32-10 (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3").
// A pure function of (counter, key), so any draw can be regenerated from its
// coordinates alone.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter counter, Key key);
};

// Independent families of draws sharing one seed.
enum class StreamDomain : std::uint32_t {
  Diffusion = 0,
  Initialization = 1,
  TargetSamples = 2,
  Projections = 3,
};

// Counter-based source of standard Gaussian / uniform variates keyed by
// (seed, domain, stream, step, index). Thread scheduling cannot change a draw.
class NoiseSource {
 public:
  explicit NoiseSource(std::uint64_t seed, std::optional<double> scale_override = std::nullopt,
                       StreamDomain domain = StreamDomain::Diffusion);

  std::uint64_t seed() const { return seed_; }
  StreamDomain domain() const { return domain_; }
  const std::optional<double> &scale_override() const { return scale_override_; }
  NoiseSource with_domain(StreamDomain domain) const;

  // Multiplier applied to N(0, I) increments for a diffusion step of size h:
  // sqrt(2h) unless overridden.
  double diffusion_scale(double h) const;

  // out[i] ~ N(0,1), i.i.d. across (stream, step, i).
  void standard_normal(std::uint64_t stream, std::uint64_t step, Eigen::Ref<Vector> out) const;
  // Uniform on the open interval (0, 1).
  double uniform(std::uint64_t stream, std::uint64_t step, std::uint64_t index) const;

 private:
  std::array<std::uint64_t, 2> raw_pair(std::uint64_t stream, std::uint64_t step,
                                        std::uint64_t block) const;

  std::uint64_t seed_;
  std::optional<double> scale_override_;
  StreamDomain domain_;
};

}  // namespace proxlmc
