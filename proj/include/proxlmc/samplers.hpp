#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "proxlmc/common.hpp"
#include "proxlmc/potentials.hpp"
#include "proxlmc/random.hpp"
#include "proxlmc/reference_flows.hpp"

namespace proxlmc {

// N x d particle matrix with its step index and RNG lineage. `streams[i]` is
// the noise stream that drives particle i; permuting particles together
// with their streams permutes every later state identically.
struct Ensemble {
  RowMatrix particles;
  std::uint64_t step_index = 0;
  bool half_step = false;
  std::vector<std::uint64_t> streams;

  static Ensemble from_particles(RowMatrix particles, std::uint64_t step_index = 0,
                                 bool half_step = false);

  std::size_t size() const { return static_cast<std::size_t>(particles.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(particles.cols()); }

  Ensemble permuted(std::span<const std::size_t> order) const;
  void validate() const;
};

enum class Algorithm { ULA, ProxULA };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string &name);

struct SchemeConfig {
  double h = 0.1;
  std::uint64_t n_steps = 1;
  std::size_t n_particles = 1;
  Algorithm algorithm = Algorithm::ProxULA;
  std::uint64_t seed = 0;
  bool record_half_steps = false;
  // Replaces sqrt(2h) as the noise multiplier; 0 switches noise off.
  std::optional<double> noise_scale;

  void validate() const;
  NoiseSource noise() const { return NoiseSource(seed, noise_scale); }
};

// One-dimensional law used to build product initializations.
struct ScalarLaw {
  enum class Family { Normal, Laplace, Uniform };
  Family family;
  double a;  // mean / location / lower bound
  double b;  // variance / scale / upper bound

  static ScalarLaw normal(double mean, double variance) { return {Family::Normal, mean, variance}; }
  static ScalarLaw laplace(double location, double scale) { return {Family::Laplace, location, scale}; }
  static ScalarLaw uniform(double lo, double hi) { return {Family::Uniform, lo, hi}; }

  // Inverse-CDF draw from u1; u2 is used by the normal family (Box-Muller).
  double quantile_draw(double u1, double u2) const;
  void validate() const;
};

// Initial law rho_0 with a sampler. Gaussian members report their exact law.
class InitialLaw {
 public:
  static InitialLaw isotropic_gaussian(Vector mean, double variance);
  static InitialLaw diagonal_gaussian(Vector mean, Vector variances);
  static InitialLaw product(std::vector<ScalarLaw> coordinates);

  std::size_t dim() const { return coords_.size(); }
  const std::vector<ScalarLaw> &coordinates() const { return coords_; }
  // Exact law if every coordinate is a nondegenerate normal.
  std::optional<GaussianMeasure> gaussian() const;

  // Draws are keyed by (seed, particle, coordinate) in the initialization
  // domain, so they never collide with diffusion noise.
  Ensemble sample(std::size_t n, std::uint64_t seed) const;

 private:
  explicit InitialLaw(std::vector<ScalarLaw> coords);
  std::vector<ScalarLaw> coords_;
};

// X -> prox_V^h(X) for every particle. Requires a full-step ensemble.
Ensemble step_transport(const Ensemble &e, const Potential &p, double h);
// X -> X + sqrt(2h) eta with eta keyed by (stream, step_index).
Ensemble step_diffusion(const Ensemble &e, double h, const NoiseSource &noise);
// X -> X - h grad V(X) + sqrt(2h) eta, same keying as step_diffusion.
Ensemble step_ula(const Ensemble &e, const Potential &p, double h, const NoiseSource &noise);

// Recorded ensembles of one run.
class Trajectory {
 public:
  Trajectory(double h, bool half_steps_recorded, std::vector<Ensemble> records);

  double h() const { return h_; }
  bool has_half_steps() const { return half_steps_; }
  std::uint64_t n_steps() const;
  const std::vector<Ensemble> &records() const { return records_; }

  // X_h^k, k = 0..n
  const Ensemble &full(std::uint64_t k) const;
  // X_h^{k+1/2}, k = 0..n-1; throws if half steps were not recorded.
  const Ensemble &half(std::uint64_t k) const;
  const Ensemble &final_ensemble() const { return records_.back(); }

 private:
  double h_;
  bool half_steps_;
  std::vector<Ensemble> records_;
};

// Runs n_steps of the configured algorithm. n_steps = 0 returns only the
// initial ensemble.
Trajectory run(const SchemeConfig &config, const Potential &p, const InitialLaw &init);
Trajectory run(const SchemeConfig &config, const Potential &p, Ensemble initial);
// Same dynamics as run() but keeps only the last ensemble.
Ensemble advance(const SchemeConfig &config, const Potential &p, Ensemble initial);

}  // namespace proxlmc
