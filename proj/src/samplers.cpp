#include "proxlmc/samplers.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "proxlmc/parallel.hpp"

namespace proxlmc {
namespace {

void require_full_step(const Ensemble &e, const char *op) {
  if (e.half_step) throw std::logic_error(std::string(op) + " requires a full-step ensemble");
}

void require_positive_step(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("step size h must be positive");
}

template <class PerParticle>
void for_each_particle(std::size_t n, PerParticle &&fn) {
  parallel_for_chunks(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) fn(i);
  });
}

}  // namespace

Ensemble Ensemble::from_particles(RowMatrix particles, std::uint64_t step_index, bool half_step) {
  Ensemble e;
  e.streams.resize(static_cast<std::size_t>(particles.rows()));
  std::iota(e.streams.begin(), e.streams.end(), std::uint64_t{0});
  e.particles = std::move(particles);
  e.step_index = step_index;
  e.half_step = half_step;
  e.validate();
  return e;
}

Ensemble Ensemble::permuted(std::span<const std::size_t> order) const {
  if (order.size() != size()) throw std::invalid_argument("permutation size must match ensemble");
  Ensemble out;
  out.particles.resize(particles.rows(), particles.cols());
  out.streams.resize(size());
  std::vector<bool> seen(size(), false);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::size_t src = order[i];
    if (src >= size() || seen[src]) throw std::invalid_argument("order is not a permutation");
    seen[src] = true;
    out.particles.row(static_cast<Eigen::Index>(i)) = particles.row(static_cast<Eigen::Index>(src));
    out.streams[i] = streams[src];
  }
  out.step_index = step_index;
  out.half_step = half_step;
  return out;
}

void Ensemble::validate() const {
  if (particles.rows() < 1 || particles.cols() < 1)
    throw std::invalid_argument("ensemble needs at least one particle of positive dimension");
  if (streams.size() != size()) throw std::invalid_argument("ensemble stream ids must match particle count");
  if (!particles.allFinite()) throw std::invalid_argument("ensemble entries must be finite");
}

std::string to_string(Algorithm a) { return a == Algorithm::ULA ? "ula" : "prox_ula"; }

Algorithm algorithm_from_string(const std::string &name) {
  if (name == "ula" || name == "ULA") return Algorithm::ULA;
  if (name == "prox_ula" || name == "ProxULA" || name == "proxula") return Algorithm::ProxULA;
  throw std::invalid_argument("unknown algorithm \"" + name + "\" (expected ula or prox_ula)");
}

void SchemeConfig::validate() const {
  require_positive_step(h);
  if (n_particles < 1) throw std::invalid_argument("n_particles must be >= 1");
  if (noise_scale && !(*noise_scale >= 0.0)) throw std::invalid_argument("noise scale must be nonnegative");
}

double ScalarLaw::quantile_draw(double u1, double u2) const {
  switch (family) {
    case Family::Normal:
      return a + std::sqrt(b) * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    case Family::Laplace:
      return u1 < 0.5 ? a + b * std::log(2.0 * u1) : a - b * std::log(2.0 * (1.0 - u1));
    case Family::Uniform:
      return a + (b - a) * u1;
  }
  return 0.0;
}

void ScalarLaw::validate() const {
  if (!std::isfinite(a) || !std::isfinite(b)) throw std::invalid_argument("scalar law parameters must be finite");
  switch (family) {
    case Family::Normal:
      if (b < 0.0) throw std::invalid_argument("normal variance must be nonnegative");
      break;
    case Family::Laplace:
      if (!(b > 0.0)) throw std::invalid_argument("laplace scale must be positive");
      break;
    case Family::Uniform:
      if (!(b > a)) throw std::invalid_argument("uniform bounds must satisfy lo < hi");
      break;
  }
}

InitialLaw::InitialLaw(std::vector<ScalarLaw> coords) : coords_(std::move(coords)) {
  if (coords_.empty()) throw std::invalid_argument("initial law dimension must be positive");
  for (const auto &c : coords_) c.validate();
}

InitialLaw InitialLaw::isotropic_gaussian(Vector mean, double variance) {
  return diagonal_gaussian(mean, Vector::Constant(mean.size(), variance));
}

InitialLaw InitialLaw::diagonal_gaussian(Vector mean, Vector variances) {
  require_dim("initial variances", static_cast<std::size_t>(mean.size()),
              static_cast<std::size_t>(variances.size()));
  std::vector<ScalarLaw> coords;
  for (Eigen::Index i = 0; i < mean.size(); ++i) coords.push_back(ScalarLaw::normal(mean[i], variances[i]));
  return InitialLaw(std::move(coords));
}

InitialLaw InitialLaw::product(std::vector<ScalarLaw> coordinates) { return InitialLaw(std::move(coordinates)); }

std::optional<GaussianMeasure> InitialLaw::gaussian() const {
  Vector mean(static_cast<Eigen::Index>(dim()));
  Vector var(static_cast<Eigen::Index>(dim()));
  for (std::size_t i = 0; i < dim(); ++i) {
    if (coords_[i].family != ScalarLaw::Family::Normal || !(coords_[i].b > 0.0)) return std::nullopt;
    mean[static_cast<Eigen::Index>(i)] = coords_[i].a;
    var[static_cast<Eigen::Index>(i)] = coords_[i].b;
  }
  return GaussianMeasure::diagonal(std::move(mean), std::move(var));
}

Ensemble InitialLaw::sample(std::size_t n, std::uint64_t seed) const {
  if (n < 1) throw std::invalid_argument("initial sample size must be >= 1");
  const NoiseSource source(seed, std::nullopt, StreamDomain::Initialization);
  RowMatrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim()));
  for_each_particle(n, [&](std::size_t i) {
    for (std::size_t c = 0; c < dim(); ++c) {
      const double u1 = source.uniform(i, 0, 2 * c);
      const double u2 = source.uniform(i, 0, 2 * c + 1);
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = coords_[c].quantile_draw(u1, u2);
    }
  });
  return Ensemble::from_particles(std::move(x));
}

Ensemble step_transport(const Ensemble &e, const Potential &p, double h) {
  require_full_step(e, "step_transport");
  require_positive_step(h);
  require_dim("ensemble vs potential", p.dim(), e.dim());
  Ensemble out = e;
  for_each_particle(e.size(), [&](std::size_t i) {
    // Per-thread scratch: no allocation in the particle loop.
    thread_local Vector x, y;
    const auto r = static_cast<Eigen::Index>(i);
    x = e.particles.row(r).transpose();
    y.resize(x.size());
    p.prox_into(h, x, y);
    out.particles.row(r) = y.transpose();
  });
  out.half_step = true;
  return out;
}

Ensemble step_diffusion(const Ensemble &e, double h, const NoiseSource &noise) {
  if (!e.half_step) throw std::logic_error("step_diffusion requires a half-step ensemble");
  require_positive_step(h);
  Ensemble out = e;
  const double scale = noise.diffusion_scale(h);
  if (scale != 0.0) {
    for_each_particle(e.size(), [&](std::size_t i) {
      thread_local Vector eta;
      eta.resize(static_cast<Eigen::Index>(e.dim()));
      noise.standard_normal(e.streams[i], e.step_index, eta);
      out.particles.row(static_cast<Eigen::Index>(i)) += scale * eta.transpose();
    });
  }
  out.half_step = false;
  out.step_index = e.step_index + 1;
  return out;
}

Ensemble step_ula(const Ensemble &e, const Potential &p, double h, const NoiseSource &noise) {
  require_full_step(e, "step_ula");
  require_positive_step(h);
  require_dim("ensemble vs potential", p.dim(), e.dim());
  if (!p.is_differentiable())
    throw UnsupportedOperation("ULA needs a differentiable potential; got " + p.describe());
  Ensemble out = e;
  const double scale = noise.diffusion_scale(h);
  for_each_particle(e.size(), [&](std::size_t i) {
    const auto r = static_cast<Eigen::Index>(i);
    const Vector x = e.particles.row(r).transpose();
    Vector next = x - h * p.gradient(x);
    if (scale != 0.0) {
      Vector eta(x.size());
      noise.standard_normal(e.streams[i], e.step_index, eta);
      next += scale * eta;
    }
    out.particles.row(r) = next.transpose();
  });
  out.step_index = e.step_index + 1;
  return out;
}

Trajectory::Trajectory(double h, bool half_steps_recorded, std::vector<Ensemble> records)
    : h_(h), half_steps_(half_steps_recorded), records_(std::move(records)) {
  if (records_.empty()) throw std::invalid_argument("trajectory needs at least the initial ensemble");
  if (half_steps_ && records_.size() % 2 == 0)
    throw std::invalid_argument("half-step trajectory must have 2n + 1 records");
}

std::uint64_t Trajectory::n_steps() const {
  return half_steps_ ? (records_.size() - 1) / 2 : records_.size() - 1;
}

const Ensemble &Trajectory::full(std::uint64_t k) const {
  if (k > n_steps()) throw std::out_of_range("trajectory step out of range");
  return records_[half_steps_ ? 2 * k : k];
}

const Ensemble &Trajectory::half(std::uint64_t k) const {
  if (!half_steps_) throw std::logic_error("trajectory was recorded without half steps (record_half_steps)");
  if (k >= n_steps()) throw std::out_of_range("trajectory half step out of range");
  return records_[2 * k + 1];
}

Trajectory run(const SchemeConfig &config, const Potential &p, const InitialLaw &init) {
  config.validate();
  require_dim("initial law vs potential", p.dim(), init.dim());
  return run(config, p, init.sample(config.n_particles, config.seed));
}

namespace {

void check_run_inputs(const SchemeConfig &config, const Potential &p, const Ensemble &initial) {
  config.validate();
  initial.validate();
  require_dim("ensemble vs potential", p.dim(), initial.dim());
  if (initial.half_step) throw std::logic_error("run requires a full-step initial ensemble");
  if (config.algorithm == Algorithm::ULA && !p.is_differentiable())
    throw UnsupportedOperation("ULA needs a differentiable potential; got " + p.describe());
}

}  // namespace

Ensemble advance(const SchemeConfig &config, const Potential &p, Ensemble initial) {
  check_run_inputs(config, p, initial);
  const NoiseSource noise = config.noise();
  for (std::uint64_t k = 0; k < config.n_steps; ++k) {
    if (config.algorithm == Algorithm::ULA) {
      initial = step_ula(initial, p, config.h, noise);
    } else {
      initial = step_diffusion(step_transport(initial, p, config.h), config.h, noise);
    }
  }
  return initial;
}

Trajectory run(const SchemeConfig &config, const Potential &p, Ensemble initial) {
  check_run_inputs(config, p, initial);

  const bool halves = config.record_half_steps && config.algorithm == Algorithm::ProxULA;
  const NoiseSource noise = config.noise();
  std::vector<Ensemble> records;
  records.reserve(static_cast<std::size_t>(config.n_steps) * (halves ? 2 : 1) + 1);
  records.push_back(std::move(initial));
  Ensemble current = records.back();
  for (std::uint64_t k = 0; k < config.n_steps; ++k) {
    if (config.algorithm == Algorithm::ULA) {
      current = step_ula(current, p, config.h, noise);
    } else {
      current = step_transport(current, p, config.h);
      if (halves) records.push_back(current);
      current = step_diffusion(current, config.h, noise);
    }
    records.push_back(current);
  }
  return Trajectory(config.h, halves, std::move(records));
}

}  // namespace proxlmc
