#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "proxlmc/common.hpp"
#include "proxlmc/reference_flows.hpp"

namespace proxlmc::testing {

// Small hand-rolled generator for property tests. Fixed seeds keep every
// property run reproducible.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

  Vector vector(std::size_t d, double scale = 1.0) {
    Vector v(static_cast<Eigen::Index>(d));
    for (auto &x : v) x = scale * normal();
    return v;
  }

  Vector positive(std::size_t d, double lo, double hi) {
    Vector v(static_cast<Eigen::Index>(d));
    for (auto &x : v) x = uniform(lo, hi);
    return v;
  }

  RowMatrix cloud(std::size_t n, std::size_t d, double scale = 1.0) {
    RowMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = scale * normal();
    return m;
  }

  GaussianMeasure diagonal_gaussian(std::size_t d) {
    return GaussianMeasure::diagonal(vector(d, 2.0), positive(d, 0.1, 5.0));
  }

  GaussianMeasure full_gaussian(std::size_t d) {
    Matrix a(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (auto &x : a.reshaped()) x = normal();
    Matrix cov = a * a.transpose() + 0.2 * Matrix::Identity(a.rows(), a.cols());
    return GaussianMeasure(vector(d, 2.0), cov);
  }

  std::mt19937_64 &engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

struct Moments {
  double mean;
  double mean_se;
  double variance;
  double variance_se;
};

// Sample mean and (biased) variance with their large-sample standard errors.
inline Moments moments(const Eigen::Ref<const Vector> &x) {
  const double n = static_cast<double>(x.size());
  const double m = x.mean();
  const Eigen::ArrayXd c = x.array() - m;
  const double s2 = c.square().mean();
  const double m4 = c.square().square().mean();
  return Moments{m, std::sqrt(s2 / n), s2, std::sqrt(std::max(0.0, m4 - s2 * s2) / n)};
}

// Least-squares slope of log(y) against log(x).
inline double log_log_slope(const std::vector<double> &x, const std::vector<double> &y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace proxlmc::testing
