#pragma once

#include <vector>

#include <json.hpp>

#include "proxlmc/common.hpp"

namespace proxlmc {

// N(mean, covariance) with symmetric positive-definite covariance.
// Diagonal covariances take closed-form fast paths everywhere.
class GaussianMeasure {
 public:
  GaussianMeasure(Vector mean, Matrix covariance);

  static GaussianMeasure diagonal(Vector mean, Vector variances);
  static GaussianMeasure isotropic(Vector mean, double variance);
  static GaussianMeasure standard(std::size_t dim);

  std::size_t dim() const { return static_cast<std::size_t>(mean_.size()); }
  const Vector &mean() const { return mean_; }
  const Matrix &covariance() const { return cov_; }
  Vector variances() const { return cov_.diagonal(); }
  bool is_diagonal() const { return diagonal_; }

 private:
  Vector mean_;
  Matrix cov_;
  bool diagonal_;
};

// {"mean": [...], "cov_diag": [...]} or {"mean": [...], "cov": [[...], ...]}
nlohmann::json gaussian_to_json(const GaussianMeasure &g);
GaussianMeasure gaussian_from_json(const nlohmann::json &j);

// Law of prox_V^h(X) for X ~ g and V(x) = sum_i w_i x_i^2 / 2.
GaussianMeasure prox_pushforward_quadratic(const GaussianMeasure &g, double h, const Vector &weights);
GaussianMeasure prox_pushforward_quadratic(const GaussianMeasure &g, double h, double lambda);

// g convolved with the heat kernel at time t: covariance + 2t I.
GaussianMeasure heat_convolve(const GaussianMeasure &g, double t);

// Exact laws of the split scheme for a quadratic potential:
// [rho^0, rho^{1/2}, rho^1, ..., rho^{n-1/2}, rho^n], 2n + 1 entries.
std::vector<GaussianMeasure> scheme_recursion(const GaussianMeasure &g0, double h,
                                              const Vector &weights, std::size_t n);
std::vector<GaussianMeasure> scheme_recursion(const GaussianMeasure &g0, double h, double lambda,
                                              std::size_t n);

// Stationary variance of the isotropic recursion sigma^2 -> sigma^2/(1+lambda h)^2 + 2h.
double scheme_fixed_point_variance(double h, double lambda);

// Exact Fokker-Planck solution for V(x) = sum_i w_i x_i^2 / 2 (Ornstein-Uhlenbeck).
GaussianMeasure ou_flow(const GaussianMeasure &g0, double t, const Vector &weights);
GaussianMeasure ou_flow(const GaussianMeasure &g0, double t, double lambda);

// Target N(0, W^{-1}) of the quadratic potential with curvature weights W.
GaussianMeasure quadratic_target(const Vector &weights);

// Bures-Wasserstein distance.
double gaussian_w2(const GaussianMeasure &a, const GaussianMeasure &b);
// KL(a | b).
double gaussian_kl(const GaussianMeasure &a, const GaussianMeasure &b);

// Integral of rho log rho: -1/2 log det(2 pi e Sigma). Note the sign: this is
// the negative of the differential entropy.
double entropy_gaussian(const GaussianMeasure &a);
// E_a V for V(x) = sum_i w_i x_i^2 / 2.
double potential_energy_gaussian(const GaussianMeasure &a, const Vector &weights);
double potential_energy_gaussian(const GaussianMeasure &a, double lambda);
// log of the normalizer Z of exp(-V) for the quadratic potential.
double log_partition_quadratic(const Vector &weights);
double log_partition_quadratic(std::size_t dim, double lambda);

// Point at time t on the W2 geodesic from a to b.
GaussianMeasure gaussian_geodesic(const GaussianMeasure &a, const GaussianMeasure &b, double t);

// One step k of the exact scheme.
struct SchemeStep {
  GaussianMeasure before;  // rho^k
  GaussianMeasure half;    // rho^{k+1/2}
  GaussianMeasure after;   // rho^{k+1}
};
SchemeStep scheme_step(const std::vector<GaussianMeasure> &laws, std::size_t k);

// Both sides of the one-step discrete evolution variational inequality
//   [W2^2(rho^{k+1}, nu) - W2^2(rho^k, nu)] / 2h + lambda/2 W2^2(rho^{k+1/2}, nu)
//     <= H(nu|pi) - H(rho^{k+1}|pi) - W2^2(rho^{k+1/2}, rho^k) / 2h + delta^{k+1}
// evaluated in closed form for the quadratic potential with weights W
// (lambda = min W, pi = N(0, W^{-1})).
struct EviReport {
  double lhs;
  double rhs;
  double slack;  // rhs - lhs
};
EviReport discrete_evi_check(const SchemeStep &step, const GaussianMeasure &nu,
                             const Vector &weights, double h);
EviReport discrete_evi_check(const SchemeStep &step, const GaussianMeasure &nu, double lambda,
                             double h);

}  // namespace proxlmc
