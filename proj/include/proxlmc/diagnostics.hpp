#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "proxlmc/potentials.hpp"
#include "proxlmc/reference_flows.hpp"
#include "proxlmc/samplers.hpp"
#include "proxlmc/wasserstein.hpp"

namespace proxlmc {

// Which pair of states a delta estimate differences.
enum class DeltaDefinition {
  // V(X^{k}) - V(X^{k-1/2}): the potential-energy increase of the diffusion step.
  HalfStep,
  // V(X^{k}) - V(X^{k-1}): the full-step variant; includes the transport decrease.
  FullStep,
};

// Monte Carlo estimate of delta^k, k >= 1, treating particles as
// independent runs.
struct DeltaEstimate {
  std::uint64_t step = 1;
  double delta_hat = 0.0;
  double standard_error = 0.0;
  std::size_t n_runs = 0;
};

DeltaEstimate estimate_delta(const Trajectory &t, const Potential &p, std::uint64_t k,
                             DeltaDefinition definition = DeltaDefinition::HalfStep);
std::vector<DeltaEstimate> estimate_deltas(const Trajectory &t, const Potential &p,
                                           DeltaDefinition definition = DeltaDefinition::HalfStep);

// Estimate of Delta^n = sum_{k<=n} delta^k; the standard error comes from
// per-run sums, so it accounts for correlation across steps.
struct DeltaSum {
  double value = 0.0;
  double standard_error = 0.0;
  std::uint64_t n_steps = 0;
};
DeltaSum delta_sum(const Trajectory &t, const Potential &p,
                   DeltaDefinition definition = DeltaDefinition::HalfStep);

// Per-step bound M h d + L sqrt(2 h d). Missing M or L counts as 0; if both
// are missing the bound is unavailable.
std::optional<double> delta_bound(const Potential &p, double h);
double delta_bound(double grad_lipschitz, double lipschitz, double h, std::size_t dim);

// Exact delta^{k} = V(rho^{k}) - V(rho^{k-1/2}) for a quadratic potential:
// h * sum_i w_i, the same for every k.
double exact_quadratic_delta(const Vector &weights, double h);

// sqrt(6 h (H(rho_0|pi) + Delta^n))
double theorem1_bound(double h, std::uint64_t n, double kl0, double delta_sum);
// theorem1_bound + W2(rho_0, pi) e^{-lambda t}, t in [0, h n].
double corollary_bound(double h, std::uint64_t n, double kl0, double delta_sum, double w2_init,
                       double lambda, double t);

struct BoundReport {
  double h = 0.0;
  std::uint64_t n = 0;
  double horizon = 0.0;  // T = h n
  double kl0 = 0.0;
  double delta_sum = 0.0;
  double theorem1_bound = 0.0;
  double w2_init = 0.0;
  double lambda = 0.0;
  double corollary_bound = 0.0;  // evaluated at t = T
};
BoundReport make_bound_report(double h, std::uint64_t n, double kl0, double delta_sum, double w2_init,
                              double lambda);

// Order-of-magnitude step/iteration plan for W2 accuracy epsilon, all
// proportionality constants set to 1. Each candidate satisfies
// h * n = log(sqrt(d)/eps) / lambda with n rounded to the nearest integer.
struct RateCandidate {
  bool applicable = false;
  double h = 0.0;
  std::int64_t n = 0;
};
struct RatePlan {
  double epsilon = 0.0;
  std::size_t d = 0;
  double M = 0.0;
  double L = 0.0;
  double lambda = 0.0;
  double log_term = 0.0;  // log(sqrt(d)/eps)
  RateCandidate smooth;     // h ~ eps^2 / (d M log)
  RateCandidate nonsmooth;  // h ~ eps^4 / (d L^2 log^2)
  RateCandidate kl;         // h ~ eps^2 / d
  double h_chosen = 0.0;
  std::int64_t n_chosen = 0;
  std::string binding;  // "smooth", "nonsmooth" or "kl"
};
RatePlan plan_rates(double epsilon, std::size_t d, double M, double L, double lambda);

// Interpolated exact law rho^h(t): rho^0 at t = 0, rho^{k+1} on (kh, (k+1)h].
const GaussianMeasure &interpolated_law(const std::vector<GaussianMeasure> &laws, double h, double t);

// W2(rho^h(t), rho(t)) for the quadratic potential, both laws exact.
double exact_discretization_error(const GaussianMeasure &rho0, const Vector &weights, double h,
                                  std::uint64_t n, double t);

struct EndToEndReport {
  BoundReport bounds;
  double w2_measured = 0.0;  // W2(rho^h(T), pi)
  std::optional<double> w2_standard_error;
  std::string method;  // "exact_gaussian" or an empirical W2Method name
  bool bound_dominates = false;
};

// Quadratic potential with Gaussian rho_0: all quantities in closed form.
EndToEndReport end_to_end_exact(const SchemeConfig &config, const Potential &p, const GaussianMeasure &rho0);

// General potential: runs the sampler (half steps forced on), estimates
// Delta^n, and measures W2 between the final ensemble and samples from pi.
// kl0 and w2_init must be supplied. Domination is judged against the
// measured value minus 2 standard errors when one is available.
EndToEndReport end_to_end_sampled(const SchemeConfig &config, const Potential &p, const InitialLaw &init,
                                  const PointCloud &target_samples, double kl0, double w2_init,
                                  AssignmentOptions options = {});

}  // namespace proxlmc
