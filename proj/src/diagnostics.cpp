#include "proxlmc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace proxlmc {
namespace {

// V(to_i) - V(from_i) per particle.
Vector energy_increments(const Ensemble &to, const Ensemble &from, const Potential &p) {
  if (to.size() != from.size()) throw std::invalid_argument("ensembles differ in size");
  Vector inc(static_cast<Eigen::Index>(to.size()));
  for (std::size_t i = 0; i < to.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const Vector x1 = to.particles.row(r).transpose();
    const Vector x0 = from.particles.row(r).transpose();
    inc[r] = p.value(x1) - p.value(x0);
  }
  return inc;
}

const Ensemble &delta_reference(const Trajectory &t, std::uint64_t k, DeltaDefinition definition) {
  return definition == DeltaDefinition::HalfStep ? t.half(k - 1) : t.full(k - 1);
}

void check_delta_inputs(const Trajectory &t, std::uint64_t k, DeltaDefinition definition) {
  if (definition == DeltaDefinition::HalfStep && !t.has_half_steps())
    throw std::logic_error("delta estimation needs half steps; rerun with record_half_steps enabled");
  if (k < 1 || k > t.n_steps()) throw std::out_of_range("delta step must lie in 1..n");
  if (t.full(k).size() < 2) throw std::invalid_argument("delta estimation needs at least 2 runs");
}

void require_nonnegative(double v, const char *what) {
  if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be nonnegative");
}

double sample_mean(const Vector &v) { return v.mean(); }

double standard_error(const Vector &v) {
  const double n = static_cast<double>(v.size());
  const double m = v.mean();
  const double var = (v.array() - m).square().sum() / (n - 1.0);
  return std::sqrt(var / n);
}

RateCandidate candidate(bool applicable, double h_order, double horizon) {
  RateCandidate c;
  c.applicable = applicable;
  if (!applicable) return c;
  const double steps = horizon / h_order;
  if (!(steps < 9.0e18)) throw std::overflow_error("planned iteration count exceeds int64");
  c.n = std::max<std::int64_t>(1, std::llround(steps));
  c.h = horizon / static_cast<double>(c.n);
  // Keep h n >= T despite rounding in the division.
  while (c.h * static_cast<double>(c.n) < horizon) c.h = std::nextafter(c.h, std::numeric_limits<double>::infinity());
  return c;
}

}  // namespace

DeltaEstimate estimate_delta(const Trajectory &t, const Potential &p, std::uint64_t k, DeltaDefinition definition) {
  check_delta_inputs(t, k, definition);
  const Vector inc = energy_increments(t.full(k), delta_reference(t, k, definition), p);
  return DeltaEstimate{k, sample_mean(inc), standard_error(inc), static_cast<std::size_t>(inc.size())};
}

std::vector<DeltaEstimate> estimate_deltas(const Trajectory &t, const Potential &p, DeltaDefinition definition) {
  std::vector<DeltaEstimate> out;
  for (std::uint64_t k = 1; k <= t.n_steps(); ++k) out.push_back(estimate_delta(t, p, k, definition));
  return out;
}

DeltaSum delta_sum(const Trajectory &t, const Potential &p, DeltaDefinition definition) {
  DeltaSum s;
  s.n_steps = t.n_steps();
  if (s.n_steps == 0) return s;
  Vector per_run = Vector::Zero(static_cast<Eigen::Index>(t.full(0).size()));
  for (std::uint64_t k = 1; k <= t.n_steps(); ++k) {
    check_delta_inputs(t, k, definition);
    per_run += energy_increments(t.full(k), delta_reference(t, k, definition), p);
  }
  s.value = sample_mean(per_run);
  s.standard_error = standard_error(per_run);
  return s;
}

double delta_bound(double grad_lipschitz, double lipschitz, double h, std::size_t dim) {
  require_nonnegative(grad_lipschitz, "M");
  require_nonnegative(lipschitz, "L");
  if (!(h > 0.0)) throw std::invalid_argument("h must be positive");
  const double hd = h * static_cast<double>(dim);
  return grad_lipschitz * hd + lipschitz * std::sqrt(2.0 * hd);
}

std::optional<double> delta_bound(const Potential &p, double h) {
  const auto m = p.grad_lipschitz();
  const auto l = p.lipschitz();
  if (!m && !l) return std::nullopt;
  return delta_bound(m.value_or(0.0), l.value_or(0.0), h, p.dim());
}

double exact_quadratic_delta(const Vector &weights, double h) { return h * weights.sum(); }

double theorem1_bound(double h, std::uint64_t /*n*/, double kl0, double delta_sum) {
  require_nonnegative(h, "h");
  require_nonnegative(kl0, "kl0");
  require_nonnegative(delta_sum, "delta_sum");
  return std::sqrt(6.0 * h * (kl0 + delta_sum));
}

double corollary_bound(double h, std::uint64_t n, double kl0, double delta_sum, double w2_init, double lambda,
                       double t) {
  require_nonnegative(w2_init, "w2_init");
  require_nonnegative(lambda, "lambda");
  const double horizon = h * static_cast<double>(n);
  if (!(t >= 0.0 && t <= horizon))
    throw std::out_of_range("corollary time t must lie in [0, h n] = [0, " + std::to_string(horizon) + "]");
  return theorem1_bound(h, n, kl0, delta_sum) + w2_init * std::exp(-lambda * t);
}

BoundReport make_bound_report(double h, std::uint64_t n, double kl0, double delta_sum, double w2_init,
                              double lambda) {
  BoundReport r;
  r.h = h;
  r.n = n;
  r.horizon = h * static_cast<double>(n);
  r.kl0 = kl0;
  r.delta_sum = delta_sum;
  r.theorem1_bound = theorem1_bound(h, n, kl0, delta_sum);
  r.w2_init = w2_init;
  r.lambda = lambda;
  r.corollary_bound = corollary_bound(h, n, kl0, delta_sum, w2_init, lambda, r.horizon);
  return r;
}

RatePlan plan_rates(double epsilon, std::size_t d, double M, double L, double lambda) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (d < 1) throw std::invalid_argument("d must be >= 1");
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  require_nonnegative(M, "M");
  require_nonnegative(L, "L");
  if (!(M > 0.0) && !(L > 0.0)) throw std::invalid_argument("at least one of M, L must be positive");
  const double dd = static_cast<double>(d);
  const double log_term = std::log(std::sqrt(dd) / epsilon);
  if (!(log_term > 0.0)) throw std::invalid_argument("epsilon must be below sqrt(d)");

  RatePlan plan;
  plan.epsilon = epsilon;
  plan.d = d;
  plan.M = M;
  plan.L = L;
  plan.lambda = lambda;
  plan.log_term = log_term;
  const double horizon = log_term / lambda;
  const double eps2 = epsilon * epsilon;
  plan.smooth = candidate(M > 0.0, M > 0.0 ? eps2 / (dd * M * log_term) : 0.0, horizon);
  plan.nonsmooth =
      candidate(L > 0.0, L > 0.0 ? eps2 * eps2 / (dd * L * L * log_term * log_term) : 0.0, horizon);
  plan.kl = candidate(true, eps2 / dd, horizon);

  plan.h_chosen = plan.kl.h;
  plan.n_chosen = plan.kl.n;
  plan.binding = "kl";
  auto consider = [&](const RateCandidate &c, const char *name) {
    if (c.applicable && c.h < plan.h_chosen) {
      plan.h_chosen = c.h;
      plan.n_chosen = c.n;
      plan.binding = name;
    }
  };
  consider(plan.smooth, "smooth");
  consider(plan.nonsmooth, "nonsmooth");
  return plan;
}

const GaussianMeasure &interpolated_law(const std::vector<GaussianMeasure> &laws, double h, double t) {
  const std::size_t n = (laws.size() - 1) / 2;
  if (!(t >= 0.0) || t > h * static_cast<double>(n) * (1.0 + 1e-12))
    throw std::out_of_range("interpolation time outside [0, h n]");
  if (t == 0.0) return laws.front();
  const auto k = static_cast<std::size_t>(std::ceil(t / h - 1e-9));
  return laws[2 * std::clamp<std::size_t>(k, 1, n)];
}

double exact_discretization_error(const GaussianMeasure &rho0, const Vector &weights, double h,
                                  std::uint64_t n, double t) {
  const auto laws = scheme_recursion(rho0, h, weights, static_cast<std::size_t>(n));
  return gaussian_w2(interpolated_law(laws, h, t), ou_flow(rho0, t, weights));
}

EndToEndReport end_to_end_exact(const SchemeConfig &config, const Potential &p, const GaussianMeasure &rho0) {
  config.validate();
  if (config.algorithm != Algorithm::ProxULA)
    throw UnsupportedOperation("exact end-to-end check models the proximal scheme only");
  const Vector w = p.quadratic_weights();
  const GaussianMeasure target = quadratic_target(w);
  const auto n = config.n_steps;
  const auto laws = scheme_recursion(rho0, config.h, w, static_cast<std::size_t>(n));
  double delta = 0.0;
  for (std::uint64_t k = 0; k < n; ++k)
    delta += potential_energy_gaussian(laws[2 * k + 2], w) - potential_energy_gaussian(laws[2 * k + 1], w);

  EndToEndReport r;
  r.bounds = make_bound_report(config.h, n, gaussian_kl(rho0, target), delta, gaussian_w2(rho0, target),
                               p.strong_convexity());
  r.w2_measured = gaussian_w2(laws.back(), target);
  r.method = "exact_gaussian";
  r.bound_dominates = r.w2_measured <= r.bounds.corollary_bound;
  return r;
}

EndToEndReport end_to_end_sampled(const SchemeConfig &config, const Potential &p, const InitialLaw &init,
                                  const PointCloud &target_samples, double kl0, double w2_init,
                                  AssignmentOptions options) {
  SchemeConfig cfg = config;
  cfg.record_half_steps = true;
  cfg.algorithm = Algorithm::ProxULA;
  const Trajectory traj = run(cfg, p, init);
  const DeltaSum ds = delta_sum(traj, p);

  EndToEndReport r;
  r.bounds = make_bound_report(cfg.h, cfg.n_steps, kl0, std::max(0.0, ds.value), w2_init, p.strong_convexity());
  const auto est = w2_auto(PointCloud::from_ensemble(traj.final_ensemble()), target_samples, 256, cfg.seed, options);
  r.w2_measured = est.value;
  r.w2_standard_error = est.standard_error;
  r.method = to_string(est.method);
  r.bound_dominates = r.w2_measured - 2.0 * est.standard_error.value_or(0.0) <= r.bounds.corollary_bound;
  return r;
}

}  // namespace proxlmc
