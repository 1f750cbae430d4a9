#include <gtest/gtest.h>

#include <cmath>

#include "proxlmc/diagnostics.hpp"
#include "support.hpp"

using namespace proxlmc;

namespace {

GaussianMeasure normal1(double m, double var) { return GaussianMeasure::isotropic(Vector::Constant(1, m), var); }

SchemeConfig config(double h, std::uint64_t n, std::size_t particles, std::uint64_t seed = 1) {
  SchemeConfig c;
  c.h = h;
  c.n_steps = n;
  c.n_particles = particles;
  c.seed = seed;
  c.record_half_steps = true;
  return c;
}

Trajectory quad_run(std::size_t d, double h, std::uint64_t n, std::size_t particles, std::uint64_t seed = 1) {
  return run(config(h, n, particles, seed), Potential::isotropic_quadratic(d, 1.0),
             InitialLaw::isotropic_gaussian(Vector::Constant(static_cast<Eigen::Index>(d), 1.0), 2.0));
}

}  // namespace

TEST(EstimateDelta, QuadraticEqualsHD) {
  const auto t = quad_run(3, 0.05, 4, 10000, 3);
  for (std::uint64_t k = 1; k <= 4; ++k) {
    const auto e = estimate_delta(t, Potential::isotropic_quadratic(3, 1.0), k);
    EXPECT_EQ(e.n_runs, 10000u);
    EXPECT_EQ(e.step, k);
    EXPECT_NEAR(e.delta_hat, 0.15, 4.0 * e.standard_error) << "k=" << k;
  }
}

TEST(EstimateDelta, NoiseOffIsExactlyZero) {
  auto cfg = config(0.1, 3, 50);
  cfg.noise_scale = 0.0;
  const auto p = Potential::composite(Potential::isotropic_quadratic(2, 1.0), Potential::l1(2, 1.0));
  const auto t = run(cfg, p, InitialLaw::isotropic_gaussian(Vector::Ones(2), 1.0));
  for (const auto &e : estimate_deltas(t, p)) {
    EXPECT_EQ(e.delta_hat, 0.0);
    EXPECT_EQ(e.standard_error, 0.0);
  }
}

TEST(EstimateDelta, MatchesGaussianRecursion) {
  const Vector w = (Vector(2) << 0.5, 2.0).finished();
  const auto p = Potential::diagonal_quadratic(w);
  const auto init = InitialLaw::diagonal_gaussian((Vector(2) << 2.0, -1.0).finished(), (Vector(2) << 4.0, 1.0).finished());
  const auto t = run(config(0.1, 5, 20000, 4), p, init);
  const auto laws = scheme_recursion(*init.gaussian(), 0.1, w, 5);
  for (std::uint64_t k = 1; k <= 5; ++k) {
    const double exact = potential_energy_gaussian(laws[2 * k], w) - potential_energy_gaussian(laws[2 * k - 1], w);
    const auto half = estimate_delta(t, p, k);
    EXPECT_NEAR(half.delta_hat, exact, 4.0 * half.standard_error);
    EXPECT_NEAR(exact, exact_quadratic_delta(w, 0.1), 1e-14);
    // The full-step variant differences whole steps and includes the transport decrease.
    const double exact_full = potential_energy_gaussian(laws[2 * k], w) - potential_energy_gaussian(laws[2 * k - 2], w);
    const auto full = estimate_delta(t, p, k, DeltaDefinition::FullStep);
    EXPECT_NEAR(full.delta_hat, exact_full, 4.0 * full.standard_error);
  }
}

TEST(EstimateDelta, Errors) {
  SchemeConfig cfg = config(0.1, 2, 10);
  cfg.record_half_steps = false;
  const auto p = Potential::isotropic_quadratic(1, 1.0);
  const auto t = run(cfg, p, InitialLaw::isotropic_gaussian(Vector::Zero(1), 1.0));
  try {
    estimate_delta(t, p, 1);
    FAIL() << "expected an error";
  } catch (const std::logic_error &e) {
    EXPECT_NE(std::string(e.what()).find("record_half_steps"), std::string::npos);
  }
  // The full-step variant does not need half steps.
  EXPECT_NO_THROW(estimate_delta(t, p, 1, DeltaDefinition::FullStep));
  const auto good = quad_run(1, 0.1, 2, 10);
  EXPECT_THROW(estimate_delta(good, p, 0), std::out_of_range);
  EXPECT_THROW(estimate_delta(good, p, 3), std::out_of_range);
  EXPECT_THROW(estimate_delta(quad_run(1, 0.1, 2, 1), p, 1), std::invalid_argument);
}

TEST(DeltaBound, Examples) {
  EXPECT_NEAR(*delta_bound(Potential::isotropic_quadratic(1, 1.0), 0.1), 0.1, 1e-15);
  EXPECT_NEAR(exact_quadratic_delta(Vector::Ones(1), 0.1), 0.1, 1e-15);
  EXPECT_NEAR(*delta_bound(Potential::l1(4, 1.0), 0.1), 2.0 * std::sqrt(0.8), 1e-15);
  EXPECT_NEAR(*delta_bound(Potential::l1(4, 1.0), 0.1), 1.789, 5e-4);
  EXPECT_DOUBLE_EQ(delta_bound(0.0, 0.0, 0.1, 3), 0.0);
  EXPECT_THROW(delta_bound(-1.0, 0.0, 0.1, 3), std::invalid_argument);
}

TEST(DeltaBound, L1EstimateBelowBound) {
  const auto p = Potential::l1(4, 1.0);
  const auto t = run(config(0.1, 3, 10000, 6), p, InitialLaw::isotropic_gaussian(Vector::Zero(4), 1.0));
  const double bound = *delta_bound(p, 0.1);
  for (const auto &e : estimate_deltas(t, p)) EXPECT_LE(e.delta_hat - 3.0 * e.standard_error, bound);
}

TEST(DeltaSum, QuadraticAccumulatesNHD) {
  const auto t = quad_run(2, 0.1, 6, 20000, 8);
  const auto s = delta_sum(t, Potential::isotropic_quadratic(2, 1.0));
  EXPECT_EQ(s.n_steps, 6u);
  EXPECT_NEAR(s.value, 6 * 0.1 * 2, 4.0 * s.standard_error);
  double total = 0.0;
  for (const auto &e : estimate_deltas(t, Potential::isotropic_quadratic(2, 1.0))) total += e.delta_hat;
  EXPECT_NEAR(s.value, total, 1e-12);
}

TEST(Bounds, WorkedExamples) {
  const double kl0 = gaussian_kl(normal1(2, 4), normal1(0, 1));
  const double w2_init = gaussian_w2(normal1(2, 4), normal1(0, 1));
  EXPECT_NEAR(w2_init, std::sqrt(5.0), 1e-15);
  const double t1 = theorem1_bound(0.1, 10, kl0, 1.0);
  EXPECT_NEAR(t1, std::sqrt(0.6 * (kl0 + 1.0)), 1e-15);
  EXPECT_NEAR(t1, 1.5113, 5e-5);
  EXPECT_DOUBLE_EQ(theorem1_bound(0.1, 10, 0.0, 0.0), 0.0);
  const double c = corollary_bound(0.1, 10, kl0, 1.0, w2_init, 1.0, 1.0);
  EXPECT_NEAR(c, t1 + std::sqrt(5.0) * std::exp(-1.0), 1e-15);
  EXPECT_NEAR(c, 2.3339, 5e-5);
  EXPECT_THROW(corollary_bound(0.1, 10, kl0, 1.0, w2_init, 1.0, 1.5), std::out_of_range);
  EXPECT_THROW(corollary_bound(0.1, 10, kl0, 1.0, w2_init, 1.0, -0.1), std::out_of_range);
  EXPECT_THROW(theorem1_bound(0.1, 10, -1.0, 0.0), std::invalid_argument);
}

TEST(Bounds, Monotonicity) {
  proxlmc::testing::Gen gen(40);
  for (int trial = 0; trial < 200; ++trial) {
    const double h = gen.uniform(0.001, 1.0), kl0 = gen.uniform(0, 5), ds = gen.uniform(0, 5);
    const double base = theorem1_bound(h, 10, kl0, ds);
    const double bump = gen.uniform(1e-6, 1.0);
    EXPECT_GT(theorem1_bound(h + bump, 10, kl0, ds), base);
    EXPECT_GT(theorem1_bound(h, 10, kl0 + bump, ds), base);
    EXPECT_GT(theorem1_bound(h, 10, kl0, ds + bump), base);
    const double w0 = gen.uniform(0, 3);
    EXPECT_EQ(corollary_bound(h, 10, kl0, ds, w0, 1.0, 0.0), base + w0);
    const auto r = make_bound_report(h, 10, kl0, ds, w0, 0.5);
    EXPECT_GE(r.corollary_bound, r.theorem1_bound);
    EXPECT_DOUBLE_EQ(r.horizon, 10 * h);
  }
}

TEST(Planner, WorkedExample) {
  const auto plan = plan_rates(0.1, 10, 1.0, 0.0, 1.0);
  EXPECT_NEAR(plan.log_term, std::log(std::sqrt(10.0) / 0.1), 1e-15);
  EXPECT_NEAR(plan.log_term, 3.4539, 5e-5);
  EXPECT_TRUE(plan.smooth.applicable);
  EXPECT_FALSE(plan.nonsmooth.applicable);
  EXPECT_EQ(plan.smooth.n, 11929);
  EXPECT_NEAR(plan.smooth.h, 2.895e-4, 5e-7);
  EXPECT_EQ(plan.binding, "smooth");
  EXPECT_EQ(plan.n_chosen, 11929);
  EXPECT_EQ(plan.kl.n, llround(plan.log_term / 1e-3));
}

TEST(Planner, HorizonIsCovered) {
  proxlmc::testing::Gen gen(41);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 1 + gen.index(50);
    const double eps = gen.uniform(0.01, 0.9) * std::sqrt(static_cast<double>(d));
    const double M = trial % 3 == 0 ? 0.0 : gen.uniform(0.1, 5), L = trial % 3 == 1 ? 0.0 : gen.uniform(0.1, 5);
    const double lambda = gen.uniform(0.1, 3);
    const auto plan = plan_rates(eps, d, M, L, lambda);
    const double horizon = plan.log_term / lambda;
    EXPECT_GE(plan.h_chosen * static_cast<double>(plan.n_chosen), horizon);
    for (const auto *c : {&plan.smooth, &plan.nonsmooth, &plan.kl}) {
      if (!c->applicable) continue;
      EXPECT_GE(c->h * static_cast<double>(c->n), horizon);
      EXPECT_LE(plan.h_chosen, c->h);
      EXPECT_GE(plan.n_chosen, c->n);
    }
  }
}

TEST(Planner, DimensionScaling) {
  for (std::size_t d : {10u, 20u, 50u}) {
    const double smooth = static_cast<double>(plan_rates(1e-3, 2 * d, 1.0, 0.0, 1.0).smooth.n) /
                          static_cast<double>(plan_rates(1e-3, d, 1.0, 0.0, 1.0).smooth.n);
    EXPECT_GE(smooth, 1.9);
    EXPECT_LE(smooth, 2.3);
    const auto l = [](std::size_t dd) { return std::sqrt(static_cast<double>(dd)); };
    const double nonsmooth = static_cast<double>(plan_rates(1e-3, 2 * d, 0.0, l(2 * d), 1.0).nonsmooth.n) /
                             static_cast<double>(plan_rates(1e-3, d, 0.0, l(d), 1.0).nonsmooth.n);
    EXPECT_GE(nonsmooth, 3.7);
    EXPECT_LE(nonsmooth, 4.6);
  }
}

TEST(Planner, Errors) {
  EXPECT_THROW(plan_rates(std::sqrt(10.0), 10, 1, 0, 1), std::invalid_argument);
  EXPECT_THROW(plan_rates(5.0, 10, 1, 0, 1), std::invalid_argument);
  EXPECT_THROW(plan_rates(0.0, 10, 1, 0, 1), std::invalid_argument);
  EXPECT_THROW(plan_rates(0.1, 10, 0, 0, 1), std::invalid_argument);
  EXPECT_THROW(plan_rates(0.1, 10, 1, 0, 0), std::invalid_argument);
}

TEST(DiagnosticsProperty, DeltaEstimatesNotBelowNoise) {
  const auto p = Potential::composite(Potential::isotropic_quadratic(3, 1.0), Potential::l1(3, 0.5));
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto t = run(config(0.05, 4, 2000, seed), p, InitialLaw::isotropic_gaussian(Vector::Ones(3), 1.0));
    for (const auto &e : estimate_deltas(t, p)) EXPECT_GE(e.delta_hat, -4.0 * e.standard_error);
  }
}

TEST(DiagnosticsProperty, CumulativeDeltaMonotone) {
  const double h = 0.1;
  const auto laws = scheme_recursion(normal1(2, 4), h, 1.0, 20);
  double cumulative = 0.0;
  for (std::size_t k = 0; k < 20; ++k) {
    const double delta = potential_energy_gaussian(laws[2 * k + 2], 1.0) - potential_energy_gaussian(laws[2 * k + 1], 1.0);
    ASSERT_GE(delta, 0.0);
    cumulative += delta;
  }
  EXPECT_NEAR(cumulative, 20 * h, 1e-12);

  const auto p = Potential::l1(2, 1.0);
  const auto t = run(config(0.1, 8, 4000, 2), p, InitialLaw::isotropic_gaussian(Vector::Zero(2), 4.0));
  double running = 0.0;
  for (const auto &e : estimate_deltas(t, p)) {
    const double next = running + e.delta_hat;
    EXPECT_GE(next, running - 4.0 * e.standard_error);
    running = next;
  }
}

TEST(DiagnosticsProperty, BoundDominatesExactErrorOnGrid) {
  for (const auto &rho0 : {normal1(2, 4), normal1(0, 9), normal1(-1, 1)}) {
    const double kl0 = gaussian_kl(rho0, normal1(0, 1));
    for (double h : {0.2, 0.1, 0.05, 0.025}) {
      const auto n_max = static_cast<std::uint64_t>(std::llround(2.0 / h));
      const auto laws = scheme_recursion(rho0, h, 1.0, n_max);
      for (std::uint64_t n = 1; n <= n_max; ++n) {
        const double bound = theorem1_bound(h, n, kl0, static_cast<double>(n) * h);
        for (std::uint64_t k = 0; k <= 2 * n; ++k) {
          const double t = 0.5 * h * static_cast<double>(k);
          const std::vector<GaussianMeasure> prefix(laws.begin(), laws.begin() + static_cast<std::ptrdiff_t>(2 * n + 1));
          const double err = gaussian_w2(interpolated_law(prefix, h, t), ou_flow(rho0, t, 1.0));
          ASSERT_LE(err, bound) << "h=" << h << " n=" << n << " t=" << t;
        }
      }
    }
  }
}

TEST(EndToEnd, ExactQuadraticExample) {
  SchemeConfig cfg = config(0.1, 10, 1);
  const auto r = end_to_end_exact(cfg, Potential::isotropic_quadratic(1, 1.0), normal1(2, 4));
  EXPECT_EQ(r.method, "exact_gaussian");
  EXPECT_NEAR(r.bounds.delta_sum, 1.0, 1e-12);
  EXPECT_NEAR(r.bounds.theorem1_bound, 1.5113, 5e-5);
  EXPECT_NEAR(r.bounds.corollary_bound, 2.3339, 5e-5);
  EXPECT_LE(r.w2_measured, 2.3339);
  EXPECT_TRUE(r.bound_dominates);
  EXPECT_THROW(end_to_end_exact(cfg, Potential::l1(1, 1.0), normal1(2, 4)), UnsupportedOperation);
}

TEST(EndToEnd, StartingAtTarget) {
  const auto pi = normal1(0, 1);
  for (double h : {0.3, 0.1, 0.01}) {
    const std::uint64_t n = 10;
    const auto laws = scheme_recursion(pi, h, 1.0, n);
    const double bound = theorem1_bound(h, n, 0.0, static_cast<double>(n) * h);
    for (std::uint64_t k = 1; k <= n; ++k) {
      const double t = h * static_cast<double>(k);
      const double err = exact_discretization_error(pi, Vector::Ones(1), h, n, t);
      EXPECT_NEAR(err, gaussian_w2(laws[2 * k], pi), 1e-14);
      EXPECT_LT(err, bound);
    }
  }
}

TEST(EndToEnd, SampledComposite) {
  const auto p = Potential::composite(Potential::isotropic_quadratic(1, 1.0), Potential::l1(1, 0.5));
  SchemeConfig cfg = config(0.1, 10, 2000, 5);
  const auto init = InitialLaw::isotropic_gaussian(Vector::Constant(1, 2.0), 1.0);
  // Stand-in target sample; the check only needs a cloud of matching size.
  const RowMatrix target = InitialLaw::isotropic_gaussian(Vector::Zero(1), 0.6).sample(2000, 9).particles;
  const auto r = end_to_end_sampled(cfg, p, init, PointCloud(target), 1.5, 2.0);
  EXPECT_EQ(r.method, "exact_1d");
  EXPECT_GT(r.bounds.delta_sum, 0.0);
  EXPECT_TRUE(r.bound_dominates);
}

TEST(Interpolation, PiecewiseConstantLaw) {
  const auto laws = scheme_recursion(normal1(2, 4), 0.1, 1.0, 3);
  EXPECT_EQ(&interpolated_law(laws, 0.1, 0.0), &laws[0]);
  EXPECT_EQ(&interpolated_law(laws, 0.1, 0.05), &laws[2]);
  EXPECT_EQ(&interpolated_law(laws, 0.1, 0.1), &laws[2]);
  EXPECT_EQ(&interpolated_law(laws, 0.1, 0.15), &laws[4]);
  EXPECT_EQ(&interpolated_law(laws, 0.1, 0.3), &laws[6]);
  EXPECT_THROW(interpolated_law(laws, 0.1, 0.31), std::out_of_range);
}
