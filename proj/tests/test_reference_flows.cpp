#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "proxlmc/reference_flows.hpp"
#include "support.hpp"

using namespace proxlmc;
using proxlmc::testing::Gen;

namespace {

GaussianMeasure normal1(double m, double var) { return GaussianMeasure::isotropic(Vector::Constant(1, m), var); }

Matrix random_rotation(Gen &gen, std::size_t d) {
  Matrix a(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (auto &x : a.reshaped()) x = gen.normal();
  Eigen::HouseholderQR<Matrix> qr(a);
  return qr.householderQ();
}

GaussianMeasure rotate(const GaussianMeasure &g, const Matrix &q) {
  Matrix cov = q * g.covariance() * q.transpose();
  cov = 0.5 * (cov + cov.transpose());
  return GaussianMeasure(q * g.mean(), cov);
}

}  // namespace

TEST(GaussianMeasure, Validation) {
  EXPECT_THROW(GaussianMeasure(Vector::Zero(2), Matrix::Identity(3, 3)), DimensionMismatch);
  Matrix asym = Matrix::Identity(2, 2);
  asym(0, 1) = 0.5;
  EXPECT_THROW(GaussianMeasure(Vector::Zero(2), asym), std::invalid_argument);
  Matrix indefinite(2, 2);
  indefinite << 1, 2, 2, 1;
  EXPECT_THROW(GaussianMeasure(Vector::Zero(2), indefinite), std::invalid_argument);
  EXPECT_THROW(GaussianMeasure::diagonal(Vector::Zero(2), Vector::Constant(2, -1.0)), std::invalid_argument);
  EXPECT_TRUE(GaussianMeasure::standard(3).is_diagonal());
}

TEST(GaussianJson, RoundTripDiagonalAndFull) {
  Gen gen(1);
  for (const auto &g : {gen.diagonal_gaussian(3), gen.full_gaussian(3)}) {
    const auto back = gaussian_from_json(gaussian_to_json(g));
    EXPECT_EQ(back.mean(), g.mean());
    EXPECT_EQ(back.covariance(), g.covariance());
  }
  const auto j = nlohmann::json::parse(R"({"mean": [1, 2], "cov_diag": [3, 4]})");
  const auto g = gaussian_from_json(j);
  EXPECT_DOUBLE_EQ(g.covariance()(1, 1), 4.0);
  EXPECT_THROW(gaussian_from_json(nlohmann::json::parse(R"({"mean": [1]})")), std::invalid_argument);
  EXPECT_THROW(gaussian_from_json(nlohmann::json::parse(R"({"cov_diag": [1]})")), std::invalid_argument);
}

TEST(ProxPushforward, Example) {
  const auto g = prox_pushforward_quadratic(normal1(2, 4), 0.1, 1.0);
  EXPECT_NEAR(g.mean()[0], 2.0 / 1.1, 1e-15);
  EXPECT_NEAR(g.covariance()(0, 0), 4.0 / 1.21, 1e-14);
  EXPECT_NEAR(g.mean()[0], 1.8182, 5e-5);
  EXPECT_NEAR(g.covariance()(0, 0), 3.3058, 5e-5);
}

TEST(ProxPushforward, ZeroStepIsIdentityAndCenteredStaysCentered) {
  Gen gen(2);
  const auto g = gen.full_gaussian(3);
  const auto same = prox_pushforward_quadratic(g, 0.0, 1.0);
  EXPECT_EQ(same.mean(), g.mean());
  EXPECT_EQ(same.covariance(), g.covariance());
  const auto centered = prox_pushforward_quadratic(GaussianMeasure::standard(2), 0.3, 2.0);
  EXPECT_EQ(centered.mean(), Vector::Zero(2));
}

TEST(ProxPushforward, DiagonalWeightsOnFullCovariance) {
  Gen gen(3);
  const auto g = gen.full_gaussian(3);
  const Vector w = gen.positive(3, 0.5, 2.0);
  const double h = 0.2;
  const auto out = prox_pushforward_quadratic(g, h, w);
  const Vector s = (1.0 + h * w.array()).inverse();
  EXPECT_LE((out.mean() - s.asDiagonal() * g.mean()).norm(), 1e-14);
  EXPECT_LE((out.covariance() - s.asDiagonal() * g.covariance() * s.asDiagonal()).norm(), 1e-13);
}

TEST(HeatConvolve, Examples) {
  EXPECT_DOUBLE_EQ(heat_convolve(GaussianMeasure::standard(1), 0.5).covariance()(0, 0), 2.0);
  const auto g = normal1(1.5, 3.0);
  EXPECT_EQ(heat_convolve(g, 0.0).covariance(), g.covariance());
  const auto two = heat_convolve(GaussianMeasure::isotropic(Vector::Ones(2), 1.0), 0.1);
  EXPECT_EQ(two.mean(), Vector::Ones(2));
  EXPECT_NEAR((two.covariance() - 1.2 * Matrix::Identity(2, 2)).norm(), 0.0, 1e-15);
  EXPECT_THROW(heat_convolve(g, -1.0), std::invalid_argument);
}

TEST(SchemeRecursion, OneStep) {
  const auto laws = scheme_recursion(normal1(2, 4), 0.1, 1.0, 1);
  ASSERT_EQ(laws.size(), 3u);
  EXPECT_NEAR(laws[1].mean()[0], 2.0 / 1.1, 1e-15);
  EXPECT_NEAR(laws[1].covariance()(0, 0), 4.0 / 1.21, 1e-14);
  EXPECT_NEAR(laws[2].mean()[0], 1.8182, 5e-5);
  EXPECT_NEAR(laws[2].covariance()(0, 0), 3.5058, 5e-5);
}

TEST(SchemeRecursion, FixedPointVariance) {
  EXPECT_NEAR(scheme_fixed_point_variance(0.1, 1.0), 1.152381, 5e-7);
  // sigma^2 = sigma^2 / (1 + h)^2 + 2h solved by hand: 2 * 1.21 / 2.1.
  EXPECT_NEAR(scheme_fixed_point_variance(0.1, 1.0), 2.42 / 2.1, 1e-15);
  for (double lambda : {0.5, 1.0, 3.0}) EXPECT_NEAR(scheme_fixed_point_variance(1e-8, lambda), 1.0 / lambda, 1e-7);
  const auto laws = scheme_recursion(normal1(2, 4), 0.1, 1.0, 400);
  EXPECT_NEAR(laws.back().covariance()(0, 0), scheme_fixed_point_variance(0.1, 1.0), 1e-12);
  EXPECT_NEAR(laws.back().mean()[0], 0.0, 1e-12);
}

TEST(OuFlow, Examples) {
  const auto g0 = normal1(2, 4);
  const auto at0 = ou_flow(g0, 0.0, 1.0);
  EXPECT_EQ(at0.mean(), g0.mean());
  EXPECT_EQ(at0.covariance(), g0.covariance());
  const auto g = ou_flow(g0, std::log(2.0), 1.0);
  EXPECT_NEAR(g.mean()[0], 1.0, 1e-15);
  EXPECT_NEAR(g.covariance()(0, 0), 1.75, 1e-15);
  const auto late = ou_flow(g0, 60.0, 2.0);
  EXPECT_NEAR(late.mean()[0], 0.0, 1e-15);
  EXPECT_NEAR(late.covariance()(0, 0), 0.5, 1e-15);
}

TEST(OuFlow, Semigroup) {
  Gen gen(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector w = gen.positive(3, 0.2, 3.0);
    const auto g = trial % 2 ? gen.full_gaussian(3) : gen.diagonal_gaussian(3);
    const double s = gen.uniform(0.0, 2.0), t = gen.uniform(0.0, 2.0);
    const auto two = ou_flow(ou_flow(g, s, w), t, w);
    const auto one = ou_flow(g, s + t, w);
    EXPECT_LE((two.mean() - one.mean()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((two.covariance() - one.covariance()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(OuFlow, SatisfiesFokkerPlanckMomentEquations) {
  // dm/dt = -W m, dS/dt = -W S - S W + 2 I, checked by central differences.
  Gen gen(6);
  const Vector w = gen.positive(3, 0.5, 2.0);
  const auto g = gen.full_gaussian(3);
  const double t = 0.7, dt = 1e-5;
  const auto gp = ou_flow(g, t + dt, w), gm = ou_flow(g, t - dt, w), gt = ou_flow(g, t, w);
  const Vector dm = (gp.mean() - gm.mean()) / (2 * dt);
  const Matrix ds = (gp.covariance() - gm.covariance()) / (2 * dt);
  EXPECT_LE((dm + w.asDiagonal() * gt.mean()).norm(), 1e-7);
  const Matrix rhs = -(w.asDiagonal() * gt.covariance()) - gt.covariance() * w.asDiagonal() + 2.0 * Matrix::Identity(3, 3);
  EXPECT_LE((ds - rhs).norm(), 1e-6);
}

TEST(GaussianW2, Examples) {
  EXPECT_NEAR(gaussian_w2(GaussianMeasure::standard(2), GaussianMeasure::isotropic(Vector::Unit(2, 0) * 3.0, 1.0)),
              3.0, 1e-15);
  EXPECT_NEAR(gaussian_w2(normal1(0, 4), normal1(0, 1)), 1.0, 1e-15);
  Gen gen(7);
  const auto g = gen.full_gaussian(3);
  EXPECT_NEAR(gaussian_w2(g, g), 0.0, 1e-7);
  EXPECT_THROW(gaussian_w2(GaussianMeasure::standard(1), GaussianMeasure::standard(2)), DimensionMismatch);
}

TEST(GaussianW2, RotationInvarianceLinksDiagonalAndFullPaths) {
  Gen gen(8);
  for (int trial = 0; trial < 30; ++trial) {
    const auto a = gen.diagonal_gaussian(3), b = gen.diagonal_gaussian(3);
    const Matrix q = random_rotation(gen, 3);
    const auto ra = rotate(a, q), rb = rotate(b, q);
    ASSERT_FALSE(ra.is_diagonal());
    EXPECT_NEAR(gaussian_w2(ra, rb), gaussian_w2(a, b), 1e-9);
  }
}

TEST(GaussianW2, CommutingCovariancesClosedForm) {
  // Covariances sharing eigenvectors: W2^2 = |dm|^2 + sum (sqrt(a_i) - sqrt(b_i))^2.
  Gen gen(9);
  const Matrix q = random_rotation(gen, 4);
  const Vector ea = gen.positive(4, 0.2, 4.0), eb = gen.positive(4, 0.2, 4.0);
  const Vector ma = gen.vector(4), mb = gen.vector(4);
  const GaussianMeasure a(ma, q * ea.asDiagonal() * q.transpose());
  const GaussianMeasure b(mb, q * eb.asDiagonal() * q.transpose());
  const double expected =
      std::sqrt((ma - mb).squaredNorm() + (ea.array().sqrt() - eb.array().sqrt()).square().sum());
  EXPECT_NEAR(gaussian_w2(a, b), expected, 1e-9);
}

TEST(GaussianKl, Examples) {
  EXPECT_NEAR(gaussian_kl(GaussianMeasure::standard(2), GaussianMeasure::standard(2)), 0.0, 1e-15);
  EXPECT_NEAR(gaussian_kl(normal1(2, 4), normal1(0, 1)), 0.5 * (7.0 - std::log(4.0)), 1e-15);
  EXPECT_NEAR(gaussian_kl(normal1(2, 4), normal1(0, 1)), 2.8069, 5e-5);
  const double one = gaussian_kl(normal1(2, 4), normal1(0, 1));
  const auto five = GaussianMeasure::isotropic(Vector::Constant(5, 2.0), 4.0);
  EXPECT_NEAR(gaussian_kl(five, GaussianMeasure::standard(5)), 5.0 * one, 1e-13);
}

TEST(GaussianKl, FullCovarianceMatchesFormula) {
  Gen gen(10);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = gen.full_gaussian(3), b = gen.full_gaussian(3);
    const Matrix bi = b.covariance().inverse();
    const Vector dm = b.mean() - a.mean();
    const double expected = 0.5 * ((bi * a.covariance()).trace() + dm.dot(bi * dm) - 3.0 +
                                   std::log(b.covariance().determinant() / a.covariance().determinant()));
    EXPECT_NEAR(gaussian_kl(a, b), expected, 1e-9 * (1.0 + expected));
  }
}

TEST(Functionals, EntropyAndPotentialEnergy) {
  EXPECT_NEAR(entropy_gaussian(GaussianMeasure::standard(1)), -0.5 * std::log(2.0 * std::numbers::pi * std::exp(1.0)),
              1e-15);
  EXPECT_NEAR(entropy_gaussian(GaussianMeasure::standard(1)), -1.41894, 5e-6);
  EXPECT_DOUBLE_EQ(potential_energy_gaussian(GaussianMeasure::standard(4), 1.0), 2.0);
  EXPECT_NEAR(log_partition_quadratic(3, 2.0), 1.5 * std::log(std::numbers::pi), 1e-15);
}

TEST(Functionals, KlDecomposition) {
  Gen gen(11);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 1 + trial % 4;
    const Vector w = gen.positive(d, 0.3, 3.0);
    const auto a = trial % 2 ? gen.full_gaussian(d) : gen.diagonal_gaussian(d);
    const double lhs = gaussian_kl(a, quadratic_target(w));
    const double rhs = entropy_gaussian(a) + potential_energy_gaussian(a, w) + log_partition_quadratic(w);
    EXPECT_NEAR(lhs, rhs, 1e-10 * (1.0 + std::abs(lhs)));
  }
}

TEST(Contraction, OuFlowDecaysToTarget) {
  Gen gen(12);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 1 + trial % 3;
    const Vector w = gen.positive(d, 0.5, 2.0);
    const double lambda = w.minCoeff();
    const auto pi = quadratic_target(w);
    const auto g0 = trial % 2 ? gen.full_gaussian(d) : gen.diagonal_gaussian(d);
    const double w0 = gaussian_w2(g0, pi), kl0 = gaussian_kl(g0, pi);
    for (int k = 0; k <= 50; ++k) {
      const double t = 0.1 * k;
      const auto gt = ou_flow(g0, t, w);
      EXPECT_GE(w0 * std::exp(-lambda * t) - gaussian_w2(gt, pi), -1e-12);
      EXPECT_GE(kl0 * std::exp(-2.0 * lambda * t) - gaussian_kl(gt, pi), -1e-12);
    }
  }
}

TEST(Delta, RecursionEnergyIncreaseIsHTraceW) {
  Gen gen(13);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 1 + trial % 4;
    const Vector w = gen.positive(d, 0.3, 3.0);
    const double h = gen.uniform(0.01, 0.5);
    const auto laws = scheme_recursion(gen.diagonal_gaussian(d), h, w, 5);
    for (std::size_t k = 0; k < 5; ++k) {
      const double delta = potential_energy_gaussian(laws[2 * k + 2], w) - potential_energy_gaussian(laws[2 * k + 1], w);
      EXPECT_NEAR(delta, h * w.sum(), 1e-12 * (1.0 + delta));
      EXPECT_GE(delta, 0.0);
    }
  }
  // Unit isotropic case: exactly h d.
  const auto laws = scheme_recursion(GaussianMeasure::isotropic(Vector::Ones(3), 2.0), 0.05, 1.0, 1);
  EXPECT_NEAR(potential_energy_gaussian(laws[2], 1.0) - potential_energy_gaussian(laws[1], 1.0), 0.15, 1e-14);
}

TEST(Geodesic, ConstantSpeed) {
  Gen gen(14);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = trial % 2 ? gen.full_gaussian(3) : gen.diagonal_gaussian(3);
    const auto b = trial % 2 ? gen.full_gaussian(3) : gen.diagonal_gaussian(3);
    const double total = gaussian_w2(a, b);
    for (auto [s, t] : {std::pair{0.0, 0.5}, {0.5, 1.0}, {0.25, 0.75}}) {
      EXPECT_NEAR(gaussian_w2(gaussian_geodesic(a, b, s), gaussian_geodesic(a, b, t)), (t - s) * total, 1e-7);
    }
  }
}

TEST(Geodesic, DisplacementConvexityOfPotentialEnergy) {
  Gen gen(15);
  for (int trial = 0; trial < 50; ++trial) {
    const Vector w = gen.positive(3, 0.5, 3.0);
    const double lambda = w.minCoeff();
    const auto a = gen.diagonal_gaussian(3), b = gen.diagonal_gaussian(3);
    const double w2 = gaussian_w2(a, b);
    for (int k = 0; k <= 10; ++k) {
      const double t = 0.1 * k;
      const auto mt = gaussian_geodesic(a, b, t);
      // Linear interpolation of means and standard deviations.
      EXPECT_LE((mt.mean() - ((1 - t) * a.mean() + t * b.mean())).norm(), 1e-13);
      const double chord = (1 - t) * potential_energy_gaussian(a, w) + t * potential_energy_gaussian(b, w) -
                           0.5 * lambda * t * (1 - t) * w2 * w2;
      EXPECT_LE(potential_energy_gaussian(mt, w), chord + 1e-12);
    }
  }
}

TEST(DiscreteEvi, SpecialCases) {
  const auto laws = scheme_recursion(normal1(2, 4), 0.1, 1.0, 5);
  for (std::size_t k = 0; k < 5; ++k) {
    const auto step = scheme_step(laws, k);
    EXPECT_GE(discrete_evi_check(step, step.before, 1.0, 0.1).slack, 0.0);
    const auto r = discrete_evi_check(step, normal1(0, 1), 1.0, 0.1);
    EXPECT_GE(r.slack, 0.0);
    EXPECT_DOUBLE_EQ(r.slack, r.rhs - r.lhs);
  }
  EXPECT_THROW(scheme_step(laws, 5), std::out_of_range);
}

TEST(DiscreteEvi, GridAndMultivariate) {
  for (double h : {0.2, 0.1, 0.05}) {
    const auto laws = scheme_recursion(normal1(2, 4), h, 1.0, 20);
    for (std::size_t k = 0; k < 20; ++k) {
      const auto step = scheme_step(laws, k);
      for (double mu : {-2.0, -1.0, 0.0, 1.0, 2.0})
        for (int j = 0; j <= 8; ++j)
          ASSERT_GE(discrete_evi_check(step, normal1(mu, 0.25 * std::pow(2.0, 0.5 * j)), 1.0, h).slack, -1e-9);
    }
  }
  Gen gen(16);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector w = gen.positive(3, 0.5, 2.0);
    const double h = gen.uniform(0.02, 0.3);
    const auto laws = scheme_recursion(gen.full_gaussian(3), h, w, 4);
    for (std::size_t k = 0; k < 4; ++k)
      EXPECT_GE(discrete_evi_check(scheme_step(laws, k), gen.full_gaussian(3), w, h).slack, -1e-9);
  }
}
