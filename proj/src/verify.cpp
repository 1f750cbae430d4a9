#include "proxlmc/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <random>
#include <sstream>
#include <stdexcept>

#include "proxlmc/diagnostics.hpp"
#include "proxlmc/random.hpp"
#include "proxlmc/reference_flows.hpp"
#include "proxlmc/samplers.hpp"
#include "proxlmc/wasserstein.hpp"

namespace proxlmc {
namespace {

// Collects sub-check outcomes; the criterion passes iff all of them do.
class Checks {
 public:
  void check(bool ok, const std::string &line) {
    all_ &= ok;
    lines_.push_back((ok ? "ok    " : "FAIL  ") + line);
  }
  void note(const std::string &line) { lines_.push_back("      " + line); }
  bool passed() const { return all_; }
  std::vector<std::string> take() { return std::move(lines_); }

 private:
  bool all_ = true;
  std::vector<std::string> lines_;
};

template <class... Args>
std::string str(const Args &...args) {
  std::ostringstream os;
  os << std::setprecision(6);
  (os << ... << args);
  return os.str();
}

using Rng = std::mt19937_64;

double unif(Rng &rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

GaussianMeasure random_gaussian(Rng &rng, std::size_t d, bool full) {
  Vector mean(static_cast<Eigen::Index>(d));
  for (auto &m : mean) m = unif(rng, -3.0, 3.0);
  if (!full) {
    Vector var(static_cast<Eigen::Index>(d));
    for (auto &v : var) v = unif(rng, 0.1, 5.0);
    return GaussianMeasure::diagonal(mean, var);
  }
  Matrix a(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  std::normal_distribution<double> n01;
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = n01(rng);
  Matrix cov = a * a.transpose() / static_cast<double>(d);
  cov.diagonal().array() += 0.1;
  return GaussianMeasure(mean, cov);
}

GaussianMeasure normal1(double m, double var) { return GaussianMeasure::isotropic(Vector::Constant(1, m), var); }

// Sample mean and variance of one coordinate with standard errors; the
// variance error uses the fourth central moment.
struct Moments {
  double mean, mean_se, var, var_se;
};
Moments moments(const Eigen::Ref<const Vector> &x) {
  const double n = static_cast<double>(x.size());
  const double m = x.mean();
  const Eigen::ArrayXd c = x.array() - m;
  const double s2 = c.square().sum() / n;
  const double m4 = c.square().square().sum() / n;
  return {m, std::sqrt(s2 / n), s2, std::sqrt(std::max(0.0, m4 - s2 * s2) / n)};
}

double slope(const std::vector<double> &x, const std::vector<double> &y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += std::log(x[i]), my += std::log(y[i]);
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

SchemeConfig scheme(double h, std::uint64_t n, std::size_t particles, std::uint64_t seed, bool half = false) {
  SchemeConfig c;
  c.h = h;
  c.n_steps = n;
  c.n_particles = particles;
  c.seed = seed;
  c.record_half_steps = half;
  return c;
}

// ---------------------------------------------------------------------------

void exact_scheme_law(Checks &c) {
  const auto laws = scheme_recursion(normal1(2, 4), 0.1, 1.0, 1);
  const double m = laws[2].mean()(0), v = laws[2].covariance()(0, 0);
  c.check(std::abs(m - 1.8182) < 5e-5 && std::abs(v - 3.5058) < 5e-5,
          str("exact one-step law N(", m, ", ", v, ") vs N(1.8182, 3.5058)"));

  const std::size_t n = 100000;
  const auto t = run(scheme(0.1, 1, n, 20240101), Potential::isotropic_quadratic(1, 1.0),
                     InitialLaw::isotropic_gaussian(Vector::Constant(1, 2.0), 4.0));
  const auto mo = moments(t.final_ensemble().particles.col(0));
  const double zm = (mo.mean - m) / mo.mean_se, zv = (mo.var - v) / mo.var_se;
  c.check(std::abs(zm) <= 4.0, str("ensemble mean ", mo.mean, " (z = ", zm, ")"));
  c.check(std::abs(zv) <= 4.0, str("ensemble variance ", mo.var, " (z = ", zv, ")"));
}

void contraction(Checks &c) {
  Rng rng(15);
  double worst_w2 = INFINITY, worst_kl = INFINITY;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 1 + static_cast<std::size_t>(trial % 4);
    Vector w(static_cast<Eigen::Index>(d));
    for (auto &x : w) x = unif(rng, 0.5, 2.0);
    const double lambda = w.minCoeff();
    const auto pi = quadratic_target(w);
    const auto g0 = random_gaussian(rng, d, trial % 2 == 1);
    const double w0 = gaussian_w2(g0, pi), kl0 = gaussian_kl(g0, pi);
    for (int k = 0; k <= 50; ++k) {
      const double t = 0.1 * k;
      const auto gt = ou_flow(g0, t, w);
      worst_w2 = std::min(worst_w2, w0 * std::exp(-lambda * t) - gaussian_w2(gt, pi));
      worst_kl = std::min(worst_kl, kl0 * std::exp(-2.0 * lambda * t) - gaussian_kl(gt, pi));
    }
  }
  c.check(worst_w2 >= -1e-12, str("W2 decay: min slack ", worst_w2, " over 20 laws x 51 times"));
  c.check(worst_kl >= -1e-12, str("KL decay: min slack ", worst_kl, " over 20 laws x 51 times"));
}

void discrete_evi(Checks &c) {
  double worst = INFINITY;
  std::size_t evaluated = 0;
  for (double h : {0.2, 0.1, 0.05}) {
    const auto laws = scheme_recursion(normal1(2, 4), h, 1.0, 20);
    for (std::size_t k = 0; k < 20; ++k) {
      const auto step = scheme_step(laws, k);
      for (double mu : {-2.0, -1.0, 0.0, 1.0, 2.0})
        for (int j = 0; j <= 8; ++j) {
          worst = std::min(worst, discrete_evi_check(step, normal1(mu, 0.25 * std::pow(2.0, 0.5 * j)), 1.0, h).slack);
          ++evaluated;
        }
    }
  }
  c.check(worst >= -1e-9, str("min slack ", worst, " over ", evaluated, " (h, k, nu) cases"));
}

void bound_domination(Checks &c) {
  double worst_ratio = 0.0;
  for (const auto &rho0 : {normal1(2, 4), normal1(0, 9), normal1(-1, 1)}) {
    const double kl0 = gaussian_kl(rho0, normal1(0, 1));
    for (double h : {0.2, 0.1, 0.05, 0.025}) {
      const auto n_max = static_cast<std::size_t>(std::llround(2.0 / h));
      const auto laws = scheme_recursion(rho0, h, 1.0, n_max);
      for (std::size_t n = 1; n <= n_max; ++n) {
        const std::vector<GaussianMeasure> prefix(laws.begin(), laws.begin() + static_cast<std::ptrdiff_t>(2 * n + 1));
        const double bound = theorem1_bound(h, n, kl0, static_cast<double>(n) * h);
        for (std::size_t k = 0; k <= 2 * n; ++k) {
          const double t = 0.5 * h * static_cast<double>(k);
          const double err = gaussian_w2(interpolated_law(prefix, h, t), ou_flow(rho0, t, 1.0));
          worst_ratio = std::max(worst_ratio, err / bound);
        }
      }
    }
  }
  c.check(worst_ratio <= 1.0, str("max error/bound over the grid: ", worst_ratio));

  const std::vector<double> hs{0.2, 0.1, 0.05, 0.025};
  for (const auto &rho0 : {normal1(2, 4), normal1(0, 9), normal1(-1, 1)}) {
    std::vector<double> errs;
    for (double h : hs) errs.push_back(exact_discretization_error(rho0, Vector::Ones(1), h, std::llround(2.0 / h), 2.0));
    const double s = slope(hs, errs);
    c.check(s >= 0.4 && s <= 0.6,
            str("rho0 = N(", rho0.mean()(0), ", ", rho0.covariance()(0, 0), "): error at T=2 ", errs[0], " .. ",
                errs.back(), ", log-log slope ", s, " (target [0.4, 0.6])"));
  }
}

void delta_analytics(Checks &c) {
  {
    const std::size_t d = 3;
    const double h = 0.05;
    const auto p = Potential::isotropic_quadratic(d, 1.0);
    const auto t = run(scheme(h, 5, 10000, 77, true), p,
                       InitialLaw::isotropic_gaussian(Vector::Constant(static_cast<Eigen::Index>(d), 1.0), 2.0));
    double worst = 0.0;
    for (const auto &e : estimate_deltas(t, p)) worst = std::max(worst, std::abs(e.delta_hat - h * d) / e.standard_error);
    c.check(worst <= 4.0, str("quadratic d=3 h=0.05: |delta_hat - hd| <= ", worst, " SE over 5 steps"));
  }
  {
    const std::size_t d = 4;
    const double h = 0.1;
    const auto p = Potential::composite(Potential::isotropic_quadratic(d, 1.0), Potential::l1(d, 1.0));
    const auto t = run(scheme(h, 5, 10000, 78, true), p,
                       InitialLaw::isotropic_gaussian(Vector::Constant(static_cast<Eigen::Index>(d), 1.0), 1.0));
    const double bound = *delta_bound(p, h);
    double worst = -INFINITY;
    for (const auto &e : estimate_deltas(t, p)) worst = std::max(worst, (e.delta_hat - bound) / e.standard_error);
    c.check(worst <= 3.0, str("quadratic + l1 d=4 h=0.1: bound ", bound, ", max (delta_hat - bound)/SE ", worst));
  }
}

void rate_planner(Checks &c) {
  const auto plan = plan_rates(0.1, 10, 1.0, 0.0, 1.0);
  c.check(plan.smooth.n == 11929,
          str("eps=0.1 d=10 M=1 lambda=1: n_smooth ", plan.smooth.n, ", h_smooth ", plan.smooth.h));
  // Ratios tend to 2 and 4 as log(sqrt(d)/eps) grows; at eps = 0.1 the log
  // is too small for the smooth ratio to fall in range, hence eps = 1e-3.
  const double eps = 1e-3;
  for (std::size_t d : {10u, 20u, 50u}) {
    const double rs = static_cast<double>(plan_rates(eps, 2 * d, 1.0, 0.0, 1.0).smooth.n) /
                      static_cast<double>(plan_rates(eps, d, 1.0, 0.0, 1.0).smooth.n);
    c.check(rs >= 1.9 && rs <= 2.3, str("smooth n(2d)/n(d), d=", d, ", eps=", eps, ": ", rs));
    const auto lip = [](std::size_t k) { return std::sqrt(static_cast<double>(k)); };
    const double rn = static_cast<double>(plan_rates(eps, 2 * d, 0.0, lip(2 * d), 1.0).nonsmooth.n) /
                      static_cast<double>(plan_rates(eps, d, 0.0, lip(d), 1.0).nonsmooth.n);
    c.check(rn >= 3.7 && rn <= 4.6, str("nonsmooth L=sqrt(d) n(2d)/n(d), d=", d, ", eps=", eps, ": ", rn));
  }
}

RowMatrix gaussian_cloud(const GaussianMeasure &g, std::size_t n, std::uint64_t seed) {
  const Matrix chol = g.covariance().llt().matrixL();
  const RowMatrix z = InitialLaw::isotropic_gaussian(Vector::Zero(static_cast<Eigen::Index>(g.dim())), 1.0)
                          .sample(n, seed)
                          .particles;
  RowMatrix x = z * chol.transpose();
  x.rowwise() += g.mean().transpose();
  return x;
}

void wasserstein_backends(Checks &c) {
  Rng rng(7);
  std::normal_distribution<double> n01;
  double worst_1d = 0.0;
  for (std::size_t n : {8u, 100u, 1000u, 2048u}) {
    for (int rep = 0; rep < 3; ++rep) {
      RowMatrix a(n, 1), b(n, 1);
      for (std::size_t i = 0; i < n; ++i) a(i, 0) = n01(rng), b(i, 0) = 1.5 * n01(rng) + 0.5 * rep;
      const double exact = w2_exact_1d(PointCloud(a), PointCloud(b)).value;
      worst_1d = std::max(worst_1d, std::abs(w2_assignment(PointCloud(a), PointCloud(b)).value - exact));
    }
  }
  c.check(worst_1d <= 1e-12, str("assignment vs sorted 1-D: max |diff| ", worst_1d));

  bool identity = true, symmetry = true, positive = true;
  double worst_triangle = INFINITY;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 20 + static_cast<std::size_t>(trial % 30), d = 1 + static_cast<std::size_t>(trial % 4);
    auto cloud = [&] {
      RowMatrix m(n, d);
      const double s = unif(rng, 0.2, 3.0), shift = unif(rng, -2.0, 2.0);
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = s * n01(rng) + shift;
      return PointCloud(m);
    };
    const PointCloud a = cloud(), b = cloud(), x = cloud();
    const double ab = w2_assignment(a, b).value, ba = w2_assignment(b, a).value;
    const double bx = w2_assignment(b, x).value, ax = w2_assignment(a, x).value;
    identity &= w2_assignment(a, a).value == 0.0;
    symmetry &= ab == ba;
    positive &= ab > 0.0 && bx > 0.0 && ax > 0.0;
    worst_triangle = std::min(worst_triangle, ab + bx - ax);
  }
  c.check(identity, "W2(a, a) = 0 on 100 triples");
  c.check(symmetry, "W2(a, b) = W2(b, a) bit-for-bit on 100 triples");
  c.check(positive, "W2 > 0 between distinct clouds");
  c.check(worst_triangle >= -1e-12, str("triangle inequality: min slack ", worst_triangle));

  // Well separated pairs: the O(N^{-1/d}) finite-sample bias of empirical W2
  // is additive, so it is small relative to a distance of about 3.
  const std::size_t n = 4096;
  for (std::size_t d = 1; d <= 4; ++d) {
    const auto de = static_cast<Eigen::Index>(d);
    Vector shift = Vector::Zero(de);
    shift(0) = 3.0;
    const auto ga = GaussianMeasure::standard(d);
    Vector var = Vector::Constant(de, 2.25);
    const auto gb = GaussianMeasure::diagonal(shift, var);
    const double bures = gaussian_w2(ga, gb);
    const double est = w2_assignment(PointCloud(gaussian_cloud(ga, n, 100 + d)), PointCloud(gaussian_cloud(gb, n, 200 + d)),
                                     AssignmentOptions{n})
                           .value;
    const double rel = std::abs(est - bures) / bures;
    c.check(rel <= 0.05, str("d=", d, " N=4096: empirical ", est, " vs Bures ", bures, " (rel ", rel, ")"));
  }
}

void dimension_scalings(Checks &c) {
  const double kl1 = gaussian_kl(normal1(2, 4), normal1(0, 1));
  const double w21 = gaussian_w2(normal1(2, 4), normal1(0, 1));
  c.check(std::abs(kl1 - 2.8069) < 5e-5, str("1-D KL ", std::setprecision(10), kl1));
  for (std::size_t d : {1u, 2u, 4u, 8u, 16u}) {
    const auto de = static_cast<Eigen::Index>(d);
    const auto rho0 = GaussianMeasure::isotropic(Vector::Constant(de, 2.0), 4.0);
    const auto pi = GaussianMeasure::standard(d);
    const double kl = gaussian_kl(rho0, pi) / static_cast<double>(d);
    const double w2 = gaussian_w2(rho0, pi) / std::sqrt(static_cast<double>(d));
    c.check(std::abs(kl - kl1) <= 1e-10 && std::abs(w2 - w21) <= 1e-10,
            str("d=", d, ": KL/d - KL_1 = ", kl - kl1, ", W2/sqrt(d) - W2_1 = ", w2 - w21));
  }
}

RowMatrix laplace_samples(std::size_t n, std::uint64_t seed) {
  const NoiseSource source(seed, std::nullopt, StreamDomain::TargetSamples);
  const auto law = ScalarLaw::laplace(0.0, 1.0);
  RowMatrix x(n, 1);
  for (std::size_t i = 0; i < n; ++i) x(i, 0) = law.quantile_draw(source.uniform(0, 0, i), source.uniform(0, 1, i));
  return x;
}

void l1_target(Checks &c) {
  // Chains start from N(3, 1), away from the target's mode, and run to T = 20.
  const std::size_t n = 100000;
  const int replicates = 4;
  const auto p = Potential::l1(1, 1.0);
  const auto init = InitialLaw::isotropic_gaussian(Vector::Constant(1, 3.0), 1.0);
  const std::vector<double> hs{0.4, 0.2, 0.1, 0.05};
  std::vector<double> mean(hs.size()), se(hs.size());
  for (std::size_t i = 0; i < hs.size(); ++i) {
    std::vector<double> vals;
    for (int r = 0; r < replicates; ++r) {
      const std::uint64_t seed = 9000 + static_cast<std::uint64_t>(r);
      const auto final = advance(scheme(hs[i], std::llround(20.0 / hs[i]), n, seed), p, init.sample(n, seed));
      vals.push_back(w2_exact_1d(PointCloud::from_ensemble(final), PointCloud(laplace_samples(n, seed))).value);
    }
    double m = 0.0;
    for (double v : vals) m += v;
    m /= replicates;
    double s2 = 0.0;
    for (double v : vals) s2 += (v - m) * (v - m);
    mean[i] = m;
    se[i] = std::sqrt(s2 / (replicates - 1) / replicates);
    c.note(str("h=", hs[i], ": W2 ", m, " +- ", se[i]));
  }
  for (std::size_t i = 1; i < hs.size(); ++i) {
    const double tol = 2.0 * std::hypot(se[i], se[i - 1]);
    c.check(mean[i] <= mean[i - 1] + tol, str("h ", hs[i - 1], " -> ", hs[i], ": ", mean[i - 1], " -> ", mean[i],
                                              " (allowance ", tol, ")"));
  }
}

struct Criterion {
  int id;
  const char *name;
  std::optional<double> limit;
  void (*body)(Checks &);
};

const std::vector<Criterion> &criteria() {
  static const std::vector<Criterion> all{
      {1, "exact scheme law (Gaussian/quadratic)", 5.0, exact_scheme_law},
      {2, "OU contraction in W2 and KL", 1.0, contraction},
      {3, "discrete EVI", 5.0, discrete_evi},
      {4, "error bound domination and sqrt(h) scaling", 5.0, bound_domination},
      {5, "delta analytics", 30.0, delta_analytics},
      {6, "rate planner", std::nullopt, rate_planner},
      {7, "Wasserstein backends", 60.0, wasserstein_backends},
      {8, "KL/d and W2/sqrt(d) dimension scalings", std::nullopt, dimension_scalings},
      {9, "l1 target sanity", 120.0, l1_target},
  };
  return all;
}

}  // namespace

std::vector<int> criterion_ids() {
  std::vector<int> ids;
  for (const auto &c : criteria()) ids.push_back(c.id);
  return ids;
}

CriterionResult run_criterion(int id) {
  const auto it = std::find_if(criteria().begin(), criteria().end(), [&](const Criterion &c) { return c.id == id; });
  if (it == criteria().end()) throw std::out_of_range("no acceptance criterion " + std::to_string(id));
  CriterionResult r;
  r.id = it->id;
  r.name = it->name;
  r.runtime_limit = it->limit;
  Checks checks;
  const auto start = std::chrono::steady_clock::now();
  try {
    it->body(checks);
  } catch (const std::exception &e) {
    checks.check(false, std::string("exception: ") + e.what());
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (r.runtime_limit)
    checks.check(r.seconds < *r.runtime_limit, str("runtime ", r.seconds, " s (limit ", *r.runtime_limit, " s)"));
  r.passed = checks.passed();
  r.details = checks.take();
  return r;
}

std::string format_result(const CriterionResult &r, bool verbose) {
  std::ostringstream os;
  os << (r.passed ? "PASS" : "FAIL") << " [" << r.id << "] " << r.name << " (" << std::fixed << std::setprecision(2)
     << r.seconds << " s)\n";
  if (verbose || !r.passed)
    for (const auto &line : r.details) os << "    " << line << '\n';
  return os.str();
}

}  // namespace proxlmc
