#include "proxlmc/reference_flows.hpp"

#include <cmath>
#include <numbers>

namespace proxlmc {
namespace {

constexpr double kEigenClamp = 1e-12;

bool off_diagonal_zero(const Matrix &m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (i != j && m(i, j) != 0.0) return false;
  return true;
}

// Symmetric PSD square root with eigenvalues clamped at kEigenClamp.
Matrix psd_sqrt(const Matrix &m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  const Vector root = es.eigenvalues().cwiseMax(kEigenClamp).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

double log_det_spd(const GaussianMeasure &g) {
  if (g.is_diagonal()) return g.variances().array().log().sum();
  Eigen::LLT<Matrix> llt(g.covariance());
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

void check_same_dim(const GaussianMeasure &a, const GaussianMeasure &b) {
  require_dim("gaussian measures", a.dim(), b.dim());
}

void check_weights(const GaussianMeasure &g, const Vector &w) {
  require_dim("quadratic weights", g.dim(), static_cast<std::size_t>(w.size()));
  if (!(w.array() > 0.0).all()) throw std::invalid_argument("quadratic weights must be positive");
}

Vector iso(std::size_t dim, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  return Vector::Constant(static_cast<Eigen::Index>(dim), lambda);
}

}  // namespace

GaussianMeasure::GaussianMeasure(Vector mean, Matrix covariance)
    : mean_(std::move(mean)), cov_(std::move(covariance)) {
  const auto d = mean_.size();
  if (d == 0) throw std::invalid_argument("gaussian dimension must be positive");
  if (cov_.rows() != d || cov_.cols() != d)
    throw DimensionMismatch("gaussian covariance", static_cast<std::size_t>(d),
                            static_cast<std::size_t>(cov_.rows()));
  if (!mean_.allFinite() || !cov_.allFinite())
    throw std::invalid_argument("gaussian parameters must be finite");
  const double scale = std::max(1.0, cov_.cwiseAbs().maxCoeff());
  if (!((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale))
    throw std::invalid_argument("gaussian covariance must be symmetric");
  cov_ = 0.5 * (cov_ + cov_.transpose()).eval();
  diagonal_ = off_diagonal_zero(cov_);
  if (diagonal_) {
    if (!(cov_.diagonal().array() > 0.0).all())
      throw std::invalid_argument("gaussian covariance must be positive definite");
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> es(cov_, Eigen::EigenvaluesOnly);
    if (!(es.eigenvalues().minCoeff() > 0.0))
      throw std::invalid_argument("gaussian covariance must be positive definite");
  }
}

GaussianMeasure GaussianMeasure::diagonal(Vector mean, Vector variances) {
  require_dim("gaussian variances", static_cast<std::size_t>(mean.size()),
              static_cast<std::size_t>(variances.size()));
  Matrix cov = variances.asDiagonal();
  return GaussianMeasure(std::move(mean), std::move(cov));
}

GaussianMeasure GaussianMeasure::isotropic(Vector mean, double variance) {
  const auto d = mean.size();
  return diagonal(std::move(mean), Vector::Constant(d, variance));
}

GaussianMeasure GaussianMeasure::standard(std::size_t dim) {
  const auto d = static_cast<Eigen::Index>(dim);
  return GaussianMeasure(Vector::Zero(d), Matrix::Identity(d, d));
}

nlohmann::json gaussian_to_json(const GaussianMeasure &g) {
  nlohmann::json j;
  j["mean"] = std::vector<double>(g.mean().data(), g.mean().data() + g.mean().size());
  if (g.is_diagonal()) {
    const Vector v = g.variances();
    j["cov_diag"] = std::vector<double>(v.data(), v.data() + v.size());
  } else {
    auto rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < g.covariance().rows(); ++i) {
      std::vector<double> row(static_cast<std::size_t>(g.covariance().cols()));
      for (Eigen::Index k = 0; k < g.covariance().cols(); ++k)
        row[static_cast<std::size_t>(k)] = g.covariance()(i, k);
      rows.push_back(row);
    }
    j["cov"] = rows;
  }
  return j;
}

GaussianMeasure gaussian_from_json(const nlohmann::json &j) {
  if (!j.is_object() || !j.contains("mean") || !j["mean"].is_array())
    throw std::invalid_argument("gaussian JSON requires a \"mean\" array");
  const auto mean_v = j["mean"].get<std::vector<double>>();
  const Vector mean = Eigen::Map<const Vector>(mean_v.data(), static_cast<Eigen::Index>(mean_v.size()));
  const bool has_diag = j.contains("cov_diag");
  const bool has_cov = j.contains("cov");
  if (has_diag == has_cov)
    throw std::invalid_argument("gaussian JSON requires exactly one of \"cov_diag\" or \"cov\"");
  if (has_diag) {
    const auto v = j["cov_diag"].get<std::vector<double>>();
    return GaussianMeasure::diagonal(mean, Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
  }
  const auto rows = j["cov"].get<std::vector<std::vector<double>>>();
  const auto d = static_cast<Eigen::Index>(rows.size());
  Matrix cov(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != d)
      throw std::invalid_argument("gaussian JSON \"cov\" must be square");
    for (Eigen::Index k = 0; k < d; ++k) cov(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
  }
  return GaussianMeasure(mean, cov);
}

GaussianMeasure prox_pushforward_quadratic(const GaussianMeasure &g, double h, const Vector &weights) {
  check_weights(g, weights);
  if (!(h >= 0.0)) throw std::invalid_argument("step h must be nonnegative");
  const Vector scale = (1.0 + h * weights.array()).inverse().matrix();
  Vector mean = scale.cwiseProduct(g.mean());
  Matrix cov = scale.asDiagonal() * g.covariance() * scale.asDiagonal();
  return GaussianMeasure(std::move(mean), std::move(cov));
}

GaussianMeasure prox_pushforward_quadratic(const GaussianMeasure &g, double h, double lambda) {
  return prox_pushforward_quadratic(g, h, iso(g.dim(), lambda));
}

GaussianMeasure heat_convolve(const GaussianMeasure &g, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("heat time must be nonnegative");
  Matrix cov = g.covariance();
  cov.diagonal().array() += 2.0 * t;
  return GaussianMeasure(g.mean(), std::move(cov));
}

std::vector<GaussianMeasure> scheme_recursion(const GaussianMeasure &g0, double h,
                                              const Vector &weights, std::size_t n) {
  if (!(h > 0.0)) throw std::invalid_argument("step h must be positive");
  check_weights(g0, weights);
  std::vector<GaussianMeasure> laws;
  laws.reserve(2 * n + 1);
  laws.push_back(g0);
  for (std::size_t k = 0; k < n; ++k) {
    laws.push_back(prox_pushforward_quadratic(laws.back(), h, weights));
    laws.push_back(heat_convolve(laws.back(), h));
  }
  return laws;
}

std::vector<GaussianMeasure> scheme_recursion(const GaussianMeasure &g0, double h, double lambda,
                                              std::size_t n) {
  return scheme_recursion(g0, h, iso(g0.dim(), lambda), n);
}

double scheme_fixed_point_variance(double h, double lambda) {
  const double a = 1.0 + lambda * h;
  return 2.0 * a * a / (lambda * (2.0 + lambda * h));
}

GaussianMeasure ou_flow(const GaussianMeasure &g0, double t, const Vector &weights) {
  check_weights(g0, weights);
  if (!(t >= 0.0)) throw std::invalid_argument("flow time must be nonnegative");
  const Vector decay = (-t * weights.array()).exp().matrix();
  Vector mean = decay.cwiseProduct(g0.mean());
  Matrix cov = decay.asDiagonal() * g0.covariance() * decay.asDiagonal();
  // Stationary part: (1 - e^{-2 w t}) / w, written with expm1 for small t.
  cov.diagonal().array() += -(-2.0 * t * weights.array()).unaryExpr([](double x) { return std::expm1(x); }) /
                            weights.array();
  return GaussianMeasure(std::move(mean), std::move(cov));
}

GaussianMeasure ou_flow(const GaussianMeasure &g0, double t, double lambda) {
  return ou_flow(g0, t, iso(g0.dim(), lambda));
}

GaussianMeasure quadratic_target(const Vector &weights) {
  return GaussianMeasure::diagonal(Vector::Zero(weights.size()), weights.cwiseInverse());
}

double gaussian_w2(const GaussianMeasure &a, const GaussianMeasure &b) {
  check_same_dim(a, b);
  const double mean_term = (a.mean() - b.mean()).squaredNorm();
  double cov_term = 0.0;
  if (a.is_diagonal() && b.is_diagonal()) {
    cov_term = (a.variances().cwiseSqrt() - b.variances().cwiseSqrt()).squaredNorm();
  } else {
    const Matrix root_b = psd_sqrt(b.covariance());
    const Matrix cross = psd_sqrt(root_b * a.covariance() * root_b);
    cov_term = a.covariance().trace() + b.covariance().trace() - 2.0 * cross.trace();
  }
  return std::sqrt(std::max(0.0, mean_term + cov_term));
}

double gaussian_kl(const GaussianMeasure &a, const GaussianMeasure &b) {
  check_same_dim(a, b);
  const auto d = static_cast<double>(a.dim());
  const Vector dm = b.mean() - a.mean();
  double trace_term = 0.0;
  double quad_term = 0.0;
  if (b.is_diagonal()) {
    const Vector inv = b.variances().cwiseInverse();
    trace_term = (inv.asDiagonal() * a.covariance()).trace();
    quad_term = dm.cwiseProduct(inv).dot(dm);
  } else {
    Eigen::LLT<Matrix> llt(b.covariance());
    trace_term = llt.solve(a.covariance()).trace();
    quad_term = dm.dot(llt.solve(dm));
  }
  const double kl = 0.5 * (trace_term + quad_term - d + log_det_spd(b) - log_det_spd(a));
  return std::max(0.0, kl);
}

double entropy_gaussian(const GaussianMeasure &a) {
  const auto d = static_cast<double>(a.dim());
  return -0.5 * (d * std::log(2.0 * std::numbers::pi * std::numbers::e) + log_det_spd(a));
}

double potential_energy_gaussian(const GaussianMeasure &a, const Vector &weights) {
  check_weights(a, weights);
  const Vector second_moment = a.mean().array().square().matrix() + a.variances();
  return 0.5 * weights.dot(second_moment);
}

double potential_energy_gaussian(const GaussianMeasure &a, double lambda) {
  return potential_energy_gaussian(a, iso(a.dim(), lambda));
}

double log_partition_quadratic(const Vector &weights) {
  return 0.5 * (2.0 * std::numbers::pi / weights.array()).log().sum();
}

double log_partition_quadratic(std::size_t dim, double lambda) {
  return log_partition_quadratic(iso(dim, lambda));
}

GaussianMeasure gaussian_geodesic(const GaussianMeasure &a, const GaussianMeasure &b, double t) {
  check_same_dim(a, b);
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("geodesic time must lie in [0, 1]");
  Vector mean = (1.0 - t) * a.mean() + t * b.mean();
  if (a.is_diagonal() && b.is_diagonal()) {
    const Vector sd = (1.0 - t) * a.variances().cwiseSqrt() + t * b.variances().cwiseSqrt();
    return GaussianMeasure::diagonal(std::move(mean), sd.array().square().matrix());
  }
  // Optimal map x -> T x with T = A^{-1/2} (A^{1/2} B A^{1/2})^{1/2} A^{-1/2}.
  const Matrix root_a = psd_sqrt(a.covariance());
  const Matrix inv_root_a = root_a.inverse();
  const Matrix map = inv_root_a * psd_sqrt(root_a * b.covariance() * root_a) * inv_root_a;
  const auto d = static_cast<Eigen::Index>(a.dim());
  const Matrix interp = (1.0 - t) * Matrix::Identity(d, d) + t * map;
  return GaussianMeasure(std::move(mean), interp * a.covariance() * interp.transpose());
}

SchemeStep scheme_step(const std::vector<GaussianMeasure> &laws, std::size_t k) {
  if (laws.size() < 2 * k + 3) throw std::out_of_range("scheme step index beyond recursion length");
  return SchemeStep{laws[2 * k], laws[2 * k + 1], laws[2 * k + 2]};
}

EviReport discrete_evi_check(const SchemeStep &step, const GaussianMeasure &nu,
                             const Vector &weights, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("step h must be positive");
  check_weights(nu, weights);
  const double lambda = weights.minCoeff();
  const GaussianMeasure target = quadratic_target(weights);
  auto w2sq = [](const GaussianMeasure &x, const GaussianMeasure &y) {
    const double w = gaussian_w2(x, y);
    return w * w;
  };
  const double delta =
      potential_energy_gaussian(step.after, weights) - potential_energy_gaussian(step.half, weights);
  EviReport r{};
  r.lhs = (w2sq(step.after, nu) - w2sq(step.before, nu)) / (2.0 * h) +
          0.5 * lambda * w2sq(step.half, nu);
  r.rhs = gaussian_kl(nu, target) - gaussian_kl(step.after, target) -
          w2sq(step.half, step.before) / (2.0 * h) + delta;
  r.slack = r.rhs - r.lhs;
  return r;
}

EviReport discrete_evi_check(const SchemeStep &step, const GaussianMeasure &nu, double lambda,
                             double h) {
  return discrete_evi_check(step, nu, iso(nu.dim(), lambda), h);
}

}  // namespace proxlmc
