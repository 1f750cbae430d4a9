#include "proxlmc/potentials.hpp"

#include <cmath>
#include <sstream>

namespace proxlmc {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_step(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("prox step h must be positive");
}

}  // namespace

void ProxSolverSettings::validate() const {
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
  if (!(tolerance > 0.0)) throw std::invalid_argument("prox tolerance must be positive");
}

Potential Potential::isotropic_quadratic(std::size_t dim, double lambda) {
  if (dim == 0) throw std::invalid_argument("potential dimension must be positive");
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("quadratic lambda must be positive");
  return Potential(IsotropicQuadratic{lambda}, dim);
}

Potential Potential::diagonal_quadratic(Vector weights) {
  if (weights.size() == 0) throw std::invalid_argument("potential dimension must be positive");
  if (!(weights.array() > 0.0).all() || !weights.allFinite())
    throw std::invalid_argument("quadratic weights must be positive");
  const auto dim = static_cast<std::size_t>(weights.size());
  return Potential(DiagonalQuadratic{std::move(weights)}, dim);
}

Potential Potential::l1(std::size_t dim, double weight) {
  if (dim == 0) throw std::invalid_argument("potential dimension must be positive");
  if (!(weight >= 0.0) || !std::isfinite(weight))
    throw std::invalid_argument("l1 weight must be nonnegative");
  return Potential(L1{weight}, dim);
}

Potential Potential::composite(Potential smooth, Potential nonsmooth, ProxSolverSettings settings) {
  settings.validate();
  require_dim("composite parts", smooth.dim(), nonsmooth.dim());
  if (!smooth.is_differentiable() || !smooth.grad_lipschitz())
    throw std::invalid_argument("composite smooth part must have a Lipschitz gradient");
  const auto dim = smooth.dim();
  return Potential(Composite{std::make_shared<const Potential>(std::move(smooth)),
                             std::make_shared<const Potential>(std::move(nonsmooth)), settings},
                   dim);
}

Potential::Kind Potential::kind() const {
  return std::visit(Overloaded{[](const IsotropicQuadratic &) { return Kind::IsotropicQuadratic; },
                               [](const DiagonalQuadratic &) { return Kind::DiagonalQuadratic; },
                               [](const L1 &) { return Kind::L1; },
                               [](const Composite &) { return Kind::Composite; }},
                    impl_);
}

std::string Potential::describe() const {
  std::ostringstream os;
  std::visit(Overloaded{[&](const IsotropicQuadratic &q) {
                          os << "quadratic(lambda=" << q.lambda << ", d=" << dim_ << ")";
                        },
                        [&](const DiagonalQuadratic &) { os << "diagonal_quadratic(d=" << dim_ << ")"; },
                        [&](const L1 &g) { os << "l1(weight=" << g.weight << ", d=" << dim_ << ")"; },
                        [&](const Composite &c) {
                          os << "composite(" << c.smooth->describe() << " + "
                             << c.nonsmooth->describe() << ")";
                        }},
             impl_);
  return os.str();
}

double Potential::strong_convexity() const {
  return std::visit(Overloaded{[](const IsotropicQuadratic &q) { return q.lambda; },
                               [](const DiagonalQuadratic &q) { return q.weights.minCoeff(); },
                               [](const L1 &) { return 0.0; },
                               [](const Composite &c) { return c.smooth->strong_convexity(); }},
                    impl_);
}

std::optional<double> Potential::grad_lipschitz() const {
  return std::visit(
      Overloaded{[](const IsotropicQuadratic &q) -> std::optional<double> { return q.lambda; },
                 [](const DiagonalQuadratic &q) -> std::optional<double> { return q.weights.maxCoeff(); },
                 [](const L1 &) -> std::optional<double> { return std::nullopt; },
                 [](const Composite &c) { return c.smooth->grad_lipschitz(); }},
      impl_);
}

std::optional<double> Potential::lipschitz() const {
  return std::visit(
      Overloaded{[](const IsotropicQuadratic &) -> std::optional<double> { return std::nullopt; },
                 [](const DiagonalQuadratic &) -> std::optional<double> { return std::nullopt; },
                 [this](const L1 &g) -> std::optional<double> {
                   // |x|_1 <= sqrt(d) |x|
                   return g.weight * std::sqrt(static_cast<double>(dim_));
                 },
                 [](const Composite &c) { return c.nonsmooth->lipschitz(); }},
      impl_);
}

bool Potential::is_differentiable() const {
  return std::holds_alternative<IsotropicQuadratic>(impl_) ||
         std::holds_alternative<DiagonalQuadratic>(impl_);
}

bool Potential::is_quadratic() const { return is_differentiable(); }

Vector Potential::quadratic_weights() const {
  if (const auto *q = std::get_if<IsotropicQuadratic>(&impl_))
    return Vector::Constant(static_cast<Eigen::Index>(dim_), q->lambda);
  if (const auto *q = std::get_if<DiagonalQuadratic>(&impl_)) return q->weights;
  throw UnsupportedOperation("potential " + describe() + " is not quadratic");
}

const Potential &Potential::smooth_part() const {
  if (const auto *c = std::get_if<Composite>(&impl_)) return *c->smooth;
  throw UnsupportedOperation("smooth_part() requires a composite potential");
}

const Potential &Potential::nonsmooth_part() const {
  if (const auto *c = std::get_if<Composite>(&impl_)) return *c->nonsmooth;
  throw UnsupportedOperation("nonsmooth_part() requires a composite potential");
}

void Potential::check_point(ConstVectorRef x) const {
  require_dim("potential argument", dim_, static_cast<std::size_t>(x.size()));
}

double Potential::value(ConstVectorRef x) const {
  check_point(x);
  return std::visit(
      Overloaded{[&](const IsotropicQuadratic &q) { return 0.5 * q.lambda * x.squaredNorm(); },
                 [&](const DiagonalQuadratic &q) {
                   return 0.5 * (q.weights.array() * x.array().square()).sum();
                 },
                 [&](const L1 &g) { return g.weight * x.lpNorm<1>(); },
                 [&](const Composite &c) { return c.smooth->value(x) + c.nonsmooth->value(x); }},
      impl_);
}

void Potential::gradient_into(ConstVectorRef x, Eigen::Ref<Vector> out) const {
  if (const auto *q = std::get_if<IsotropicQuadratic>(&impl_)) {
    out = q->lambda * x;
  } else if (const auto *q = std::get_if<DiagonalQuadratic>(&impl_)) {
    out = q->weights.cwiseProduct(x);
  } else {
    throw UnsupportedOperation("potential " + describe() + " is not differentiable");
  }
}

Vector Potential::gradient(ConstVectorRef x) const {
  check_point(x);
  Vector out(x.size());
  gradient_into(x, out);
  return out;
}

Vector Potential::subgradient(ConstVectorRef x) const {
  check_point(x);
  if (const auto *g = std::get_if<L1>(&impl_)) {
    return x.unaryExpr([w = g->weight](double v) { return v > 0.0 ? w : (v < 0.0 ? -w : 0.0); });
  }
  if (const auto *c = std::get_if<Composite>(&impl_)) {
    return c->smooth->gradient(x) + c->nonsmooth->subgradient(x);
  }
  return gradient(x);
}

Vector Potential::prox(double h, ConstVectorRef x) const {
  Vector out(x.size());
  prox_into(h, x, out);
  return out;
}

void Potential::prox_into(double h, ConstVectorRef x, Eigen::Ref<Vector> out) const {
  require_step(h);
  check_point(x);
  require_dim("prox output", dim_, static_cast<std::size_t>(out.size()));

  if (const auto *q = std::get_if<IsotropicQuadratic>(&impl_)) {
    out = x / (1.0 + q->lambda * h);
  } else if (const auto *q = std::get_if<DiagonalQuadratic>(&impl_)) {
    out = x.array() / (1.0 + h * q->weights.array());
  } else if (const auto *g = std::get_if<L1>(&impl_)) {
    const double t = h * g->weight;
    out = x.unaryExpr([t](double v) { return std::copysign(std::max(std::abs(v) - t, 0.0), v); });
  } else {
    // Proximal gradient on  y -> f(y) + |x - y|^2/(2h)  +  g(y).
    // The first term is (lambda + 1/h)-strongly convex with (M + 1/h)-Lipschitz
    // gradient, so the fixed step 1/(M + 1/h) contracts at rate (M - lambda)/(M + 1/h).
    const auto &c = std::get<Composite>(impl_);
    const double curvature = *c.smooth->grad_lipschitz() + 1.0 / h;
    const double step = 1.0 / curvature;

    Vector y = x;
    Vector grad(x.size());
    Vector trial(x.size());
    double residual = 0.0;
    for (int it = 1; it <= c.settings.max_iterations; ++it) {
      c.smooth->gradient_into(y, grad);
      grad += (y - x) / h;
      c.nonsmooth->prox_into(step, y - step * grad, trial);
      residual = (trial - y).norm();
      y.swap(trial);
      if (residual <= c.settings.tolerance) {
        out = y;
        return;
      }
    }
    throw ProxNotConverged(c.settings.max_iterations, residual);
  }
}

double Potential::moreau_envelope(double h, ConstVectorRef x) const {
  const Vector y = prox(h, x);
  return value(y) + (x - y).squaredNorm() / (2.0 * h);
}

Vector Potential::moreau_gradient(double h, ConstVectorRef x) const {
  const Vector y = prox(h, x);
  return (x - y) / h;
}

}  // namespace proxlmc
