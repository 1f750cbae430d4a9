#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>

#include "proxlmc/common.hpp"

namespace proxlmc {

// Settings for the iterative prox of a composite potential. Closed-form
// families ignore them.
struct ProxSolverSettings {
  int max_iterations = 10000;
  double tolerance = 1e-10;  // Euclidean fixed-point residual

  void validate() const;
};

// A full-domain convex potential V on R^d with its proximal map and the
// constants used by the error bounds: strong convexity lambda, gradient
// Lipschitz constant M(d) of the smooth part, Lipschitz constant L(d) of the
// nonsmooth part.
//
// Value type; copies share the (immutable) parts of a composite.
class Potential {
 public:
  enum class Kind { IsotropicQuadratic, DiagonalQuadratic, L1, Composite };

  // V(x) = lambda |x|^2 / 2
  static Potential isotropic_quadratic(std::size_t dim, double lambda);
  // V(x) = sum_i w_i x_i^2 / 2
  static Potential diagonal_quadratic(Vector weights);
  // V(x) = w |x|_1
  static Potential l1(std::size_t dim, double weight);
  // V = f + g with f differentiable (smooth) and g convex (nonsmooth).
  static Potential composite(Potential smooth, Potential nonsmooth,
                             ProxSolverSettings settings = {});

  Kind kind() const;
  std::size_t dim() const { return dim_; }
  std::string describe() const;

  double strong_convexity() const;
  std::optional<double> grad_lipschitz() const;
  std::optional<double> lipschitz() const;

  bool is_differentiable() const;
  bool is_quadratic() const;
  // Per-coordinate curvature of a quadratic potential (lambda * 1 for the
  // isotropic family). Throws UnsupportedOperation otherwise.
  Vector quadratic_weights() const;

  const Potential &smooth_part() const;
  const Potential &nonsmooth_part() const;

  double value(ConstVectorRef x) const;
  Vector gradient(ConstVectorRef x) const;
  // An element of the subdifferential; the minimal-norm one for l1 at 0.
  Vector subgradient(ConstVectorRef x) const;

  // argmin_y V(y) + |x - y|^2 / (2h)
  Vector prox(double h, ConstVectorRef x) const;
  void prox_into(double h, ConstVectorRef x, Eigen::Ref<Vector> out) const;

  double moreau_envelope(double h, ConstVectorRef x) const;
  Vector moreau_gradient(double h, ConstVectorRef x) const;

 private:
  struct IsotropicQuadratic {
    double lambda;
  };
  struct DiagonalQuadratic {
    Vector weights;
  };
  struct L1 {
    double weight;
  };
  struct Composite {
    std::shared_ptr<const Potential> smooth;
    std::shared_ptr<const Potential> nonsmooth;
    ProxSolverSettings settings;
  };
  using Variant = std::variant<IsotropicQuadratic, DiagonalQuadratic, L1, Composite>;

  Potential(Variant v, std::size_t dim) : impl_(std::move(v)), dim_(dim) {}

  void gradient_into(ConstVectorRef x, Eigen::Ref<Vector> out) const;
  void check_point(ConstVectorRef x) const;

  Variant impl_;
  std::size_t dim_;
};

}  // namespace proxlmc
