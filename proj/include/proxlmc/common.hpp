#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace proxlmc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
// One particle (or point) per row; rows are contiguous.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstVectorRef = Eigen::Ref<const Vector>;

class DimensionMismatch : public std::invalid_argument {
 public:
  DimensionMismatch(const std::string &what, std::size_t expected, std::size_t actual)
      : std::invalid_argument(what + ": expected dimension " + std::to_string(expected) +
                              ", got " + std::to_string(actual)),
        expected_(expected),
        actual_(actual) {}

  std::size_t expected() const { return expected_; }
  std::size_t actual() const { return actual_; }

 private:
  std::size_t expected_;
  std::size_t actual_;
};

// Raised when an operation is not defined for the given input class,
// e.g. ULA on a nonsmooth potential.
class UnsupportedOperation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ProxNotConverged : public std::runtime_error {
 public:
  ProxNotConverged(int iterations, double residual)
      : std::runtime_error("proximal subproblem did not converge after " +
                           std::to_string(iterations) + " iterations (residual " +
                           std::to_string(residual) + ")"),
        iterations_(iterations),
        residual_(residual) {}

  int iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  int iterations_;
  double residual_;
};

inline void require_dim(const char *what, std::size_t expected, std::size_t actual) {
  if (expected != actual) throw DimensionMismatch(what, expected, actual);
}

}  // namespace proxlmc
