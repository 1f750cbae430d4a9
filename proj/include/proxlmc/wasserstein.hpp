#pragma once

#include <optional>
#include <string>
#include <vector>

#include "proxlmc/common.hpp"

namespace proxlmc {

struct Ensemble;

// Uniformly weighted empirical measure, one point per row.
class PointCloud {
 public:
  explicit PointCloud(RowMatrix points);
  static PointCloud from_ensemble(const Ensemble &e);

  std::size_t size() const { return static_cast<std::size_t>(points_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(points_.cols()); }
  const RowMatrix &points() const { return points_; }

 private:
  RowMatrix points_;
};

enum class W2Method { Exact1D, Assignment, Sliced };
std::string to_string(W2Method m);

struct W2Estimate {
  double value = 0.0;
  W2Method method = W2Method::Exact1D;
  std::optional<std::size_t> n_projections;
  std::optional<double> standard_error;  // present iff method == Sliced
};

class AssignmentTooLarge : public std::invalid_argument {
 public:
  AssignmentTooLarge(std::size_t n, std::size_t cap)
      : std::invalid_argument("assignment size " + std::to_string(n) + " exceeds cap " + std::to_string(cap)) {}
};

struct AssignmentOptions {
  std::size_t max_size = 2048;
};

// Optimal matching of a onto b for squared Euclidean cost.
struct Assignment {
  std::vector<std::size_t> target;  // a_i is matched to b_{target[i]}
  double total_cost = 0.0;
};
Assignment optimal_assignment(const PointCloud &a, const PointCloud &b, AssignmentOptions options = {});

// Sorted (quantile) coupling; d = 1 and equal sizes.
W2Estimate w2_exact_1d(const PointCloud &a, const PointCloud &b);
// Exact discrete optimal transport (auction warm start, then shortest augmenting paths).
W2Estimate w2_assignment(const PointCloud &a, const PointCloud &b, AssignmentOptions options = {});
// Root of the mean squared 1-D distance over random directions; any sizes.
W2Estimate w2_sliced(const PointCloud &a, const PointCloud &b, std::size_t n_projections,
                     std::uint64_t seed);
// Exact1D for d = 1, Assignment for equal sizes up to the cap in d <= 4,
// Sliced otherwise.
W2Estimate w2_auto(const PointCloud &a, const PointCloud &b, std::size_t n_projections = 256,
                   std::uint64_t seed = 0, AssignmentOptions options = {});

// W2^2 between two sorted samples of any sizes (uniform weights).
double sorted_w2_squared(const std::vector<double> &a, const std::vector<double> &b);

// (1 - t) a_i + t b_{sigma(i)} along the optimal matching sigma.
PointCloud displacement_interpolate(const PointCloud &a, const PointCloud &b, double t,
                                    AssignmentOptions options = {});

}  // namespace proxlmc
