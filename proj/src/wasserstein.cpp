#include "proxlmc/wasserstein.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "proxlmc/random.hpp"
#include "proxlmc/samplers.hpp"

namespace proxlmc {
namespace {

void require_same_size(const PointCloud &a, const PointCloud &b) {
  if (a.size() != b.size())
    throw std::invalid_argument("point clouds must have equal sizes (" + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
}

std::vector<double> sorted_column(const RowMatrix &m, Eigen::Index col) {
  std::vector<double> v(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) v[static_cast<std::size_t>(i)] = m(i, col);
  std::sort(v.begin(), v.end());
  return v;
}

std::vector<double> sorted_projection(const RowMatrix &m, const Vector &dir) {
  Vector p = m * dir;
  std::vector<double> v(p.data(), p.data() + p.size());
  std::sort(v.begin(), v.end());
  return v;
}

// Dense n x n matrix of squared Euclidean distances, row-major.
std::vector<double> squared_distances(const RowMatrix &pa, const RowMatrix &pb) {
  const auto n = static_cast<std::size_t>(pa.rows());
  const auto d = pa.cols();
  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double *x = pa.data() + static_cast<Eigen::Index>(i) * d;
    double *row = cost.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double *y = pb.data() + static_cast<Eigen::Index>(j) * d;
      double s = 0.0;
      for (Eigen::Index k = 0; k < d; ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
      row[j] = s;
    }
  }
  return cost;
}

// Linear assignment by shortest augmenting paths (Jonker-Volgenant style
// Dijkstra on reduced costs c_ij - v_j), exact. The column duals are warm
// started by an epsilon-scaling auction: plain augmenting row reduction
// cycles on the many near-ties of Euclidean costs, the auction does not.
// Only the duals are kept; rows are then assigned to their exact reduced
// cost minimum where uncontested and the rest are augmented.
class JonkerVolgenant {
 public:
  JonkerVolgenant(std::size_t n, const std::vector<double> &cost)
      : n_(n), c_(cost), x_(n, -1), y_(n, -1), v_(n, 0.0) {}

  std::vector<std::ptrdiff_t> solve() {
    if (n_ == 1) return {0};
    auction_warm_start();
    augment(claim_row_minima());
    return x_;
  }

 private:
  double cost(std::size_t i, std::size_t j) const { return c_[i * n_ + j]; }

  void auction_warm_start() {
    std::fill(v_.begin(), v_.end(), kInf);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) v_[j] = std::min(v_[j], cost(i, j));
    const double cmax = *std::max_element(c_.begin(), c_.end());
    if (!(cmax > 0.0)) return;

    std::vector<std::size_t> queue;
    for (double eps = cmax / 32.0; eps > cmax * 1e-9; eps /= 6.0) {
      std::fill(x_.begin(), x_.end(), -1);
      std::fill(y_.begin(), y_.end(), -1);
      queue.resize(n_);
      for (std::size_t i = 0; i < n_; ++i) queue[i] = n_ - 1 - i;
      for (std::size_t bids = 0; !queue.empty() && bids < kBidsPerRow * n_; ++bids) {
        const std::size_t i = queue.back();
        queue.pop_back();
        std::size_t j1 = 0;
        double u1 = kInf, u2 = kInf;
        for (std::size_t j = 0; j < n_; ++j) {
          const double r = cost(i, j) - v_[j];
          if (r < u2) {
            if (r < u1) {
              u2 = u1;
              u1 = r;
              j1 = j;
            } else {
              u2 = r;
            }
          }
        }
        v_[j1] -= (u2 - u1) + eps;
        if (y_[j1] >= 0) {
          x_[static_cast<std::size_t>(y_[j1])] = -1;
          queue.push_back(static_cast<std::size_t>(y_[j1]));
        }
        x_[i] = static_cast<std::ptrdiff_t>(j1);
        y_[j1] = static_cast<std::ptrdiff_t>(i);
      }
    }
  }

  // Assigns each row to its reduced-cost minimum unless that column is
  // taken, so every assigned pair satisfies complementary slackness.
  std::vector<std::size_t> claim_row_minima() {
    std::fill(x_.begin(), x_.end(), -1);
    std::fill(y_.begin(), y_.end(), -1);
    std::vector<std::size_t> free_rows;
    for (std::size_t i = 0; i < n_; ++i) {
      std::size_t best = 0;
      double m = kInf;
      for (std::size_t j = 0; j < n_; ++j) {
        const double r = cost(i, j) - v_[j];
        if (r < m) {
          m = r;
          best = j;
        }
      }
      if (y_[best] < 0) {
        x_[i] = static_cast<std::ptrdiff_t>(best);
        y_[best] = static_cast<std::ptrdiff_t>(i);
      } else {
        free_rows.push_back(i);
      }
    }
    return free_rows;
  }

  // Shortest path from row `start` to an unassigned column; updates the
  // column duals of settled columns and returns the end column.
  std::size_t shortest_path(std::size_t start) {
    std::vector<std::size_t> cols(n_);
    for (std::size_t j = 0; j < n_; ++j) {
      cols[j] = j;
      dist_[j] = cost(start, j) - v_[j];
      pred_[j] = start;
    }
    // cols[0, ready) settled, cols[ready, lo) scanned, cols[lo, hi) at the
    // current minimum distance, cols[hi, n) unreached.
    std::size_t lo = 0, hi = 0, ready = 0;
    std::ptrdiff_t final_col = -1;
    while (final_col < 0) {
      if (lo == hi) {
        ready = lo;
        hi = lo + 1;
        double m = dist_[cols[lo]];
        for (std::size_t k = hi; k < n_; ++k) {
          const std::size_t j = cols[k];
          if (dist_[j] <= m) {
            if (dist_[j] < m) {
              hi = lo;
              m = dist_[j];
            }
            cols[k] = cols[hi];
            cols[hi++] = j;
          }
        }
        for (std::size_t k = lo; k < hi; ++k)
          if (y_[cols[k]] < 0) {
            final_col = static_cast<std::ptrdiff_t>(cols[k]);
            break;
          }
      }
      if (final_col < 0) final_col = scan(cols, lo, hi);
    }
    // Every column on the final frontier sits at the end column's distance.
    const double m = dist_[static_cast<std::size_t>(final_col)];
    for (std::size_t k = 0; k < ready; ++k) {
      const std::size_t j = cols[k];
      v_[j] += dist_[j] - m;
    }
    return static_cast<std::size_t>(final_col);
  }

  std::ptrdiff_t scan(std::vector<std::size_t> &cols, std::size_t &lo, std::size_t &hi) {
    while (lo != hi) {
      const std::size_t j = cols[lo++];
      const auto i = static_cast<std::size_t>(y_[j]);
      const double m = dist_[j];
      const double offset = cost(i, j) - v_[j] - m;
      for (std::size_t k = hi; k < n_; ++k) {
        const std::size_t jk = cols[k];
        const double r = cost(i, jk) - v_[jk] - offset;
        if (r < dist_[jk]) {
          dist_[jk] = r;
          pred_[jk] = i;
          if (r == m) {
            if (y_[jk] < 0) return static_cast<std::ptrdiff_t>(jk);
            cols[k] = cols[hi];
            cols[hi++] = jk;
          }
        }
      }
    }
    return -1;
  }

  void augment(const std::vector<std::size_t> &free_rows) {
    dist_.assign(n_, 0.0);
    pred_.assign(n_, 0);
    for (const std::size_t start : free_rows) {
      std::size_t j = shortest_path(start);
      for (;;) {
        const std::size_t i = pred_[j];
        y_[j] = static_cast<std::ptrdiff_t>(i);
        const std::ptrdiff_t previous = x_[i];
        x_[i] = static_cast<std::ptrdiff_t>(j);
        if (i == start) break;
        j = static_cast<std::size_t>(previous);
      }
    }
  }

  static constexpr double kInf = std::numeric_limits<double>::infinity();
  static constexpr std::size_t kBidsPerRow = 16;
  std::size_t n_;
  const std::vector<double> &c_;
  std::vector<std::ptrdiff_t> x_;  // row -> column
  std::vector<std::ptrdiff_t> y_;  // column -> row
  std::vector<double> v_;          // column duals
  std::vector<double> dist_;
  std::vector<std::size_t> pred_;
};

}  // namespace

PointCloud::PointCloud(RowMatrix points) : points_(std::move(points)) {
  if (points_.rows() < 1 || points_.cols() < 1)
    throw std::invalid_argument("point cloud needs at least one point of positive dimension");
  if (!points_.allFinite()) throw std::invalid_argument("point cloud entries must be finite");
}

PointCloud PointCloud::from_ensemble(const Ensemble &e) { return PointCloud(e.particles); }

std::string to_string(W2Method m) {
  switch (m) {
    case W2Method::Exact1D:
      return "exact_1d";
    case W2Method::Assignment:
      return "assignment";
    case W2Method::Sliced:
      return "sliced";
  }
  return "unknown";
}

double sorted_w2_squared(const std::vector<double> &a, const std::vector<double> &b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("empty sample");
  if (a.size() == b.size()) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s / static_cast<double>(a.size());
  }
  // Integrate (Qa(u) - Qb(u))^2 over the merged quantile breakpoints.
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double u = 0.0, s = 0.0;
  while (i < a.size() && j < b.size()) {
    const double next_a = static_cast<double>(i + 1) / na;
    const double next_b = static_cast<double>(j + 1) / nb;
    const double next = std::min(next_a, next_b);
    s += (next - u) * (a[i] - b[j]) * (a[i] - b[j]);
    u = next;
    if (next_a <= next) ++i;
    if (next_b <= next) ++j;
  }
  return s;
}

Assignment optimal_assignment(const PointCloud &a, const PointCloud &b, AssignmentOptions options) {
  require_same_size(a, b);
  require_dim("point clouds", a.dim(), b.dim());
  const std::size_t n = a.size();
  if (n > options.max_size) throw AssignmentTooLarge(n, options.max_size);

  const std::vector<double> cost = squared_distances(a.points(), b.points());
  const std::vector<std::ptrdiff_t> row_to_col = JonkerVolgenant(n, cost).solve();

  Assignment result;
  result.target.resize(n);
  std::vector<double> matched(n);
  for (std::size_t i = 0; i < n; ++i) {
    result.target[i] = static_cast<std::size_t>(row_to_col[i]);
    matched[i] = cost[i * n + result.target[i]];
  }
  // Summing in sorted order makes the total independent of which cloud
  // is listed first.
  std::sort(matched.begin(), matched.end());
  for (double c : matched) result.total_cost += c;
  return result;
}

W2Estimate w2_exact_1d(const PointCloud &a, const PointCloud &b) {
  require_same_size(a, b);
  if (a.dim() != 1 || b.dim() != 1) throw std::invalid_argument("w2_exact_1d requires d = 1");
  const double sq = sorted_w2_squared(sorted_column(a.points(), 0), sorted_column(b.points(), 0));
  return W2Estimate{std::sqrt(sq), W2Method::Exact1D, std::nullopt, std::nullopt};
}

W2Estimate w2_assignment(const PointCloud &a, const PointCloud &b, AssignmentOptions options) {
  const auto match = optimal_assignment(a, b, options);
  const double sq = std::max(0.0, match.total_cost / static_cast<double>(a.size()));
  return W2Estimate{std::sqrt(sq), W2Method::Assignment, std::nullopt, std::nullopt};
}

W2Estimate w2_sliced(const PointCloud &a, const PointCloud &b, std::size_t n_projections, std::uint64_t seed) {
  require_dim("point clouds", a.dim(), b.dim());
  if (n_projections < 1) throw std::invalid_argument("n_projections must be >= 1");
  const auto d = static_cast<Eigen::Index>(a.dim());
  if (d == 1) {
    // Every direction is +-1: the exact 1-D value with no projection noise.
    const double s = sorted_w2_squared(sorted_column(a.points(), 0), sorted_column(b.points(), 0));
    return W2Estimate{std::sqrt(std::max(0.0, s)), W2Method::Sliced, n_projections, 0.0};
  }
  std::vector<double> sq(n_projections);
  const NoiseSource directions(seed, std::nullopt, StreamDomain::Projections);
  for (std::size_t k = 0; k < n_projections; ++k) {
    Vector theta(d);
    do {
      directions.standard_normal(k, 0, theta);
    } while (theta.squaredNorm() == 0.0);
    theta.normalize();
    sq[k] = sorted_w2_squared(sorted_projection(a.points(), theta), sorted_projection(b.points(), theta));
  }
  const double k = static_cast<double>(n_projections);
  double mean = 0.0;
  for (double s : sq) mean += s;
  mean /= k;
  double var = 0.0;
  for (double s : sq) var += (s - mean) * (s - mean);
  var = n_projections > 1 ? var / (k - 1.0) : 0.0;
  const double se_sq = std::sqrt(var / k);
  const double value = std::sqrt(std::max(0.0, mean));
  // Delta method for the square root.
  const double se = value > 0.0 ? se_sq / (2.0 * value) : 0.0;
  return W2Estimate{value, W2Method::Sliced, n_projections, se};
}

W2Estimate w2_auto(const PointCloud &a, const PointCloud &b, std::size_t n_projections, std::uint64_t seed,
                   AssignmentOptions options) {
  require_dim("point clouds", a.dim(), b.dim());
  if (a.size() == b.size()) {
    if (a.dim() == 1) return w2_exact_1d(a, b);
    if (a.dim() <= 4 && a.size() <= options.max_size) return w2_assignment(a, b, options);
  }
  return w2_sliced(a, b, n_projections, seed);
}

PointCloud displacement_interpolate(const PointCloud &a, const PointCloud &b, double t,
                                    AssignmentOptions options) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("interpolation time must lie in [0, 1]");
  const auto match = optimal_assignment(a, b, options);
  RowMatrix out(a.points().rows(), a.points().cols());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out.row(r) = (1.0 - t) * a.points().row(r) + t * b.points().row(static_cast<Eigen::Index>(match.target[i]));
  }
  return PointCloud(std::move(out));
}

}  // namespace proxlmc
