#pragma once

// Discrete sup and Hoelder seminorms of vector-valued grid data.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "hk/geometry.hpp"

namespace hk {

inline double sup_norm(const std::vector<Eigen::VectorXd>& values) {
  double s = 0.0;
  for (const auto& v : values) s = std::max(s, v.norm());
  return s;
}

/// max |v_i - v_j| / d(x_i, x_j)^alpha over grid pairs with 0 < d <= radius.
/// Above max_pairs candidate pairs, anchors i are taken with a fixed stride
/// (every j is still compared against each anchor).
inline double holder_seminorm(const ManifoldModel& model, const std::vector<ChartPoint>& points,
                              const std::vector<Eigen::VectorXd>& values, double alpha, double radius,
                              std::int64_t max_pairs = 1000000) {
  const std::int64_t N = static_cast<std::int64_t>(points.size());
  if (N < 2) return 0.0;
  const std::int64_t pairs = N * (N - 1) / 2;
  const std::int64_t stride = pairs > max_pairs ? (pairs + max_pairs - 1) / max_pairs * 2 : 1;

  double best = 0.0;
  for (std::int64_t i = 0; i < N; i += stride) {
    const std::int64_t j0 = stride == 1 ? i + 1 : 0;
    for (std::int64_t j = j0; j < N; ++j) {
      if (j == i) continue;
      const double d = geodesic_distance(model, points[i], points[j]);
      if (!(d > 1e-14) || d > radius) continue;
      best = std::max(best, (values[i] - values[j]).norm() / std::pow(d, alpha));
    }
  }
  return best;
}

}  // namespace hk
