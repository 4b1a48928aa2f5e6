#pragma once

// Discrete C^{s,alpha} norm estimates, log-log order fits and scaling sweeps.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hk/embedding.hpp"
#include "hk/error.hpp"
#include "hk/freemap.hpp"
#include "hk/norms.hpp"
#include "hk/torus_field.hpp"

namespace hk {

struct NormEstimate {
  double sup = 0.0;
  std::vector<double> derivative_sups;  // orders 1..s
  double holder = 0.0;                  // Hoelder seminorm of the order-s derivatives
  int s = 0;
  double alpha = 0.5;
  double total() const {
    double t = sup + holder;
    for (double d : derivative_sups) t += d;
    return t;
  }
};

namespace detail {

inline void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("holder_norm: alpha must lie in (0, 1)");
}

inline std::vector<Eigen::VectorXd> rows_of(const FieldRq& f) {
  std::vector<Eigen::VectorXd> out(f.rows());
  for (Eigen::Index p = 0; p < f.rows(); ++p) out[p] = f.row(p).transpose();
  return out;
}

}  // namespace detail

/// Spectral estimate on a flat torus: all frame derivatives of order r are
/// stacked (ordered multi-indices), so the row norm is the tensor norm.
inline NormEstimate holder_norm(const TorusSpectral& sp, const FieldRq& field, int s, double alpha) {
  detail::check_alpha(alpha);
  if (s < 0 || s > 6) throw DomainError("holder_norm: s must lie in [0, 6] on the spectral backend");
  if (field.rows() != sp.points()) throw DomainError("holder_norm: field does not live on this grid");
  const int n = sp.dim();
  NormEstimate est;
  est.s = s;
  est.alpha = alpha;
  est.sup = field.size() ? field.rowwise().norm().maxCoeff() : 0.0;

  std::vector<Spectrum> level{sp.forward(field)};
  FieldRq top = field;
  for (int r = 1; r <= s; ++r) {
    std::vector<Spectrum> next;
    next.reserve(level.size() * n);
    for (const Spectrum& S : level)
      for (int i = 0; i < n; ++i) next.push_back(sp.derivative(S, i));
    level = std::move(next);
    FieldRq stacked(field.rows(), field.cols() * static_cast<Eigen::Index>(level.size()));
    for (std::size_t k = 0; k < level.size(); ++k)
      stacked.middleCols(k * field.cols(), field.cols()) = sp.backward(level[k]);
    est.derivative_sups.push_back(stacked.size() ? stacked.rowwise().norm().maxCoeff() : 0.0);
    top = std::move(stacked);
  }
  const SampleGrid grid = sp.grid();
  est.holder = holder_seminorm(sp.model(), grid.points, detail::rows_of(top), alpha,
                               0.5 * sp.model().injectivity_radius());
  return est;
}

/// Estimate for a tabulated map (jets up to order 2) on an arbitrary grid.
inline NormEstimate holder_norm(const EmbeddingMap& map, const SampleGrid& grid, int s, double alpha) {
  detail::check_alpha(alpha);
  if (s < 0 || s > 2) throw DomainError("holder_norm: tabulated maps carry jets up to order 2 only");
  const int n = map.dim();
  const std::ptrdiff_t N = static_cast<std::ptrdiff_t>(grid.size());
  std::vector<Eigen::VectorXd> values(N), d1(N), d2(N);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < N; ++p) {
    const ChartPoint& x = grid.points[p];
    const JetBlock jets = map.jets(x);
    values[p] = jets.values;
    if (s >= 1) {
      const Eigen::MatrixXd P = assemble_P(jets, metric_at(map.model(), x), orthonormal_frame(map.model(), x));
      Eigen::MatrixXd g1 = P.topRows(n);
      d1[p] = Eigen::Map<const Eigen::VectorXd>(g1.data(), g1.size());
      if (s == 2) {
        // full frame Hessian: every (i, j) and (j, i)
        Eigen::MatrixXd h(n * n, map.q());
        int row = n;
        for (auto [i, j] : second_order_pairs(n)) {
          h.row(i * n + j) = P.row(row);
          h.row(j * n + i) = P.row(row);
          ++row;
        }
        d2[p] = Eigen::Map<const Eigen::VectorXd>(h.data(), h.size());
      }
    }
  }
  NormEstimate est;
  est.s = s;
  est.alpha = alpha;
  est.sup = sup_norm(values);
  if (s >= 1) est.derivative_sups.push_back(sup_norm(d1));
  if (s == 2) est.derivative_sups.push_back(sup_norm(d2));
  const auto& top = s == 0 ? values : (s == 1 ? d1 : d2);
  est.holder = holder_seminorm(map.model(), grid.points, top, alpha, 0.5 * map.model().injectivity_radius());
  return est;
}

struct OrderFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::vector<double> t_values;
  std::vector<double> y_values;
};

/// Least-squares fit log y = slope log t + intercept.
inline OrderFit fit_order(const std::vector<double>& t, const std::vector<double>& y) {
  if (t.size() != y.size()) throw DomainError("fit_order: t and y differ in length");
  if (t.size() < 3) throw DomainError("fit_order: at least 3 samples are required");
  const Eigen::Index m = static_cast<Eigen::Index>(t.size());
  Eigen::MatrixXd A(m, 2);
  Eigen::VectorXd b(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!(t[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(t[i]) || !std::isfinite(y[i]))
      throw DomainError("fit_order: samples must be positive and finite");
    A(i, 0) = std::log(t[i]);
    A(i, 1) = 1.0;
    b[i] = std::log(y[i]);
  }
  const Eigen::Vector2d x = A.colPivHouseholderQr().solve(b);
  OrderFit fit;
  fit.slope = x[0];
  fit.intercept = x[1];
  fit.t_values = t;
  fit.y_values = y;
  const double ss_res = (A * x - b).squaredNorm();
  const double ss_tot = (b.array() - b.mean()).matrix().squaredNorm();
  fit.r_squared = ss_tot > 0.0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : 1.0;
  return fit;
}

/// Largest singular value of E = P^T (P P^T)^-1 at one point, by power
/// iteration on (P P^T)^-1 from a seeded random probe.
inline double right_inverse_norm(const Eigen::MatrixXd& gram_inverse, std::mt19937_64& rng, int iters = 200) {
  std::normal_distribution<double> nd;
  Eigen::VectorXd x(gram_inverse.rows());
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = nd(rng);
  x.normalize();
  double lam = 0.0;
  for (int it = 0; it < iters; ++it) {
    Eigen::VectorXd y = gram_inverse * x;
    const double next = y.norm();
    if (next == 0.0) return 0.0;
    x = y / next;
    if (std::abs(next - lam) <= 1e-14 * next) {
      lam = next;
      break;
    }
    lam = next;
  }
  return std::sqrt(lam);
}

struct ScalingRow {
  double t = 0.0;
  double psi_norm = 0.0;  // C^{1,alpha} proxy of Psi_t
  double e_norm = 0.0;    // max over sample points of |E|
};

struct ScalingTable {
  std::vector<ScalingRow> rows;
  int s = 2;
  double alpha = 0.5;
  OrderFit psi_fit;
  OrderFit e_fit;
  double psi_exponent = 0.0;  // allowed decay -(alpha)/2 for the C^{1,alpha} proxy
  double e_exponent = 0.0;    // allowed decay -(s + alpha)/2
  bool psi_pass = false;
  bool e_pass = false;
};

/// Norm sweep over a sequence of maps (one per t). The fitted slopes pass
/// when they are no steeper than the allowed exponent minus 0.25.
inline ScalingTable scaling_diagnostics(const std::vector<EmbeddingMap>& maps, const SampleGrid& grid, int s = 2,
                                        double alpha = 0.5, std::uint64_t seed = 1, std::size_t e_probes = 64) {
  if (maps.size() < 3) throw DomainError("scaling_diagnostics: need at least 3 maps");
  ScalingTable table;
  table.s = s;
  table.alpha = alpha;
  table.psi_exponent = -alpha / 2.0;
  table.e_exponent = -(s + alpha) / 2.0;
  std::vector<double> ts, ps, es;
  for (const EmbeddingMap& map : maps) {
    ScalingRow row;
    row.t = map.t();
    row.psi_norm = holder_norm(map, grid, 1, alpha).total();
    std::mt19937_64 rng(seed);
    const std::size_t stride = std::max<std::size_t>(1, grid.size() / e_probes);
    for (std::size_t p = 0; p < grid.size(); p += stride)
      row.e_norm = std::max(row.e_norm, right_inverse_norm(FreeMapAt(map, grid.points[p]).gram_inverse(), rng));
    table.rows.push_back(row);
    ts.push_back(row.t);
    ps.push_back(row.psi_norm);
    es.push_back(row.e_norm);
  }
  table.psi_fit = fit_order(ts, ps);
  table.e_fit = fit_order(ts, es);
  table.psi_pass = table.psi_fit.slope >= table.psi_exponent - 0.25;
  table.e_pass = table.e_fit.slope >= table.e_exponent - 0.25;
  return table;
}

}  // namespace hk
