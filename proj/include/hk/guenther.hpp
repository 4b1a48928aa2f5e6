#pragma once

// Guenther's fixed-point scheme for conformal immersions on flat tori.
//
// Fields live on the uniform N^n spectral grid. A symmetric 2-tensor field is a
// FieldRq with n(n+1)/2 columns in second_order_pairs(n) order; a 1-form field
// has n columns. All tensor components are frame components, so g = I.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hk/embedding.hpp"
#include "hk/error.hpp"
#include "hk/freemap.hpp"
#include "hk/geometry.hpp"
#include "hk/norms.hpp"
#include "hk/torus_field.hpp"

namespace hk {

struct ResolventConfig {
  double e = 1.0;
};

inline int sym_components(int n) { return n * (n + 1) / 2; }

/// Row `p` of a symmetric tensor field as an n x n matrix.
inline Eigen::MatrixXd sym_at(const FieldRq& field, Eigen::Index p, int n) {
  Eigen::MatrixXd h(n, n);
  int c = 0;
  for (auto [i, j] : second_order_pairs(n)) h(i, j) = h(j, i) = field(p, c++);
  return h;
}

inline void set_sym_at(FieldRq& field, Eigen::Index p, const Eigen::MatrixXd& h) {
  const int n = static_cast<int>(h.rows());
  int c = 0;
  for (auto [i, j] : second_order_pairs(n)) field(p, c++) = h(i, j);
}

/// max over grid points of the Euclidean norm of the row.
inline double field_sup(const FieldRq& f) {
  return f.size() == 0 ? 0.0 : f.rowwise().norm().maxCoeff();
}

/// Sup of the frame g-norm of a symmetric tensor field.
inline double sym_sup(const FieldRq& f, int n) {
  double s = 0.0;
  for (Eigen::Index p = 0; p < f.rows(); ++p) s = std::max(s, sym_at(f, p, n).norm());
  return s;
}

/// (Delta - e)^-1 applied componentwise. On a flat torus the rough Laplacian of
/// a tensor of any rank acts on frame components separately, so tensor_rank
/// only fixes how many columns make up one tensor.
inline FieldRq resolvent_apply(const TorusSpectral& sp, const FieldRq& field, double e, int tensor_rank = 0) {
  if (tensor_rank < 0) throw DomainError("resolvent_apply: tensor rank must be >= 0");
  int block = 1;
  for (int r = 0; r < tensor_rank; ++r) block *= sp.dim();
  if (field.cols() % block) throw DomainError("resolvent_apply: column count does not match the tensor rank");
  return sp.backward(sp.resolvent(sp.forward(field), e));
}

/// The heat-kernel embedding sampled on the spectral grid together with its
/// pointwise jet operators and Gram inverses.
class BaseMap {
 public:
  BaseMap(EmbeddingMap map, int N) : map_(std::move(map)), sp_(map_.model(), N) {
    const int n = map_.dim();
    const SampleGrid grid = sp_.grid();
    const std::ptrdiff_t points = static_cast<std::ptrdiff_t>(grid.size());
    grid_points_ = grid.points;
    U_.resize(points, map_.q());
    P_.resize(points);
    G_inv_.resize(points);
    bool free = true;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t p = 0; p < points; ++p) {
      const JetBlock jets = map_.jets(grid.points[p]);
      U_.row(p) = jets.values.transpose();
      P_[p] = assemble_P(jets, metric_at(map_.model(), grid.points[p]),
                         orthonormal_frame(map_.model(), grid.points[p]));
      try {
        G_inv_[p] = FreeMapAt(P_[p], n, map_.t()).gram_inverse();
      } catch (const DomainError&) {
#pragma omp critical
        free = false;
      }
    }
    if (!free) throw DomainError("BaseMap: the embedding is not free at some grid point");
  }

  const EmbeddingMap& map() const { return map_; }
  const TorusSpectral& spectral() const { return sp_; }
  const std::vector<ChartPoint>& points() const { return grid_points_; }
  int dim() const { return map_.dim(); }
  int q() const { return map_.q(); }
  double t() const { return map_.t(); }
  Eigen::Index size() const { return U_.rows(); }

  /// Values of u = Psi^q on the grid.
  const FieldRq& values() const { return U_; }
  const Eigen::MatrixXd& P(Eigen::Index p) const { return P_[p]; }
  const Eigen::MatrixXd& gram_inverse(Eigen::Index p) const { return G_inv_[p]; }
  /// Frame gradients of u at grid point p (n x q).
  auto gradient(Eigen::Index p) const { return P_[p].topRows(dim()); }

  /// Pointwise E = P^T (P P^T)^-1 on a field of right-hand sides (one column per jet row).
  FieldRq apply_E(const FieldRq& rhs) const {
    if (rhs.rows() != size() || rhs.cols() != jet_rows(dim())) throw DomainError("apply_E: rhs field shape mismatch");
    FieldRq out(size(), q());
    const std::ptrdiff_t points = static_cast<std::ptrdiff_t>(size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t p = 0; p < points; ++p)
      out.row(p) = (P_[p].transpose() * (G_inv_[p] * rhs.row(p).transpose())).transpose();
    return out;
  }

  /// w = E(0, g) on the grid.
  FieldRq kernel_generator() const {
    FieldRq rhs(size(), jet_rows(dim()));
    rhs.rowwise() = metric_rhs(dim()).transpose();
    return apply_E(rhs);
  }

 private:
  EmbeddingMap map_;
  TorusSpectral sp_;
  std::vector<ChartPoint> grid_points_;
  FieldRq U_;
  std::vector<Eigen::MatrixXd> P_;
  std::vector<Eigen::MatrixXd> G_inv_;
};

namespace detail {

/// Spectra (on the base grid) of the quadratic sums
///   S_i  = sum_a Delta v_a D_i v_a                                  (n columns)
///   L_ij = sum_a [D_l D_i v_a D_l D_j v_a - Delta v_a D_i D_j v_a
///                 - (e/2) D_i v_a D_j v_a]                           (pairs)
/// computed on the 3/2-padded grid in column chunks.
inline Spectrum quadratic_sums(const TorusSpectral& sp, const FieldRq& v, double e, int chunk = 64) {
  const int n = sp.dim();
  const auto pairs = second_order_pairs(n);
  const int np = static_cast<int>(pairs.size());
  const Spectrum V = sp.forward(v);
  const int padded_points = static_cast<int>(std::pow(sp.padded_N(), n) + 0.5);
  FieldRq acc = FieldRq::Zero(padded_points, n + np);

  auto pair_index = [&](int i, int j) {
    if (i > j) std::swap(i, j);
    for (int c = 0; c < np; ++c)
      if (pairs[c].first == i && pairs[c].second == j) return c;
    return -1;
  };

  for (Eigen::Index c0 = 0; c0 < V.cols(); c0 += chunk) {
    const Eigen::Index w = std::min<Eigen::Index>(chunk, V.cols() - c0);
    const Spectrum Vc = V.middleCols(c0, w);
    std::vector<FieldRq> d1(n), d2(np);
    for (int i = 0; i < n; ++i) d1[i] = sp.backward_padded(sp.derivative(Vc, i));
    for (int c = 0; c < np; ++c) d2[c] = sp.backward_padded(sp.derivative2(Vc, pairs[c].first, pairs[c].second));
    FieldRq lap = FieldRq::Zero(padded_points, w);
    for (int k = 0; k < n; ++k) lap += d2[pair_index(k, k)];

    for (int i = 0; i < n; ++i) acc.col(i) += (lap.array() * d1[i].array()).rowwise().sum().matrix();
    for (int c = 0; c < np; ++c) {
      const auto [i, j] = pairs[c];
      Eigen::ArrayXXd s = -lap.array() * d2[c].array() - 0.5 * e * d1[i].array() * d1[j].array();
      for (int l = 0; l < n; ++l) s += d2[pair_index(l, i)].array() * d2[pair_index(l, j)].array();
      acc.col(n + c) += s.rowwise().sum().matrix();
    }
  }
  return sp.forward_from_padded(acc);
}

}  // namespace detail

/// L_ij of v as a symmetric tensor field. The curvature contributions
/// (1/2)(R_i^k D_j v + R_j^k D_i v) . D_k v vanish on the flat backend.
inline FieldRq compute_Lij(const TorusSpectral& sp, const FieldRq& v, double e) {
  if (!(e > 0.0)) throw DomainError("compute_Lij: e must be > 0");
  const int n = sp.dim();
  const Spectrum s = detail::quadratic_sums(sp, v, e);
  return sp.backward(s.rightCols(sym_components(n)));
}

/// Curvature terms r^n_ij w_n for a 1-form w with covariant derivative
/// nabla_w(k, n) = nabla_k w_n, in coordinate components:
///   2 R_i^k_j^n nabla_k w_n - R_i^k_j^m w_n Gamma^n_km + nabla^k(R_ikj^n) w_n
///   - g^kl R_imj^n w_n Gamma^m_lk - R_i^m w_n Gamma^n_mj.
/// The derivative-of-curvature term is dropped for models with parallel curvature.
inline Eigen::MatrixXd compute_r_terms(const Eigen::VectorXd& w, const Eigen::MatrixXd& nabla_w,
                                       const MetricAtPoint& m) {
  const int n = static_cast<int>(m.g.rows());
  if (w.size() != n || nabla_w.rows() != n || nabla_w.cols() != n) throw DomainError("compute_r_terms: shape mismatch");
  if (!m.curvature_parallel) throw DomainError("compute_r_terms: curvature derivative data unavailable");
  const Eigen::MatrixXd ric_up = m.ricci * m.g_inv;  // R_i^m
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k)
        for (int a = 0; a < n; ++a) {
          const double gka = m.g_inv(k, a);
          if (gka == 0.0) continue;
          for (int nn = 0; nn < n; ++nn) {
            const double Rup = gka * m.riemann(i, a, j, nn);  // R_i^k_j^nn
            s += 2.0 * Rup * nabla_w(k, nn);
            for (int c = 0; c < n; ++c) s -= Rup * w[c] * m.christoffel[c](k, nn);
          }
        }
      for (int mm = 0; mm < n; ++mm)
        for (int nn = 0; nn < n; ++nn) {
          const double R = m.riemann(i, mm, j, nn);
          if (R != 0.0) {
            double gam = 0.0;
            for (int k = 0; k < n; ++k)
              for (int l = 0; l < n; ++l) gam += m.g_inv(k, l) * m.christoffel[mm](l, k);
            s -= R * w[nn] * gam;
          }
          s -= ric_up(i, mm) * w[nn] * m.christoffel[nn](mm, j);
        }
      r(i, j) = s;
    }
  return r;
}

/// The right-hand side (rhs1, rhs2) of the quadratic term on the grid:
///   rhs1 = -(Delta - e)^-1 (Delta v . D v),  rhs2 = (Delta - e)^-1 L(v).
/// With these, P(u) Q = (rhs1, rhs2) gives
///   D u . D v + D v . D u + D v . D v = f - 2k g
/// at a fixed point v = E(0, -f/2 + k g) + Q(v).
inline FieldRq quadratic_rhs(const TorusSpectral& sp, const FieldRq& v, double e) {
  if (!(e > 0.0)) throw DomainError("assemble_Q: e must be > 0");
  const Spectrum r = sp.resolvent(detail::quadratic_sums(sp, v, e), e);
  FieldRq rhs = sp.backward(r);
  rhs.leftCols(sp.dim()) *= -1.0;
  return rhs;
}

inline FieldRq assemble_Q(const BaseMap& base, const FieldRq& v, double e) {
  if (v.rows() != base.size() || v.cols() != base.q()) throw DomainError("assemble_Q: field shape mismatch");
  return base.apply_E(quadratic_rhs(base.spectral(), v, e));
}

/// E(0, -f/2 + k g).
inline FieldRq guenther_seed(const BaseMap& base, const FieldRq& f, double k) {
  const int n = base.dim();
  if (f.rows() != base.size() || f.cols() != sym_components(n)) throw DomainError("seed: forcing field shape mismatch");
  FieldRq rhs = FieldRq::Zero(base.size(), jet_rows(n));
  rhs.rightCols(sym_components(n)) = -0.5 * f;
  const int d0 = jet_rows(n) - n;
  rhs.middleCols(d0, n).array() += k;
  return base.apply_E(rhs);
}

struct ResidualNorms {
  double direct_sup = 0.0;
  double direct_holder = 0.0;
  double pullback_sup = 0.0;
  double pullback_holder = 0.0;
};

namespace detail {

inline Eigen::MatrixXd traceless(const Eigen::MatrixXd& A) {
  const int n = static_cast<int>(A.rows());
  return A - (A.trace() / n) * Eigen::MatrixXd::Identity(n, n);
}

inline std::vector<FieldRq> frame_gradients(const TorusSpectral& sp, const FieldRq& v) {
  const Spectrum V = sp.forward(v);
  std::vector<FieldRq> d(sp.dim());
  for (int i = 0; i < sp.dim(); ++i) d[i] = sp.backward(sp.derivative(V, i));
  return d;
}

inline Eigen::MatrixXd gradient_at(const std::vector<FieldRq>& d, Eigen::Index p) {
  Eigen::MatrixXd Dv(d.size(), d[0].cols());
  for (std::size_t i = 0; i < d.size(); ++i) Dv.row(i) = d[i].row(p);
  return Dv;
}

}  // namespace detail

/// Traceless residuals of the conformal embedding equation for u + v:
/// direct:   tr^perp[D u.D v + D v.D u + D v.D v - f]
/// pullback: tr^perp[pullback(u + v) - pullback(u) - f]
/// Sup norms are frame g-norms; Hoelder seminorms use `alpha`.
inline ResidualNorms verify_conformal(const BaseMap& base, const FieldRq& v, const FieldRq& f, double alpha = 0.5) {
  const int n = base.dim();
  if (v.rows() != base.size() || v.cols() != base.q()) throw DomainError("verify_conformal: field shape mismatch");
  if (f.rows() != base.size() || f.cols() != sym_components(n))
    throw DomainError("verify_conformal: forcing field shape mismatch");
  const auto d = detail::frame_gradients(base.spectral(), v);
  const std::ptrdiff_t points = static_cast<std::ptrdiff_t>(base.size());
  std::vector<Eigen::VectorXd> direct(points), pull(points);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < points; ++p) {
    const Eigen::MatrixXd Du = base.gradient(p);
    const Eigen::MatrixXd Dv = detail::gradient_at(d, p);
    const Eigen::MatrixXd F = sym_at(f, p, n);
    const Eigen::MatrixXd cross = Du * Dv.transpose();
    const Eigen::MatrixXd a = detail::traceless(cross + cross.transpose() + Dv * Dv.transpose() - F);
    const Eigen::MatrixXd W = Du + Dv;
    const Eigen::MatrixXd b = detail::traceless(W * W.transpose() - Du * Du.transpose() - F);
    direct[p] = Eigen::Map<const Eigen::VectorXd>(a.data(), a.size());
    pull[p] = Eigen::Map<const Eigen::VectorXd>(b.data(), b.size());
  }
  const ManifoldModel& model = base.map().model();
  const double radius = 0.5 * model.injectivity_radius();
  ResidualNorms r;
  r.direct_sup = sup_norm(direct);
  r.pullback_sup = sup_norm(pull);
  r.direct_holder = holder_seminorm(model, base.points(), direct, alpha, radius);
  r.pullback_holder = holder_seminorm(model, base.points(), pull, alpha, radius);
  return r;
}

/// Sup of the direct residual only (no Hoelder pass).
inline double conformal_residual_sup(const BaseMap& base, const FieldRq& v, const FieldRq& f) {
  const int n = base.dim();
  const auto d = detail::frame_gradients(base.spectral(), v);
  double s = 0.0;
  for (Eigen::Index p = 0; p < base.size(); ++p) {
    const Eigen::MatrixXd Du = base.gradient(p);
    const Eigen::MatrixXd Dv = detail::gradient_at(d, p);
    const Eigen::MatrixXd cross = Du * Dv.transpose();
    s = std::max(s, detail::traceless(cross + cross.transpose() + Dv * Dv.transpose() - sym_at(f, p, n)).norm());
  }
  return s;
}

struct SolverConfig {
  double e = 1.0;
  double tol = 1e-12;
  int max_iter = 50;
  double theta = 0.25;
  int s = 2;
  double alpha = 0.5;
};

struct IterationState {
  int l = 0;
  double residual = 0.0;
  double step_norm = 0.0;
  double contraction = 0.0;  // step_norm / previous step_norm; 0 on the first step
  double v_norm = 0.0;
  bool bound_ok = true;         // |v_l| < 2 |seed|
  bool bound_strict_ok = true;  // |v_l| < (1 + 1e-6) |seed|
};

struct SolveResult {
  std::vector<IterationState> history;
  FieldRq v;
  FieldRq seed;
  double seed_norm = 0.0;
  double theta_value = 0.0;
  double e = 1.0;
  double k = 0.0;
  bool bound_ok() const {
    return std::all_of(history.begin(), history.end(), [](const IterationState& s) { return s.bound_ok; });
  }
  bool bound_strict_ok() const {
    return std::all_of(history.begin(), history.end(), [](const IterationState& s) { return s.bound_strict_ok; });
  }
};

/// t^-((s + alpha)/2) |seed|_sup, compared against SolverConfig::theta at entry.
inline double theta_value(double t, const SolverConfig& cfg, double seed_norm) {
  return std::pow(t, -(cfg.s + cfg.alpha) / 2.0) * seed_norm;
}

/// Iterates v_{l+1} = E(0, -f/2 + k g) + Q(v_l) from v_0 = 0 (or `initial`)
/// until the sup step drops to cfg.tol.
inline SolveResult fixed_point_solve(const BaseMap& base, const FieldRq& f, double k, const SolverConfig& cfg,
                                     const FieldRq* initial = nullptr) {
  if (!(cfg.e > 0.0)) throw ConfigError("solver: e must be > 0");
  if (!(cfg.tol > 0.0) || cfg.max_iter < 1) throw ConfigError("solver: tol must be > 0 and max_iter >= 1");
  SolveResult out;
  out.e = cfg.e;
  out.k = k;
  out.seed = guenther_seed(base, f, k);
  out.seed_norm = field_sup(out.seed);
  out.theta_value = theta_value(base.t(), cfg, out.seed_norm);
  if (out.theta_value > cfg.theta)
    throw PreconditionError("entry condition violated: t^-(s+alpha)/2 |seed| = " + std::to_string(out.theta_value) +
                            " exceeds " + std::to_string(cfg.theta));

  FieldRq v = FieldRq::Zero(base.size(), base.q());
  if (initial) {
    if (initial->rows() != v.rows() || initial->cols() != v.cols()) throw DomainError("solver: initial guess shape mismatch");
    v = *initial;
  }
  const double strict = out.seed_norm * (1.0 + 1e-6);
  double prev_step = 0.0;
  int slow = 0;
  for (int l = 1; l <= cfg.max_iter; ++l) {
    FieldRq next = out.seed;
    if (v.cwiseAbs().maxCoeff() > 0.0) next += assemble_Q(base, v, cfg.e);
    IterationState st;
    st.l = l;
    st.step_norm = field_sup(next - v);
    st.contraction = prev_step > 0.0 ? st.step_norm / prev_step : 0.0;
    st.v_norm = field_sup(next);
    st.bound_ok = st.v_norm <= 2.0 * out.seed_norm;
    st.bound_strict_ok = st.v_norm <= strict;
    st.residual = conformal_residual_sup(base, next, f);
    out.history.push_back(st);
    v = std::move(next);
    if (st.step_norm <= cfg.tol) {
      out.v = std::move(v);
      return out;
    }
    slow = (prev_step > 0.0 && st.contraction > 0.95) ? slow + 1 : 0;
    if (slow >= 3)
      throw ConvergenceError("fixed-point iteration diverges: contraction " + std::to_string(st.contraction) +
                             " at step " + std::to_string(l));
    prev_step = st.step_norm;
  }
  throw ConvergenceError("fixed-point iteration did not reach tol within " + std::to_string(cfg.max_iter) +
                         " steps (last step " + std::to_string(out.history.back().step_norm) + ")");
}

/// Minimum Euclidean distance between distinct rows.
inline double min_pairwise_distance(const FieldRq& X, Eigen::Index block = 512) {
  const Eigen::Index N = X.rows();
  if (N < 2) return std::numeric_limits<double>::infinity();
  const Eigen::VectorXd sq = X.rowwise().squaredNorm();
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index r0 = 0; r0 < N; r0 += block) {
    const Eigen::Index h = std::min(block, N - r0);
    const Eigen::MatrixXd K = X.middleRows(r0, h) * X.transpose();
    for (Eigen::Index a = 0; a < h; ++a)
      for (Eigen::Index j = r0 + a + 1; j < N; ++j)
        best = std::min(best, std::max(0.0, sq[r0 + a] + sq[j] - 2.0 * K(a, j)));
  }
  return std::sqrt(best);
}

/// C = u + v with its pullback report. `defect` is the raw traceless part of
/// pullback(C); the residual defect subtracts the part prescribed by u and f.
struct ConformalResult {
  FieldRq C;
  double k = 0.0;
  PullbackReport defect_report;
  ResidualNorms residual;
  double injectivity = 0.0;
  bool injective() const { return injectivity > 0.0; }
};

inline ConformalResult assemble_C(const BaseMap& base, const FieldRq& v, const FieldRq& f, double k,
                                  double alpha = 0.5) {
  const int n = base.dim();
  ConformalResult r;
  r.k = k;
  r.C = base.values() + v;
  const auto d = detail::frame_gradients(base.spectral(), v);
  const Eigen::Index N = base.size();
  PullbackReport& rep = r.defect_report;
  rep.G.resize(N);
  rep.trace_factor.resize(N);
  rep.defect.resize(N);
  std::vector<Eigen::VectorXd> comps(N);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index p = 0; p < N; ++p) {
    const Eigen::MatrixXd W = Eigen::MatrixXd(base.gradient(p)) + detail::gradient_at(d, p);
    rep.G[p] = W * W.transpose();
    rep.trace_factor[p] = rep.G[p].trace() / n;
    rep.defect[p] = rep.G[p] - rep.trace_factor[p] * I;
    comps[p] = Eigen::Map<const Eigen::VectorXd>(rep.defect[p].data(), n * n);
  }
  const ManifoldModel& model = base.map().model();
  rep.defect_sup = sup_norm(comps);
  rep.defect_holder = holder_seminorm(model, base.points(), comps, alpha, 0.5 * model.injectivity_radius());
  rep.trace_min = *std::min_element(rep.trace_factor.begin(), rep.trace_factor.end());
  rep.trace_max = *std::max_element(rep.trace_factor.begin(), rep.trace_factor.end());
  r.residual = verify_conformal(base, v, f, alpha);
  r.injectivity = min_pairwise_distance(r.C);
  return r;
}

/// f = -tr^perp(pullback(u)): the forcing that makes u + v conformal.
inline FieldRq conformal_forcing(const BaseMap& base) {
  const int n = base.dim();
  FieldRq f(base.size(), sym_components(n));
  for (Eigen::Index p = 0; p < base.size(); ++p) {
    const Eigen::MatrixXd Du = base.gradient(p);
    set_sym_at(f, p, -detail::traceless(Du * Du.transpose()));
  }
  return f;
}

/// eps cos(theta_1 + theta_2) T with T traceless: T_11 = 1, T_12 = 1, T_22 = -1.
inline FieldRq manufactured_forcing(const BaseMap& base, double eps) {
  const int n = base.dim();
  if (n < 2) throw DomainError("manufactured_forcing: needs n >= 2");
  FieldRq f(base.size(), sym_components(n));
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n, n);
  T(0, 0) = 1.0;
  T(1, 1) = -1.0;
  T(0, 1) = T(1, 0) = 1.0;
  for (Eigen::Index p = 0; p < base.size(); ++p) {
    const Eigen::VectorXd& x = base.points()[p].x;
    set_sym_at(f, p, eps * std::cos(x[0] + x[1]) * T);
  }
  return f;
}

}  // namespace hk
