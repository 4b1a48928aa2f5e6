#pragma once

// Normalized truncated heat-kernel embeddings, pullback metrics, conformal
// defects and the first-order metric correction.

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hk/error.hpp"
#include "hk/geometry.hpp"
#include "hk/norms.hpp"
#include "hk/spectrum.hpp"

namespace hk {

struct TruncationPolicy {
  double rho = 1.0;
  std::optional<int> q_override;
  /// Round q up to the end of the eigenspace it falls in.
  bool complete_eigenspaces = true;
  /// Also keep every mode with lambda * t <= cutoff.
  std::optional<double> lambda_t_cutoff;
};

inline int freeness_floor(int n) { return n + n * (n + 1) / 2; }

/// ceil(t^(-n/2 - rho)), at least the freeness floor.
inline int policy_q(int n, double t, const TruncationPolicy& policy) {
  if (!(t > 0.0)) throw DomainError("t must be > 0");
  if (!(policy.rho > 0.0)) throw DomainError("rho must be > 0");
  const double x = std::pow(t, -n / 2.0 - policy.rho);
  // guard against pow landing a hair above an integer
  const double q = std::ceil(x - 1e-9 * x);
  if (q > 5e8) throw DomainError("truncation dimension too large");
  return std::max(static_cast<int>(q), freeness_floor(n));
}

/// Effective q for a provider: policy_q, raised to cover the lambda*t cutoff
/// and completed to the end of its eigenspace. q_override is used verbatim.
inline int resolve_q(const SpectrumProvider& sp, double t, const TruncationPolicy& policy) {
  const int n = sp.model().dim();
  if (policy.q_override) {
    const int q = *policy.q_override;
    if (q < freeness_floor(n))
      throw PreconditionError("q_override = " + std::to_string(q) + " is below the freeness floor " +
                              std::to_string(freeness_floor(n)));
    if (q > sp.count())
      throw PreconditionError("insufficient spectrum: q = " + std::to_string(q) + " but provider has " +
                              std::to_string(sp.count()));
    return q;
  }
  int q = policy_q(n, t, policy);
  if (policy.lambda_t_cutoff) {
    int c = 0;
    while (c < sp.count() && sp.lambda(c) * t <= *policy.lambda_t_cutoff) ++c;
    q = std::max(q, c);
  }
  if (q > sp.count())
    throw PreconditionError("insufficient spectrum: q(t) = " + std::to_string(q) + " but provider has " +
                            std::to_string(sp.count()));
  if (policy.complete_eigenspaces) q = sp.cluster_end(q - 1);
  return q;
}

/// Analytic provider deep enough for resolve_q at t, times `extend` modes.
inline std::shared_ptr<AnalyticSpectrum> provider_for(const ManifoldModel& model, double t,
                                                      const TruncationPolicy& policy, double extend = 1.0) {
  int need = policy.q_override ? *policy.q_override : policy_q(model.dim(), t, policy);
  need = static_cast<int>(std::ceil(need * extend));
  if (policy.lambda_t_cutoff) {
    auto deep = AnalyticSpectrum::up_to_lambda(model, *policy.lambda_t_cutoff / t);
    // one more shell so the cutoff boundary and completion are both resolved
    need = std::max(need, static_cast<int>(std::ceil(deep.count() * extend)) + 1);
  }
  return std::make_shared<AnalyticSpectrum>(model, std::max(need, 1));
}

inline double normalization_constant(int n, double t) {
  return std::sqrt(2.0) * std::pow(4.0 * std::numbers::pi, n / 4.0) * std::pow(t, (n + 2) / 4.0);
}

/// Psi_t truncated to q components: component j = c_norm e^(-lambda_j t/2) phi_j.
class EmbeddingMap {
 public:
  EmbeddingMap(std::shared_ptr<const SpectrumProvider> provider, double t, const TruncationPolicy& policy)
      : provider_(std::move(provider)), t_(t) {
    if (!provider_) throw DomainError("EmbeddingMap: null provider");
    if (!(t > 0.0)) throw DomainError("EmbeddingMap: t must be > 0");
    q_ = resolve_q(*provider_, t, policy);
    init();
  }

  /// Exactly q components with no policy checks (q = 0 allowed).
  static EmbeddingMap with_q(std::shared_ptr<const SpectrumProvider> provider, double t, int q) {
    if (q < 0 || q > provider->count()) throw PreconditionError("with_q: q out of range");
    if (!(t > 0.0)) throw DomainError("EmbeddingMap: t must be > 0");
    EmbeddingMap m(std::move(provider), t);
    m.q_ = q;
    m.init();
    return m;
  }

  const SpectrumProvider& provider() const { return *provider_; }
  std::shared_ptr<const SpectrumProvider> provider_ptr() const { return provider_; }
  const ManifoldModel& model() const { return provider_->model(); }
  int dim() const { return provider_->model().dim(); }
  double t() const { return t_; }
  int q() const { return q_; }
  double c_norm() const { return c_norm_; }
  bool asymptotic_regime() const { return t_ < 1.0; }
  /// c_norm e^(-lambda_j t / 2)
  const Eigen::VectorXd& weights() const { return weights_; }

  /// Jets of all q components at x.
  JetBlock jets(const ChartPoint& x) const {
    JetBlock b = provider_->eval_jets(x, q_);
    b.values.array() *= weights_.array();
    b.gradients *= weights_.asDiagonal();
    b.hessians *= weights_.asDiagonal();
    return b;
  }

  Eigen::VectorXd value(const ChartPoint& x) const { return jets(x).values; }

 private:
  EmbeddingMap(std::shared_ptr<const SpectrumProvider> provider, double t)
      : provider_(std::move(provider)), t_(t) {}

  void init() {
    c_norm_ = normalization_constant(dim(), t_);
    weights_.resize(q_);
    for (int j = 0; j < q_; ++j) weights_[j] = c_norm_ * std::exp(-0.5 * provider_->lambda(j) * t_);
  }

  std::shared_ptr<const SpectrumProvider> provider_;
  double t_ = 0.0;
  int q_ = 0;
  double c_norm_ = 0.0;
  Eigen::VectorXd weights_;
};

inline EmbeddingMap build_embedding(std::shared_ptr<const SpectrumProvider> provider, double t,
                                    const TruncationPolicy& policy) {
  return EmbeddingMap(std::move(provider), t, policy);
}

/// sum_j dPsi_j (x) dPsi_j in coordinate components.
inline Eigen::MatrixXd pullback_metric(const EmbeddingMap& map, const ChartPoint& x) {
  if (map.q() == 0) return Eigen::MatrixXd::Zero(map.dim(), map.dim());
  const JetBlock b = map.jets(x);
  return b.gradients * b.gradients.transpose();
}

/// tr_g G / n
inline double trace_factor(const Eigen::MatrixXd& G, const Eigen::MatrixXd& g) {
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  if (llt.info() != Eigen::Success) throw DomainError("metric is not positive definite");
  return llt.solve(G).trace() / static_cast<double>(g.rows());
}

/// G - (tr_g G / n) g
inline Eigen::MatrixXd conformal_defect(const Eigen::MatrixXd& G, const Eigen::MatrixXd& g) {
  return G - trace_factor(G, g) * g;
}

/// |D|_g = sqrt(tr(g^-1 D g^-1 D))
inline double g_norm(const Eigen::MatrixXd& D, const Eigen::MatrixXd& g) {
  const Eigen::MatrixXd m = g.llt().solve(D);
  return std::sqrt(std::max(0.0, (m * m).trace()));
}

/// -A1 + (tr_g A1 / n) g + eta1 g
inline Eigen::MatrixXd h1_solve(const Eigen::MatrixXd& A1, double eta1, const Eigen::MatrixXd& g) {
  return -A1 + (trace_factor(A1, g) + eta1) * g;
}

struct CorrectedModel {
  ManifoldModel model;
  std::vector<double> block_factors;
};

/// g(t) = g + t h1 with constant eta1; on the testbeds h1 is a constant
/// multiple of g on each metric block, so g(t) is a block rescaling.
inline CorrectedModel corrected_model(const ManifoldModel& model, double t, double eta1) {
  if (t < 0.0) throw DomainError("corrected_model: t must be >= 0");
  const int n = model.dim();
  const auto blocks = model.coordinate_blocks();
  const int nb = model.block_count();
  std::vector<double> coeff(nb, 0.0);
  std::vector<bool> seen(nb, false);

  // h1 in the orthonormal frame at a few sample points must be diagonal and
  // constant on every block.
  const SampleGrid grid = sample_grid(model, 4);
  for (std::size_t s = 0; s < grid.size(); s += std::max<std::size_t>(1, grid.size() / 7)) {
    const ChartPoint& p = grid.points[s];
    const MetricAtPoint mp = metric_at(model, p);
    const Eigen::MatrixXd e = orthonormal_frame(model, p);
    const Eigen::MatrixXd h = to_frame(e, h1_solve(a1_tensor(model, p), eta1, mp.g));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i != j && std::abs(h(i, j)) > 1e-12)
          throw DomainError("corrected_model: h1 is not block-diagonal; use an external spectrum");
      }
    for (int i = 0; i < n; ++i) {
      const int b = blocks[i];
      if (!seen[b]) {
        coeff[b] = h(i, i);
        seen[b] = true;
      } else if (std::abs(coeff[b] - h(i, i)) > 1e-12) {
        throw DomainError("corrected_model: h1 is not constant on a metric block; use an external spectrum");
      }
    }
  }
  CorrectedModel out{model, std::vector<double>(nb, 1.0)};
  for (int b = 0; b < nb; ++b) {
    out.block_factors[b] = 1.0 + t * coeff[b];
    if (!(out.block_factors[b] > 0.0))
      throw DomainError("corrected_model: degenerate scale 1 + t h1 <= 0");
  }
  if (t > 0.0) out.model = model.rescaled(out.block_factors);
  return out;
}

struct PullbackReport {
  std::vector<Eigen::MatrixXd> G;
  std::vector<double> trace_factor;
  std::vector<Eigen::MatrixXd> defect;
  double defect_sup = 0.0;
  double defect_holder = 0.0;
  double trace_min = 0.0;
  double trace_max = 0.0;
};

/// Frame components of a symmetric tensor, flattened; Euclidean norm = g-norm.
inline Eigen::VectorXd frame_components(const ManifoldModel& model, const ChartPoint& p,
                                        const Eigen::MatrixXd& T) {
  const Eigen::MatrixXd f = to_frame(orthonormal_frame(model, p), T);
  return Eigen::Map<const Eigen::VectorXd>(f.data(), f.size());
}

/// Pullback metric and its conformal defect with respect to the metric of
/// `reference` (which shares chart coordinates with the map's model).
inline PullbackReport pullback_report(const EmbeddingMap& map, const ManifoldModel& reference,
                                      const SampleGrid& grid, double alpha = 0.5) {
  PullbackReport r;
  const std::size_t N = grid.size();
  r.G.resize(N);
  r.trace_factor.resize(N);
  r.defect.resize(N);
  std::vector<Eigen::VectorXd> comps(N);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(N); ++i) {
    const ChartPoint& p = grid.points[i];
    const Eigen::MatrixXd g = metric_at(reference, p).g;
    r.G[i] = pullback_metric(map, p);
    r.trace_factor[i] = trace_factor(r.G[i], g);
    r.defect[i] = r.G[i] - r.trace_factor[i] * g;
    comps[i] = frame_components(reference, p, r.defect[i]);
  }
  r.defect_sup = sup_norm(comps);
  r.defect_holder =
      holder_seminorm(reference, grid.points, comps, alpha, 0.5 * reference.injectivity_radius());
  r.trace_min = *std::min_element(r.trace_factor.begin(), r.trace_factor.end());
  r.trace_max = *std::max_element(r.trace_factor.begin(), r.trace_factor.end());
  return r;
}

inline PullbackReport pullback_report(const EmbeddingMap& map, const SampleGrid& grid, double alpha = 0.5) {
  return pullback_report(map, map.model(), grid, alpha);
}

struct DefectRow {
  double t = 0.0;
  int q = 0;
  double defect_sup = 0.0;
  double defect_holder = 0.0;
  double trace_min = 0.0;
  double trace_max = 0.0;
};

struct CorrectionSpec {
  int l = 1;
  double eta1 = 0.0;
};

/// One row per t. With a correction, the embedding is built from the spectrum
/// of g(t) = g + t h1 and the defect is measured against the original g.
inline std::vector<DefectRow> defect_scan(const ManifoldModel& model, const std::vector<double>& t_grid,
                                          const TruncationPolicy& policy,
                                          const std::optional<CorrectionSpec>& correction, int resolution,
                                          double alpha = 0.5) {
  if (t_grid.empty()) throw DomainError("defect_scan: empty t grid");
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > 0.0 && t_grid[i] < 1.0)) throw DomainError("defect_scan: t values must lie in (0, 1)");
    if (i > 0 && !(t_grid[i] < t_grid[i - 1])) throw DomainError("defect_scan: t grid must be strictly decreasing");
  }
  if (correction && correction->l != 1)
    throw DomainError("defect_scan: only the first-order correction (l = 1) is available natively");
  const SampleGrid grid = sample_grid(model, resolution);
  std::vector<DefectRow> rows;
  for (double t : t_grid) {
    ManifoldModel m = model;
    if (correction) m = corrected_model(model, t, correction->eta1).model;
    auto sp = provider_for(m, t, policy);
    EmbeddingMap map(sp, t, policy);
    const PullbackReport rep = pullback_report(map, model, grid, alpha);
    rows.push_back({t, map.q(), rep.defect_sup, rep.defect_holder, rep.trace_min, rep.trace_max});
  }
  return rows;
}

struct TailCheck {
  double tail = 0.0;
  double bound = 0.0;
  bool pass = false;
  int q = 0;
  int extent = 0;
};

/// max over the grid of c_norm^2 sum_{q <= j < count} e^(-lambda_j t) |d phi_j|_g^2,
/// against exp(-t^(-rho/n)). Reports, never asserts.
inline TailCheck tail_bound_check(const SpectrumProvider& sp, double t, const TruncationPolicy& policy,
                                  const SampleGrid& grid) {
  const int n = sp.model().dim();
  TailCheck out;
  out.q = resolve_q(sp, t, policy);
  out.extent = sp.count();
  out.bound = std::exp(-std::pow(t, -policy.rho / n));
  if (out.q < sp.count() && sp.count() < 4 * out.q)
    throw PreconditionError("tail_bound_check: provider must extend at least 4x beyond q = " +
                            std::to_string(out.q));
  const double c = normalization_constant(n, t);
  const int tail_len = sp.count() - out.q;
  if (tail_len > 0) {
    Eigen::VectorXd w(tail_len);
    for (int j = 0; j < tail_len; ++j) w[j] = c * c * std::exp(-sp.lambda(out.q + j) * t);
    for (const auto& p : grid.points) {
      const Eigen::MatrixXd ginv = metric_at(sp.model(), p).g_inv;
      const JetBlock b = sp.eval_jets(p, sp.count());
      const Eigen::MatrixXd gr = b.gradients.rightCols(tail_len);
      const Eigen::VectorXd sq = (gr.transpose() * ginv).cwiseProduct(gr.transpose()).rowwise().sum();
      out.tail = std::max(out.tail, sq.dot(w));
    }
  }
  out.pass = out.tail <= out.bound;
  return out;
}

}  // namespace hk
