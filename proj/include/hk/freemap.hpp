#pragma once

// Pointwise jet operators P(u), P_c(u) of a map u: M -> R^q, their Gram
// matrices and the right inverse E = P^T (P P^T)^-1 with its conformal family.
//
// Row ordering (also the ordering of right-hand sides): n first-derivative
// rows, then second-derivative rows for the off-diagonal pairs i < j in
// lexicographic order, then the diagonal pairs (k, k) ascending. All rows are
// in the orthonormal frame of the point.

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hk/embedding.hpp"
#include "hk/error.hpp"
#include "hk/geometry.hpp"
#include "hk/spectrum.hpp"

namespace hk {

inline int jet_rows(int n) { return n * (n + 3) / 2; }

/// (i, j) frame index pairs of the second-derivative rows, in row order.
inline std::vector<std::pair<int, int>> second_order_pairs(int n) {
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) out.emplace_back(i, j);
  for (int k = 0; k < n; ++k) out.emplace_back(k, k);
  return out;
}

/// Right-hand side (f, h): f a frame 1-form, h a symmetric frame 2-tensor.
inline Eigen::VectorXd pack_rhs(const Eigen::VectorXd& f, const Eigen::MatrixXd& h) {
  const int n = static_cast<int>(f.size());
  if (h.rows() != n || h.cols() != n) throw DomainError("pack_rhs: shape mismatch");
  Eigen::VectorXd r(jet_rows(n));
  r.head(n) = f;
  int row = n;
  for (auto [i, j] : second_order_pairs(n)) r[row++] = h(i, j);
  return r;
}

inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> unpack_rhs(const Eigen::VectorXd& r, int n) {
  if (r.size() != jet_rows(n)) throw DomainError("unpack_rhs: length mismatch");
  Eigen::MatrixXd h(n, n);
  int row = n;
  for (auto [i, j] : second_order_pairs(n)) h(i, j) = h(j, i) = r[row++];
  return {r.head(n), h};
}

/// (0, g) with g the metric in the frame.
inline Eigen::VectorXd metric_rhs(int n) {
  return pack_rhs(Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Identity(n, n));
}

/// P from coordinate jets (gradients n x q, hessians n^2 x q).
inline Eigen::MatrixXd assemble_P(const JetBlock& jets, const MetricAtPoint& metric, const Eigen::MatrixXd& frame) {
  const int n = static_cast<int>(frame.rows());
  const int q = jets.count();
  Eigen::MatrixXd P(jet_rows(n), q);
  P.topRows(n) = frame.transpose() * jets.gradients;
  int row = n;
  for (auto [a, b] : second_order_pairs(n)) {
    // symmetrized e_a e_b^T contracted with the covariant Hessian
    const Eigen::MatrixXd C = 0.5 * (frame.col(a) * frame.col(b).transpose() + frame.col(b) * frame.col(a).transpose());
    Eigen::VectorXd gamma(n);
    for (int k = 0; k < n; ++k) gamma[k] = (C.array() * metric.christoffel[k].array()).sum();
    const Eigen::Map<const Eigen::VectorXd> c(C.data(), n * n);
    P.row(row++) = c.transpose() * jets.hessians - gamma.transpose() * jets.gradients;
  }
  return P;
}

inline Eigen::MatrixXd assemble_P(const EmbeddingMap& map, const ChartPoint& x) {
  return assemble_P(map.jets(x), metric_at(map.model(), x), orthonormal_frame(map.model(), x));
}

/// Diagonal second-derivative rows replaced by their trace-free parts.
inline Eigen::MatrixXd assemble_Pc(const Eigen::MatrixXd& P, int n) {
  Eigen::MatrixXd Pc = P;
  const int d0 = jet_rows(n) - n;
  const Eigen::RowVectorXd mean = P.middleRows(d0, n).colwise().sum() / n;
  for (int k = 0; k < n; ++k) Pc.row(d0 + k) -= mean;
  return Pc;
}

inline Eigen::MatrixXd assemble_Pc(const EmbeddingMap& map, const ChartPoint& x) {
  return assemble_Pc(assemble_P(map, x), map.dim());
}

/// Selector S with (S P) having the sum of the diagonal rows in every diagonal row.
inline Eigen::MatrixXd diagonal_selector(int n) {
  const int m = jet_rows(n), d0 = m - n;
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(m, m);
  S.block(d0, d0, n, n).setOnes();
  return S;
}

inline Eigen::MatrixXd gram(const Eigen::MatrixXd& P) { return P * P.transpose(); }

/// Inverse of [[A1, b^T], [b, A2]] via the block-inverse lemma, with
/// c = -A2^-1 b A1^-1.
inline Eigen::MatrixXd block_inverse(const Eigen::MatrixXd& A1, const Eigen::MatrixXd& A2, const Eigen::MatrixXd& b) {
  const int n1 = static_cast<int>(A1.rows()), n2 = static_cast<int>(A2.rows());
  if (b.rows() != n2 || b.cols() != n1) throw DomainError("block_inverse: b must be dim(A2) x dim(A1)");
  Eigen::FullPivLU<Eigen::MatrixXd> lu1(A1), lu2(A2);
  if (!lu1.isInvertible()) throw DomainError("block_inverse: A1 is singular");
  if (!lu2.isInvertible()) throw DomainError("block_inverse: A2 is singular");
  const Eigen::MatrixXd A1i = lu1.inverse(), A2i = lu2.inverse();
  const Eigen::MatrixXd c = -A2i * b * A1i;
  const Eigen::MatrixXd btc = b.transpose() * c;
  if (n1 > 0 && btc.jacobiSvd().singularValues()(0) >= 1.0)
    throw DomainError("block_inverse: correction b^T c is not contractive");
  Eigen::MatrixXd Y(n1 + n2, n1 + n2);
  Y << A1i, c.transpose(), c, A2i;
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n1 + n2, n1 + n2);
  D.topLeftCorner(n1, n1) = (Eigen::MatrixXd::Identity(n1, n1) + btc).inverse();
  D.bottomRightCorner(n2, n2) = (Eigen::MatrixXd::Identity(n2, n2) + b * c.transpose()).inverse();
  return Y * D;
}

/// Singular values below rel * largest count as zero.
inline int numerical_rank(const Eigen::MatrixXd& M, double rel = 1e-8) {
  if (M.size() == 0) return 0;
  const Eigen::VectorXd s = Eigen::BDCSVD<Eigen::MatrixXd>(M).singularValues();
  int r = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s[i] > rel * s[0]) ++r;
  return r;
}

/// Orthonormal basis (columns) of Ker M.
inline Eigen::MatrixXd kernel_basis(const Eigen::MatrixXd& M, double rel = 1e-8) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullV);
  const int r = numerical_rank(M, rel);
  return svd.matrixV().rightCols(M.cols() - r);
}

/// The free-map operators at one point with a factored Gram matrix.
class FreeMapAt {
 public:
  /// `t` selects the Gram inversion route: the block lemma below 0.05,
  /// dense Cholesky otherwise.
  FreeMapAt(Eigen::MatrixXd P, int n, double t) : P_(std::move(P)), n_(n) {
    if (P_.rows() != jet_rows(n)) throw DomainError("FreeMapAt: P has the wrong number of rows");
    const Eigen::MatrixXd G = gram(P_);
    Eigen::LLT<Eigen::MatrixXd> llt(G);
    if (llt.info() != Eigen::Success || numerical_rank(G, 1e-14) < G.rows())
      throw DomainError("gram(P) is singular: the map is not free at this point");
    if (t < 0.05) {
      G_inv_ = block_inverse(G.topLeftCorner(n, n), G.bottomRightCorner(G.rows() - n, G.rows() - n),
                             G.bottomLeftCorner(G.rows() - n, n));
    } else {
      G_inv_ = llt.solve(Eigen::MatrixXd::Identity(G.rows(), G.rows()));
    }
  }

  FreeMapAt(const EmbeddingMap& map, const ChartPoint& x) : FreeMapAt(assemble_P(map, x), map.dim(), map.t()) {}

  int dim() const { return n_; }
  int q() const { return static_cast<int>(P_.cols()); }
  const Eigen::MatrixXd& P() const { return P_; }
  Eigen::MatrixXd Pc() const { return assemble_Pc(P_, n_); }
  const Eigen::MatrixXd& gram_inverse() const { return G_inv_; }

  /// P^T (P P^T)^-1 rhs, never forming the q x m matrix.
  Eigen::VectorXd apply_E(const Eigen::VectorXd& rhs) const {
    if (rhs.size() != P_.rows()) throw DomainError("apply_E: rhs length mismatch");
    return P_.transpose() * (G_inv_ * rhs);
  }

  /// Columnwise apply_E for several right-hand sides (m x r -> q x r).
  Eigen::MatrixXd apply_E_many(const Eigen::MatrixXd& rhs) const { return P_.transpose() * (G_inv_ * rhs); }

  /// w = E(0, g): P w = (0, g), w in the row space of P, P_c w = 0.
  Eigen::VectorXd kernel_generator() const { return apply_E(metric_rhs(n_)); }

  /// E(0, h) + k w for a g-traceless frame tensor h.
  Eigen::VectorXd apply_Ec(const Eigen::MatrixXd& h, double k) const {
    if (std::abs(h.trace()) > 1e-8 * std::max(1.0, h.norm()))
      throw DomainError("apply_Ec: h must be traceless");
    return apply_E(pack_rhs(Eigen::VectorXd::Zero(n_), h)) + k * kernel_generator();
  }

 private:
  Eigen::MatrixXd P_;
  int n_;
  Eigen::MatrixXd G_inv_;
};

inline Eigen::MatrixXd xi_matrix(int n, double sigma) {
  if (n < 1) throw DomainError("xi_matrix: n must be >= 1");
  return (1.0 - sigma) * Eigen::MatrixXd::Identity(n, n) + sigma * Eigen::MatrixXd::Ones(n, n);
}

/// (1/(1 - sigma)) (I - sigma / (1 + (n - 1) sigma) J), sigma in (-1/(n-1), 1).
inline Eigen::MatrixXd xi_inverse(int n, double sigma) {
  if (n < 1) throw DomainError("xi_inverse: n must be >= 1");
  if (!(sigma < 1.0) || (n > 1 && !(sigma > -1.0 / (n - 1))))
    throw DomainError("xi_inverse: sigma outside (-1/(n-1), 1)");
  return (Eigen::MatrixXd::Identity(n, n) - sigma / (1.0 + (n - 1) * sigma) * Eigen::MatrixXd::Ones(n, n)) /
         (1.0 - sigma);
}

/// Limit of 2t times the lower-right Gram block of P (conformal = false) or
/// P_c (conformal = true) for the heat-kernel embedding.
inline Eigen::MatrixXd gram_limit_lower_right(int n, bool conformal) {
  const int off = n * (n - 1) / 2;
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(off + n, off + n);
  L.topLeftCorner(off, off).setIdentity();
  L.bottomRightCorner(n, n) = conformal ? Eigen::MatrixXd((2.0 * n - 2.0) / n * xi_matrix(n, n > 1 ? -1.0 / (n - 1) : 0.0))
                                        : Eigen::MatrixXd(3.0 * xi_matrix(n, 1.0 / 3.0));
  return L;
}

}  // namespace hk
