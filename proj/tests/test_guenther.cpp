#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "hk/guenther.hpp"

using namespace hk;

namespace {

constexpr double kPi = std::numbers::pi;

ManifoldModel torus2() { return ManifoldModel::flat_torus({2 * kPi, 2 * kPi}); }

/// Random real trig polynomial with integer wavenumbers in [-band, band]^n,
/// one column per component.
FieldRq random_trig_field(const TorusSpectral& sp, int cols, int band, std::mt19937& rng, double amp = 1.0) {
  std::normal_distribution<double> nd;
  const SampleGrid grid = sp.grid();
  FieldRq f = FieldRq::Zero(grid.size(), cols);
  const int n = sp.dim();
  for (int c = 0; c < cols; ++c) {
    std::vector<int> k(n, -band);
    while (true) {
      const double a = nd(rng) * amp, b = nd(rng) * amp;
      for (std::size_t p = 0; p < grid.size(); ++p) {
        double ph = 0.0;
        for (int d = 0; d < n; ++d) ph += k[d] * grid.points[p].x[d];
        f(p, c) += a * std::cos(ph) + b * std::sin(ph);
      }
      int d = 0;
      while (d < n && ++k[d] > band) k[d++] = -band;
      if (d == n) break;
    }
  }
  return f;
}

const BaseMap& base_t005() {
  static const BaseMap base = [] {
    TruncationPolicy pol;
    const double t = 0.05;
    return BaseMap(EmbeddingMap(provider_for(torus2(), t, pol), t, pol), 64);
  }();
  return base;
}

struct Solved {
  FieldRq f;
  SolveResult r;
};

const Solved& manufactured_solution() {
  static const Solved s = [] {
    const BaseMap& base = base_t005();
    Solved out;
    out.f = manufactured_forcing(base, 1e-3);
    out.r = fixed_point_solve(base, out.f, 0.0, SolverConfig{});
    return out;
  }();
  return s;
}

}  // namespace

TEST(Spectral, RoundTripAndModeLaplacian) {
  TorusSpectral sp(ManifoldModel::flat_torus({2 * kPi, 4 * kPi}), 32);
  std::mt19937 rng(3);
  const FieldRq f = random_trig_field(sp, 3, 10, rng);
  EXPECT_LT((sp.backward(sp.forward(f)) - f).cwiseAbs().maxCoeff(), 1e-12);

  // cos(2 theta_1 + 3 theta_2) has lambda = 4 + 9/4 with periods (2pi, 4pi)
  const SampleGrid g = sp.grid();
  FieldRq m(g.size(), 1);
  for (std::size_t p = 0; p < g.size(); ++p) m(p, 0) = std::cos(2 * g.points[p].x[0] + 3 * g.points[p].x[1]);
  const FieldRq lap = sp.backward(sp.laplacian(sp.forward(m)));
  EXPECT_LT((lap + (4.0 + 2.25) * m).cwiseAbs().maxCoeff(), 1e-13 * (4.0 + 2.25));
}

TEST(Spectral, DerivativesCommuteWithTransform) {
  TorusSpectral sp(torus2(), 32);
  const SampleGrid g = sp.grid();
  FieldRq f(g.size(), 1), fx(g.size(), 1), fxy(g.size(), 1);
  for (std::size_t p = 0; p < g.size(); ++p) {
    const double x = g.points[p].x[0], y = g.points[p].x[1];
    f(p, 0) = std::sin(3 * x) * std::cos(5 * y);
    fx(p, 0) = 3 * std::cos(3 * x) * std::cos(5 * y);
    fxy(p, 0) = -15 * std::cos(3 * x) * std::sin(5 * y);
  }
  const Spectrum F = sp.forward(f);
  EXPECT_LT((sp.backward(sp.derivative(F, 0)) - fx).cwiseAbs().maxCoeff(), 1e-11);
  EXPECT_LT((sp.backward(sp.derivative2(F, 0, 1)) - fxy).cwiseAbs().maxCoeff(), 1e-11);
}

TEST(Spectral, PaddedProductMatchesResolvedProduct) {
  // band-7 factors on a 16-grid; the 32-grid resolves their product exactly
  TorusSpectral small(torus2(), 16), big(torus2(), 32);
  std::mt19937 rng(5);
  const FieldRq a = random_trig_field(small, 1, 7, rng), b = random_trig_field(small, 1, 7, rng);
  std::mt19937 rng2(5);
  const FieldRq A = random_trig_field(big, 1, 7, rng2), B = random_trig_field(big, 1, 7, rng2);
  const Spectrum got =
      small.forward_from_padded(small.backward_padded(small.forward(a)).cwiseProduct(small.backward_padded(small.forward(b))));
  const Spectrum exact = big.forward(A.cwiseProduct(B));
  const auto& ks = small.wavenumbers();
  const auto& kb = big.wavenumbers();
  double err = 0.0;
  for (int m = 0; m < small.modes(); ++m) {
    if (std::abs(ks(m, 0)) >= 8 || ks(m, 1) >= 8) continue;
    for (int mb = 0; mb < big.modes(); ++mb)
      if (kb(mb, 0) == ks(m, 0) && kb(mb, 1) == ks(m, 1)) err = std::max(err, std::abs(got(m, 0) - exact(mb, 0)));
  }
  EXPECT_LT(err, 1e-12);
}

TEST(Resolvent, ConstantAndSingleMode) {
  TorusSpectral sp(torus2(), 16);
  const SampleGrid g = sp.grid();
  FieldRq c = FieldRq::Constant(g.size(), 2, 3.0);
  EXPECT_LT((resolvent_apply(sp, c, 2.0) + c / 2.0).cwiseAbs().maxCoeff(), 1e-14);

  FieldRq m(g.size(), 1);
  for (std::size_t p = 0; p < g.size(); ++p) m(p, 0) = std::cos(g.points[p].x[1]);
  EXPECT_LT((resolvent_apply(sp, m, 1.0) + 0.5 * m).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Resolvent, InverseIdentityOnRandomFields) {
  TorusSpectral sp(ManifoldModel::flat_torus({2 * kPi, 3.0}), 32);
  std::mt19937 rng(11);
  const FieldRq f = random_trig_field(sp, 3, 12, rng);
  const double e = 0.7;
  const FieldRq u = resolvent_apply(sp, f, e, 0);
  const FieldRq back = sp.backward(sp.laplacian(sp.forward(u))) - e * u;
  EXPECT_LT((back - f).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, f.cwiseAbs().maxCoeff()));
}

TEST(Resolvent, RejectsBadInput) {
  TorusSpectral sp(torus2(), 8);
  FieldRq f = FieldRq::Zero(sp.points(), 3);
  EXPECT_THROW(resolvent_apply(sp, f, 0.0), DomainError);
  EXPECT_THROW(resolvent_apply(sp, f, 1.0, 1), DomainError);
  EXPECT_THROW(TorusSpectral(ManifoldModel::round_sphere(1.0), 8), DomainError);
}

TEST(Lij, ZeroAndConstantFields) {
  TorusSpectral sp(torus2(), 16);
  FieldRq z = FieldRq::Zero(sp.points(), 4);
  EXPECT_EQ(compute_Lij(sp, z, 1.0).cwiseAbs().maxCoeff(), 0.0);
  FieldRq c = FieldRq::Constant(sp.points(), 4, 2.5);
  EXPECT_LT(compute_Lij(sp, c, 1.0).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Lij, SingleModeClosedForm) {
  // v = cos(a.x): the Hessian terms cancel and L_ij = -(e/2) a_i a_j sin^2(a.x)
  TorusSpectral sp(torus2(), 32);
  const SampleGrid g = sp.grid();
  const double a0 = 2, a1 = -3, e = 1.3;
  FieldRq v(g.size(), 1);
  for (std::size_t p = 0; p < g.size(); ++p) v(p, 0) = std::cos(a0 * g.points[p].x[0] + a1 * g.points[p].x[1]);
  const FieldRq L = compute_Lij(sp, v, e);
  double err = 0.0;
  for (std::size_t p = 0; p < g.size(); ++p) {
    const double s2 = std::pow(std::sin(a0 * g.points[p].x[0] + a1 * g.points[p].x[1]), 2);
    // columns: (0,1), (0,0), (1,1)
    err = std::max({err, std::abs(L(p, 0) + 0.5 * e * a0 * a1 * s2), std::abs(L(p, 1) + 0.5 * e * a0 * a0 * s2),
                    std::abs(L(p, 2) + 0.5 * e * a1 * a1 * s2)});
  }
  EXPECT_LT(err, 1e-10);
}

TEST(Lij, ProductModeAgainstAnalyticDerivatives) {
  TorusSpectral sp(torus2(), 32);
  const SampleGrid g = sp.grid();
  const double e = 1.0;
  FieldRq v(g.size(), 2);
  for (std::size_t p = 0; p < g.size(); ++p) {
    const double x = g.points[p].x[0], y = g.points[p].x[1];
    v(p, 0) = std::cos(x) * std::cos(2 * y);
    v(p, 1) = std::sin(3 * x + y);
  }
  const FieldRq L = compute_Lij(sp, v, e);
  double err = 0.0;
  for (std::size_t p = 0; p < g.size(); ++p) {
    const double x = g.points[p].x[0], y = g.points[p].x[1];
    Eigen::Matrix2d H1, H2, L_exact = Eigen::Matrix2d::Zero();
    Eigen::Vector2d d1, d2;
    d1 << -std::sin(x) * std::cos(2 * y), -2 * std::cos(x) * std::sin(2 * y);
    H1 << -std::cos(x) * std::cos(2 * y), 2 * std::sin(x) * std::sin(2 * y), 2 * std::sin(x) * std::sin(2 * y),
        -4 * std::cos(x) * std::cos(2 * y);
    const double s = std::sin(3 * x + y), c = std::cos(3 * x + y);
    d2 << 3 * c, c;
    H2 << -9 * s, -3 * s, -3 * s, -s;
    for (auto [d, H] : {std::pair{d1, H1}, std::pair{d2, H2}})
      L_exact += H * H - H.trace() * H - 0.5 * e * d * d.transpose();
    err = std::max({err, std::abs(L(p, 0) - L_exact(0, 1)), std::abs(L(p, 1) - L_exact(0, 0)),
                    std::abs(L(p, 2) - L_exact(1, 1))});
  }
  EXPECT_LT(err, 1e-10);
}

TEST(Lij, ThirdDerivativeIdentity) {
  // (Delta - e)(D_i v . D_j v) = 2 L_ij + D_i(Delta v . D_j v) + D_j(D_i v . Delta v)
  TorusSpectral sp(ManifoldModel::flat_torus({2 * kPi, 5.0}), 48);
  std::mt19937 rng(17);
  const FieldRq v = random_trig_field(sp, 3, 5, rng);
  const double e = 0.8;
  const Spectrum V = sp.forward(v);
  const FieldRq vx = sp.backward(sp.derivative(V, 0)), vy = sp.backward(sp.derivative(V, 1));
  const FieldRq lap = sp.backward(sp.laplacian(V));
  const FieldRq L = compute_Lij(sp, v, e);
  auto dot = [](const FieldRq& a, const FieldRq& b) { return FieldRq(a.cwiseProduct(b).rowwise().sum()); };
  auto helm = [&](const FieldRq& f) {
    const Spectrum F = sp.forward(f);
    return FieldRq(sp.backward(sp.laplacian(F)) - e * f);
  };
  auto D = [&](const FieldRq& f, int i) { return FieldRq(sp.backward(sp.derivative(sp.forward(f), i))); };
  const FieldRq lhs01 = helm(dot(vx, vy));
  const FieldRq rhs01 = 2 * L.col(0) + D(dot(lap, vy), 0) + D(dot(vx, lap), 1);
  const FieldRq lhs00 = helm(dot(vx, vx));
  const FieldRq rhs00 = 2 * L.col(1) + 2 * D(dot(lap, vx), 0);
  const double scale = lhs00.cwiseAbs().maxCoeff();
  EXPECT_LT((lhs01 - rhs01).cwiseAbs().maxCoeff(), 1e-10 * scale);
  EXPECT_LT((lhs00 - rhs00).cwiseAbs().maxCoeff(), 1e-10 * scale);
}

TEST(RTerms, FlatAndZeroInputs) {
  const MetricAtPoint flat = metric_at(torus2(), ChartPoint(Eigen::Vector2d(0.3, 1.1)));
  Eigen::Vector2d w(0.4, -1.0);
  Eigen::Matrix2d dw;
  dw << 1, 2, 3, 4;
  EXPECT_EQ(compute_r_terms(w, dw, flat).cwiseAbs().maxCoeff(), 0.0);

  const MetricAtPoint sph = metric_at(ManifoldModel::round_sphere(1.0), ChartPoint(Eigen::Vector2d(1.0, 0.5)));
  EXPECT_EQ(compute_r_terms(Eigen::Vector2d::Zero(), Eigen::Matrix2d::Zero(), sph).cwiseAbs().maxCoeff(), 0.0);
}

namespace {

/// All tensors of `m` re-expressed in coordinates y with x = A y.
MetricAtPoint linear_change(const MetricAtPoint& m, const Eigen::MatrixXd& A) {
  const int n = static_cast<int>(A.rows());
  const Eigen::MatrixXd Ai = A.inverse();
  MetricAtPoint o;
  o.g = A.transpose() * m.g * A;
  o.g_inv = Ai * m.g_inv * Ai.transpose();
  o.ricci = A.transpose() * m.ricci * A;
  o.scalar = m.scalar;
  o.christoffel.assign(n, Eigen::MatrixXd::Zero(n, n));
  for (int k = 0; k < n; ++k)
    for (int c = 0; c < n; ++c) o.christoffel[k] += Ai(k, c) * (A.transpose() * m.christoffel[c] * A);
  o.riemann = Riemann(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          double s = 0.0;
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
              for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) s += m.riemann(i, j, k, l) * A(i, a) * A(j, b) * A(k, c) * Ai(d, l);
          o.riemann(a, b, c, d) = s;
        }
  return o;
}

}  // namespace

TEST(RTerms, CovariantUnderFrameRotation) {
  for (const ManifoldModel& model :
       {ManifoldModel::round_sphere(1.3), ManifoldModel::product_sphere_circle(1.0, 2 * kPi)}) {
    const int n = model.dim();
    Eigen::VectorXd x(n);
    x.head(2) << 0.9, 2.1;
    if (n == 3) x[2] = 0.4;
    const MetricAtPoint m = metric_at(model, ChartPoint(x));
    std::mt19937 rng(23);
    std::normal_distribution<double> nd;
    Eigen::VectorXd w(n);
    Eigen::MatrixXd dw(n, n), B(n, n);
    for (int i = 0; i < n; ++i) w[i] = nd(rng);
    for (int i = 0; i < n * n; ++i) dw(i) = nd(rng), B(i) = nd(rng);
    const Eigen::MatrixXd r = compute_r_terms(w, dw, m);
    EXPECT_TRUE(r.allFinite());
    EXPECT_GT(r.cwiseAbs().maxCoeff(), 0.0);
    const Eigen::MatrixXd Rot = Eigen::HouseholderQR<Eigen::MatrixXd>(B).householderQ();
    const Eigen::MatrixXd r2 = compute_r_terms(Rot.transpose() * w, Rot.transpose() * dw * Rot, linear_change(m, Rot));
    EXPECT_LT((r2 - Rot.transpose() * r * Rot).norm(), 1e-8 * std::max(1.0, r.norm()));
  }
}

TEST(AssembleQ, ZeroFieldAndDefiningEquation) {
  const BaseMap& base = base_t005();
  const FieldRq zero = FieldRq::Zero(base.size(), base.q());
  EXPECT_EQ(assemble_Q(base, zero, 1.0).cwiseAbs().maxCoeff(), 0.0);

  std::mt19937 rng(29);
  const FieldRq v = random_trig_field(base.spectral(), base.q(), 1, rng, 1e-4);
  const FieldRq rhs = quadratic_rhs(base.spectral(), v, 1.0);
  const FieldRq Q = base.apply_E(rhs);
  double worst = 0.0;
  for (Eigen::Index p = 0; p < base.size(); p += 7) {
    const Eigen::VectorXd r = rhs.row(p).transpose();
    worst = std::max(worst, (base.P(p) * Q.row(p).transpose() - r).norm() / r.norm());
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(AssembleQ, BilinearDifferenceConstantIsStable) {
  const BaseMap& base = base_t005();
  std::mt19937 rng(31);
  const double scale = std::pow(base.t(), -1.25);
  double lo = 1e300, hi = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const FieldRq u = random_trig_field(base.spectral(), base.q(), 1, rng, 1e-5);
    const FieldRq v = random_trig_field(base.spectral(), base.q(), 1, rng, 1e-5);
    const double num = field_sup(assemble_Q(base, v, 1.0) - assemble_Q(base, u, 1.0));
    const double C = num / (scale * field_sup(v - u) * (field_sup(v) + field_sup(u)));
    lo = std::min(lo, C);
    hi = std::max(hi, C);
  }
  EXPECT_GT(lo, 0.0);
  EXPECT_LT(hi / lo, 10.0);
}

TEST(FixedPoint, ZeroForcingIsImmediateFixedPoint) {
  const BaseMap& base = base_t005();
  const FieldRq f = FieldRq::Zero(base.size(), 3);
  const SolveResult r = fixed_point_solve(base, f, 0.0, SolverConfig{});
  ASSERT_EQ(r.history.size(), 1u);
  EXPECT_EQ(r.v.cwiseAbs().maxCoeff(), 0.0);
}

TEST(FixedPoint, ManufacturedForcingConverges) {
  const BaseMap& base = base_t005();
  const Solved& s = manufactured_solution();
  ASSERT_LE(s.r.history.size(), 20u);
  for (std::size_t i = 1; i < s.r.history.size(); ++i) EXPECT_LE(s.r.history[i].contraction, 0.5);
  EXPECT_TRUE(s.r.bound_ok());
  const ResidualNorms res = verify_conformal(base, s.r.v, s.f);
  EXPECT_LE(res.direct_sup, 1e-8);
  EXPECT_LE(res.pullback_sup, 1e-8);
  // the solved equation itself
  const FieldRq fp = s.r.v - s.r.seed - assemble_Q(base, s.r.v, 1.0);
  EXPECT_LE(field_sup(fp), 1e-12);
}

TEST(FixedPoint, ReconvergesFromPerturbedStart) {
  const BaseMap& base = base_t005();
  const Solved& s = manufactured_solution();
  std::mt19937 rng(37);
  const FieldRq start = s.r.v + random_trig_field(base.spectral(), base.q(), 1, rng, 1e-6);
  const SolveResult r = fixed_point_solve(base, s.f, 0.0, SolverConfig{}, &start);
  EXPECT_LE(field_sup(r.v - s.r.v), 1e-8);
}

TEST(FixedPoint, ResidualDetectsCorruptedSolution) {
  const BaseMap& base = base_t005();
  const Solved& s = manufactured_solution();
  FieldRq bad = s.r.v;
  for (Eigen::Index p = 0; p < base.size(); ++p)
    bad(p, 5) += 1e-3 * std::cos(base.points()[p].x[0] + base.points()[p].x[1]);
  EXPECT_GT(verify_conformal(base, bad, s.f).direct_sup, 1e-5);
}

TEST(FixedPoint, EntryConditionAndIterationLimit) {
  const BaseMap& base = base_t005();
  EXPECT_THROW(fixed_point_solve(base, manufactured_forcing(base, 0.1), 0.0, SolverConfig{}), PreconditionError);
  SolverConfig one;
  one.max_iter = 1;
  EXPECT_THROW(fixed_point_solve(base, manufactured_forcing(base, 1e-3), 0.0, one), ConvergenceError);
}

TEST(FixedPoint, VerifyOfZeroIsZero) {
  const BaseMap& base = base_t005();
  const ResidualNorms r =
      verify_conformal(base, FieldRq::Zero(base.size(), base.q()), FieldRq::Zero(base.size(), 3));
  EXPECT_EQ(r.direct_sup, 0.0);
  EXPECT_EQ(r.pullback_sup, 0.0);
}

TEST(ConformalFamily, KFamilyAndInjectivity) {
  const BaseMap& base = base_t005();
  const Solved& s = manufactured_solution();
  const double k1 = 1e-3;
  const SolveResult r1 = fixed_point_solve(base, s.f, k1, SolverConfig{});
  const ConformalResult c0 = assemble_C(base, s.r.v, s.f, 0.0);
  const ConformalResult c1 = assemble_C(base, r1.v, s.f, k1);
  EXPECT_LE(c0.residual.direct_sup, 1e-8);
  EXPECT_LE(c1.residual.direct_sup, 1e-8);
  EXPECT_TRUE(c0.injective());
  EXPECT_TRUE(c1.injective());

  const FieldRq w = base.kernel_generator();
  const double dist = field_sup(c0.C - c1.C);
  EXPECT_LE(dist, 2.0 * k1 * field_sup(w));
  EXPECT_GE(dist, 0.25 * k1 * field_sup(w));
  EXPECT_GE(field_sup(s.r.v - r1.v), 0.5 * k1 * field_sup(w) * (1.0 - 0.1));
}

TEST(ConformalFamily, UnperturbedMapIsInjective) {
  TruncationPolicy pol;
  const double t = 0.05;
  const BaseMap base(EmbeddingMap(provider_for(torus2(), t, pol), t, pol), 32);
  const ConformalResult c =
      assemble_C(base, FieldRq::Zero(base.size(), base.q()), FieldRq::Zero(base.size(), 3), 0.0);
  EXPECT_GT(c.injectivity, 0.0);
  EXPECT_LT((c.C - base.values()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT(c.defect_report.defect_sup, 1e-10);
}

TEST(ConformalFamily, ConformalForcingRemovesDefect) {
  const BaseMap& base = base_t005();
  const FieldRq f = conformal_forcing(base);
  const SolveResult r = fixed_point_solve(base, f, 0.0, SolverConfig{});
  const ConformalResult c = assemble_C(base, r.v, f, 0.0);
  EXPECT_LE(c.defect_report.defect_sup, 1e-10);
  EXPECT_LE(c.residual.direct_sup, 1e-10);
}
