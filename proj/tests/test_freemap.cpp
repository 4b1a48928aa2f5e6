#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "hk/freemap.hpp"

using namespace hk;

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::MatrixXd random_matrix(std::mt19937& rng, int r, int c) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd a(r, c);
  for (int i = 0; i < r * c; ++i) a(i) = nd(rng);
  return a;
}

Eigen::MatrixXd random_spd(std::mt19937& rng, int n) {
  Eigen::MatrixXd a = random_matrix(rng, n, n);
  return a * a.transpose() + n * Eigen::MatrixXd::Identity(n, n);
}

struct TorusFixture {
  ManifoldModel model = ManifoldModel::flat_torus({2 * kPi, 2 * kPi});
  std::shared_ptr<AnalyticSpectrum> sp;
  std::unique_ptr<EmbeddingMap> map;
  explicit TorusFixture(double t) {
    sp = provider_for(model, t, {});
    map = std::make_unique<EmbeddingMap>(sp, t, TruncationPolicy{});
  }
};

ChartPoint random_point(std::mt19937& rng, int n) {
  std::uniform_real_distribution<double> ud(0, 2 * kPi);
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = ud(rng);
  return ChartPoint(x);
}

}  // namespace

TEST(Freemap, RowOrdering) {
  auto pairs = second_order_pairs(3);
  std::vector<std::pair<int, int>> expected = {{0, 1}, {0, 2}, {1, 2}, {0, 0}, {1, 1}, {2, 2}};
  EXPECT_EQ(pairs, expected);
  EXPECT_EQ(jet_rows(1), 2);
  EXPECT_EQ(jet_rows(3), 9);
  Eigen::MatrixXd h(2, 2);
  h << 1, 2, 2, 3;
  Eigen::VectorXd f(2);
  f << 5, 6;
  Eigen::VectorXd r = pack_rhs(f, h);
  Eigen::VectorXd expect(5);
  expect << 5, 6, 2, 1, 3;
  EXPECT_EQ(r, expect);
  auto [f2, h2] = unpack_rhs(r, 2);
  EXPECT_EQ(f2, f);
  EXPECT_EQ(h2, h);
}

TEST(Freemap, CircleRowCountAndFlatCovariance) {
  auto sp = std::make_shared<AnalyticSpectrum>(ManifoldModel::circle(2 * kPi), 40);
  EmbeddingMap map(sp, 0.1, {});
  Eigen::VectorXd x(1);
  x << 0.5;
  auto P = assemble_P(map, ChartPoint(x));
  EXPECT_EQ(P.rows(), 2);
  auto jets = map.jets(ChartPoint(x));
  EXPECT_LT((P.row(0) - jets.gradients.row(0)).norm(), 1e-14);
  EXPECT_LT((P.row(1) - jets.hessians.row(0)).norm(), 1e-13);
}

TEST(Freemap, CovariantHessianOnSphereMatchesFrameFormula) {
  // Hessian row of P against an independent computation with the coordinate
  // Christoffel symbols written out for the round sphere.
  auto m = ManifoldModel::round_sphere(1.5);
  auto sp = std::make_shared<AnalyticSpectrum>(m, 30);
  TruncationPolicy p;
  p.q_override = 25;
  EmbeddingMap map(sp, 0.2, p);
  Eigen::VectorXd x(2);
  x << 1.0, 0.4;
  ChartPoint pt(x);
  auto P = assemble_P(map, pt);
  auto J = map.jets(pt);
  const double R = 1.5, th = 1.0, st = std::sin(th), ct = std::cos(th);
  for (int j = 0; j < map.q(); ++j) {
    auto H = J.hessian(j, 2);
    const double g0 = J.gradients(0, j), g1 = J.gradients(1, j);
    const double h00 = H(0, 0), h01 = H(0, 1) - ct / st * g1, h11 = H(1, 1) + st * ct * g0;
    EXPECT_NEAR(P(0, j), g0 / R, 1e-12);
    EXPECT_NEAR(P(1, j), g1 / (R * st), 1e-12);
    EXPECT_NEAR(P(2, j), h01 / (R * R * st), 1e-11);
    EXPECT_NEAR(P(3, j), h00 / (R * R), 1e-11);
    EXPECT_NEAR(P(4, j), h11 / (R * R * st * st), 1e-11);
  }
}

TEST(Freemap, PcIdentities) {
  TorusFixture f(0.05);
  std::mt19937 rng(1);
  auto pt = random_point(rng, 2);
  auto P = assemble_P(*f.map, pt);
  auto Pc = assemble_Pc(P, 2);
  EXPECT_LT((Pc.bottomRows(2).colwise().sum()).norm(), 1e-10 * P.norm());
  EXPECT_LT((Pc - (P - 0.5 * diagonal_selector(2) * P)).cwiseAbs().maxCoeff(), 1e-12 * P.cwiseAbs().maxCoeff());
}

TEST(Freemap, RanksOnTorus) {
  TorusFixture f(0.05);
  std::mt19937 rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    auto pt = random_point(rng, 2);
    auto P = assemble_P(*f.map, pt);
    auto Pc = assemble_Pc(P, 2);
    EXPECT_EQ(numerical_rank(P), 5);
    EXPECT_EQ(numerical_rank(Pc), 4);
    EXPECT_EQ(kernel_basis(Pc).cols() - kernel_basis(P).cols(), 1);
  }
}

TEST(Freemap, GramAsymptotics) {
  const double t = 0.02;
  TorusFixture f(t);
  std::mt19937 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    auto pt = random_point(rng, 2);
    auto P = assemble_P(*f.map, pt);
    auto G = gram(P);
    auto Gc = gram(assemble_Pc(P, 2));
    EXPECT_LT((G.topLeftCorner(2, 2) - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff(), 5 * t);
    EXPECT_LT((2 * t * G.bottomRightCorner(3, 3) - gram_limit_lower_right(2, false)).cwiseAbs().maxCoeff(), 5 * t);
    EXPECT_LT((2 * t * Gc.bottomRightCorner(3, 3) - gram_limit_lower_right(2, true)).cwiseAbs().maxCoeff(), 5 * t);
    // inverse asymptotics: top-left -> I, lower-right -> 2t (limit)^-1
    FreeMapAt fm(P, 2, t);
    const Eigen::MatrixXd Gi = fm.gram_inverse();
    EXPECT_LT((Gi.topLeftCorner(2, 2) - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff(), 5 * t);
    Eigen::MatrixXd lim = 2 * t * gram_limit_lower_right(2, false).inverse();
    EXPECT_LT((Gi.bottomRightCorner(3, 3) - lim).cwiseAbs().maxCoeff(), 5 * t);
  }
}

TEST(Freemap, GramLimitIdentity) {
  for (int n = 2; n <= 6; ++n) {
    Eigen::MatrixXd lhs = 3 * xi_matrix(n, 1.0 / 3) - (n + 2.0) / n * Eigen::MatrixXd::Ones(n, n);
    Eigen::MatrixXd rhs = (2.0 * n - 2) / n * xi_matrix(n, -1.0 / (n - 1));
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-14);
    // nI - J has spectrum {n (n-1 times), 0}
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(n * Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Ones(n, n));
    EXPECT_NEAR(es.eigenvalues()[0], 0.0, 1e-13);
    for (int i = 1; i < n; ++i) EXPECT_NEAR(es.eigenvalues()[i], n, 1e-13);
  }
}

TEST(Freemap, XiMatrix) {
  EXPECT_EQ(xi_matrix(4, 0.0), Eigen::MatrixXd::Identity(4, 4));
  Eigen::MatrixXd expected = 1.5 * (Eigen::MatrixXd::Identity(3, 3) - 0.2 * Eigen::MatrixXd::Ones(3, 3));
  EXPECT_LT((xi_inverse(3, 1.0 / 3) - expected).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((xi_inverse(3, 1.0 / 3) * xi_matrix(3, 1.0 / 3) - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((xi_matrix(3, 1.0 / 3).inverse() - expected).cwiseAbs().maxCoeff(), 1e-14);
  for (int n = 2; n <= 6; ++n) {
    EXPECT_EQ(numerical_rank(xi_matrix(n, -1.0 / (n - 1))), n - 1);
    EXPECT_THROW(xi_inverse(n, -1.0 / (n - 1)), DomainError);
    EXPECT_THROW(xi_inverse(n, 1.0), DomainError);
  }
}

TEST(Freemap, BlockInverse) {
  std::mt19937 rng(4);
  auto A1 = random_spd(rng, 3), A2 = random_spd(rng, 3);
  Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(3, 3);
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(6, 6);
  expected.topLeftCorner(3, 3) = A1.inverse();
  expected.bottomRightCorner(3, 3) = A2.inverse();
  EXPECT_LT((block_inverse(A1, A2, Z) - expected).cwiseAbs().maxCoeff(), 1e-14);

  std::uniform_real_distribution<double> scale(0.0, 0.3);
  for (int trial = 0; trial < 100; ++trial) {
    A1 = random_spd(rng, 3);
    A2 = random_spd(rng, 3);
    Eigen::MatrixXd b = scale(rng) * random_matrix(rng, 3, 3);
    Eigen::MatrixXd M(6, 6);
    M << A1, b.transpose(), b, A2;
    Eigen::MatrixXd inv = block_inverse(A1, A2, b);
    EXPECT_LT((inv - M.inverse()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((M * inv - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-10);
    // ||c|| <= ||A2^-1|| ||b|| ||A1^-1|| (operator 2-norms)
    auto op = [](const Eigen::MatrixXd& a) { return a.jacobiSvd().singularValues()(0); };
    Eigen::MatrixXd c = -A2.inverse() * b * A1.inverse();
    EXPECT_LE(op(c), op(A2.inverse()) * op(b) * op(A1.inverse()) * (1 + 1e-12));
  }
  Eigen::MatrixXd sing = Eigen::MatrixXd::Zero(3, 3);
  EXPECT_THROW(block_inverse(sing, A2, Z), DomainError);
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(2, 2);
  EXPECT_THROW(block_inverse(I, I, 2 * I), DomainError);
}

TEST(Freemap, RightInverse) {
  TorusFixture f(0.05);
  std::mt19937 rng(5);
  auto pt = random_point(rng, 2);
  FreeMapAt fm(*f.map, pt);
  EXPECT_EQ(fm.apply_E(Eigen::VectorXd::Zero(5)).norm(), 0.0);
  Eigen::MatrixXd K = kernel_basis(fm.P());
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd rhs = random_matrix(rng, 5, 1);
    Eigen::VectorXd v = fm.apply_E(rhs);
    EXPECT_LE((fm.P() * v - rhs).norm(), 1e-9 * rhs.norm());
    if (trial < 10) EXPECT_LE((K.transpose() * v).cwiseAbs().maxCoeff(), 1e-9 * v.norm());
  }
}

TEST(Freemap, KernelGeneratorAndFamily) {
  for (double t : {0.1, 0.02}) {
    TorusFixture f(t);
    std::mt19937 rng(6);
    auto pt = random_point(rng, 2);
    FreeMapAt fm(*f.map, pt);
    Eigen::VectorXd w = fm.kernel_generator();
    EXPECT_GT(w.squaredNorm(), 0.0);
    EXPECT_LE((fm.Pc() * w).norm(), 1e-9 * metric_rhs(2).norm());
    EXPECT_LE((fm.P() * w - metric_rhs(2)).norm(), 1e-9 * metric_rhs(2).norm());
    EXPECT_LE((kernel_basis(fm.P()).transpose() * w).cwiseAbs().maxCoeff(), 1e-9 * w.norm());

    Eigen::MatrixXd h(2, 2);
    h << 0.3, -0.7, -0.7, -0.3;
    Eigen::VectorXd base = fm.apply_Ec(h, 0.0);
    EXPECT_LT((base - fm.apply_E(pack_rhs(Eigen::VectorXd::Zero(2), h))).norm(), 1e-15);
    Eigen::VectorXd target = fm.Pc() * base;
    for (double k : {-1.0, 0.5, 2.0}) {
      Eigen::VectorXd v = fm.apply_Ec(h, k);
      EXPECT_LT((fm.Pc() * v - target).cwiseAbs().maxCoeff(), 1e-10);
      EXPECT_LT((v - base - k * w).cwiseAbs().maxCoeff(), 1e-12);
    }
    Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(2, 2);
    EXPECT_THROW(fm.apply_Ec(bad, 1.0), DomainError);
  }
}

TEST(Freemap, BlockRouteMatchesDense) {
  TorusFixture f(0.02);
  std::mt19937 rng(7);
  auto pt = random_point(rng, 2);
  auto P = assemble_P(*f.map, pt);
  FreeMapAt block(P, 2, 0.02), dense(P, 2, 0.5);
  EXPECT_LT((block.gram_inverse() - dense.gram_inverse()).cwiseAbs().maxCoeff(),
            1e-9 * dense.gram_inverse().cwiseAbs().maxCoeff());
}

TEST(Freemap, NotFreeIsRejected) {
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(5, 10);
  P(0, 0) = 1;
  EXPECT_THROW(FreeMapAt(P, 2, 0.1), DomainError);
}
