#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <gtest/gtest.h>

#include "hk/spectrum.hpp"

using namespace hk;

namespace {

constexpr double kPi = std::numbers::pi;

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("hk_" + name)).string();
}

// g^{ij}(d_i d_j phi - Gamma^k_ij d_k phi)
double laplacian(const ManifoldModel& m, const ChartPoint& p, const JetEvaluation& e) {
  auto mp = metric_at(m, p);
  double s = 0;
  for (int i = 0; i < m.dim(); ++i)
    for (int j = 0; j < m.dim(); ++j) {
      double cov = e.hessian(i, j);
      for (int k = 0; k < m.dim(); ++k) cov -= mp.christoffel[k](i, j) * e.gradient[k];
      s += mp.g_inv(i, j) * cov;
    }
  return s;
}

}  // namespace

TEST(Spectrum, CircleEigenvalues) {
  AnalyticSpectrum sp(ManifoldModel::circle(2 * kPi), 7);
  auto pairs = sp.enumerate(7);
  const double expected[] = {0, 1, 1, 4, 4, 9, 9};
  for (int j = 0; j < 7; ++j) EXPECT_NEAR(pairs[j].lambda, expected[j], 1e-12);
  EXPECT_EQ(pairs[1].label, (std::vector<int>{1, 0}));
  EXPECT_EQ(pairs[2].label, (std::vector<int>{1, 1}));
  EXPECT_THROW(sp.enumerate(0), DomainError);
  EXPECT_THROW(sp.enumerate(sp.count() + 1), PreconditionError);
}

TEST(Spectrum, CircleJetAtZero) {
  AnalyticSpectrum sp(ManifoldModel::circle(2 * kPi), 3);
  Eigen::VectorXd x(1);
  x << 0.0;
  auto e = sp.eval_jet(1, ChartPoint(x));
  EXPECT_NEAR(e.value, 1 / std::sqrt(kPi), 1e-15);
  EXPECT_NEAR(e.gradient[0], 0.0, 1e-15);
  EXPECT_NEAR(e.hessian(0, 0), -1 / std::sqrt(kPi), 1e-15);
  EXPECT_THROW(sp.eval_jet(3, ChartPoint(x)), DomainError);
}

TEST(Spectrum, TorusMultiplicityAndLatticeCount) {
  auto m = ManifoldModel::flat_torus({2 * kPi, 2 * kPi});
  auto sp = AnalyticSpectrum::up_to_lambda(m, 100.0);
  EXPECT_EQ(sp.lambda(0), 0.0);
  EXPECT_EQ(sp.cluster_end(1), 5);
  for (int j = 1; j < 5; ++j) EXPECT_NEAR(sp.lambda(j), 1.0, 1e-14);
  // brute-force lattice count over k in Z^2
  int brute = 0;
  for (int a = -11; a <= 11; ++a)
    for (int b = -11; b <= 11; ++b)
      if (a * a + b * b <= 100) ++brute;
  EXPECT_EQ(sp.count(), brute);
  EXPECT_LT(std::abs(sp.count() - kPi * 100) / (kPi * 100), 0.15);
}

TEST(Spectrum, OrderingAndEigenspaceCompletion) {
  auto m = ManifoldModel::flat_torus({2 * kPi, 2 * kPi});
  AnalyticSpectrum sp(m, 400);
  EXPECT_EQ(sp.count(), 401);
  for (int j = 1; j < sp.count(); ++j) {
    EXPECT_LE(sp.lambda(j - 1), sp.lambda(j));
    if (sp.lambda(j - 1) == sp.lambda(j)) EXPECT_LT(sp.pair(j - 1).label, sp.pair(j).label);
  }
}

TEST(Spectrum, SphereMultiplicities) {
  AnalyticSpectrum sp(ManifoldModel::round_sphere(1.0), 36);
  int j = 0;
  for (int l = 0; l < 6; ++l) {
    EXPECT_EQ(sp.cluster_end(j) - j, 2 * l + 1);
    EXPECT_NEAR(sp.lambda(j), l * (l + 1.0), 1e-12);
    j = sp.cluster_end(j);
  }
}

TEST(Spectrum, QuadratureOrthonormality) {
  const std::vector<ManifoldModel> models = {
      ManifoldModel::circle(2 * kPi), ManifoldModel::circle(3.0),
      ManifoldModel::flat_torus({2 * kPi, 4.0}), ManifoldModel::round_sphere(1.0),
      ManifoldModel::round_sphere(1.7), ManifoldModel::product_sphere_circle(1.0, 2 * kPi)};
  for (const auto& m : models) {
    AnalyticSpectrum sp(m, 120);
    auto grid = sample_grid(m, m.dim() == 1 ? 256 : (m.dim() == 3 ? 16 : 32));
    EXPECT_LT(orthonormality_error(sp, grid, sp.count()), 1e-6) << kind_name(m.kind());
  }
}

TEST(Spectrum, EigenRelationAndFiniteDifferences) {
  const std::vector<ManifoldModel> models = {
      ManifoldModel::circle(3.0), ManifoldModel::flat_torus({2 * kPi, 4.0, 5.0}),
      ManifoldModel::round_sphere(1.3), ManifoldModel::product_sphere_circle(0.8, 4.0)};
  Eigen::VectorXd base(3);
  base << 1.1, 2.3, 0.6;
  for (const auto& m : models) {
    AnalyticSpectrum sp(m, 150);
    for (int chart = 0; chart < (m.has_sphere_factor() ? 2 : 1); ++chart) {
      ChartPoint p(chart, base.head(m.dim()));
      for (int j = 0; j < sp.count(); ++j) {
        auto e = sp.eval_jet(j, p);
        const double lam = sp.lambda(j);
        EXPECT_LE(std::abs(laplacian(m, p, e) + lam * e.value), 1e-8 * (1 + lam))
            << kind_name(m.kind()) << " j=" << j;
        EXPECT_LT((e.hessian - e.hessian.transpose()).norm(), 1e-12);
        // gradient against central differences of values
        const double h = 1e-6;
        for (int i = 0; i < m.dim(); ++i) {
          ChartPoint a = p, b = p;
          a.x[i] += h;
          b.x[i] -= h;
          const double fd = (sp.eval_jet(j, a).value - sp.eval_jet(j, b).value) / (2 * h);
          EXPECT_NEAR(e.gradient[i], fd, 1e-6 * (1 + std::sqrt(lam)));
        }
      }
    }
  }
}

TEST(Spectrum, SphereChartsAgreeOnValues) {
  // the same geometric point in both charts carries the same eigenfunction values
  auto m = ManifoldModel::round_sphere(1.0);
  AnalyticSpectrum sp(m, 49);
  Eigen::VectorXd x(2);
  x << 1.0, 2.0;
  ChartPoint p(0, x);
  auto [th, ph] = sphere_coordinates(1, sphere_position(0, x[0], x[1]));
  Eigen::VectorXd y(2);
  y << th, ph;
  auto a = sp.eval_jets(p, 49), b = sp.eval_jets(ChartPoint(1, y), 49);
  EXPECT_LT((a.values - b.values).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Spectrum, ExternalRoundTrip) {
  auto m = ManifoldModel::circle(2 * kPi);
  AnalyticSpectrum sp(m, 9);
  auto grid = sample_grid(m, 16);
  const std::string path = temp_path("circle.jsonl");
  export_spectrum(sp, 9, grid, 1e-10, path);
  auto ext = load_external_spectrum(path);
  EXPECT_EQ(ext.count(), 9);
  for (const auto& p : grid.points)
    for (int j = 0; j < 9; ++j) {
      auto a = sp.eval_jet(j, p), b = ext.eval_jet(j, p);
      EXPECT_NEAR(a.value, b.value, 1e-12);
      EXPECT_NEAR(a.gradient[0], b.gradient[0], 1e-12);
      EXPECT_NEAR(a.hessian(0, 0), b.hessian(0, 0), 1e-12);
    }
  Eigen::VectorXd off(1);
  off << 0.123;
  EXPECT_THROW(ext.eval_jets(ChartPoint(off), 3), DomainError);
  std::remove(path.c_str());
}

TEST(Spectrum, ExternalSmallFileAndRejections) {
  auto m = ManifoldModel::circle(2 * kPi);
  AnalyticSpectrum sp(m, 3);
  auto grid = sample_grid(m, 8);
  const std::string path = temp_path("three.jsonl");
  export_spectrum(sp, 3, grid, 1e-10, path);
  auto ext = load_external_spectrum(path);
  EXPECT_EQ(ext.count(), 3);
  EXPECT_NEAR(ext.lambda(1), 1.0, 1e-15);

  // swap the lambda of records 1 and 2 -> decreasing sequence
  std::ifstream in(path);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  in.close();
  auto rec = nlohmann::json::parse(lines[2]);
  rec["lambda"] = 0.5;
  auto rec1 = nlohmann::json::parse(lines[1]);
  rec1["lambda"] = 1.0;
  {
    std::ofstream out(path);
    out << lines[0] << '\n' << rec1.dump() << '\n' << rec.dump() << '\n' << lines[3] << '\n';
  }
  try {
    load_external_spectrum(path);
    FAIL() << "decreasing lambda accepted";
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("decreases"), std::string::npos);
  }

  // corrupt a value -> orthonormality failure
  auto bad = nlohmann::json::parse(lines[2]);
  bad["values"][0] = bad["values"][0].get<double>() + 0.5;
  {
    std::ofstream out(path);
    out << lines[0] << '\n' << lines[1] << '\n' << bad.dump() << '\n' << lines[3] << '\n';
  }
  EXPECT_THROW(load_external_spectrum(path), SchemaError);

  {
    std::ofstream out(path);
    out << "{\"n\": 1}\n";
  }
  EXPECT_THROW(load_external_spectrum(path), SchemaError);
  std::remove(path.c_str());
}

TEST(Spectrum, RescaledCircle) {
  auto m = ManifoldModel::circle(2 * kPi);
  AnalyticSpectrum sp(m, 9);
  const double c = 1.7;
  auto r = rescaled_provider(sp, {c * c});
  Eigen::VectorXd x(1);
  x << 0.4;
  for (int j = 0; j < 9; ++j) {
    EXPECT_NEAR(r->lambda(j), sp.lambda(j) / (c * c), 1e-12);
    EXPECT_NEAR(r->eval_jet(j, ChartPoint(x)).value, sp.eval_jet(j, ChartPoint(x)).value / std::sqrt(c),
                1e-12);
  }
  auto same = rescaled_provider(sp, {1.0});
  for (int j = 0; j < 9; ++j) EXPECT_EQ(same->lambda(j), sp.lambda(j));
  EXPECT_THROW(rescaled_provider(sp, {0.0}), DomainError);
}

TEST(Spectrum, RescaledProduct) {
  auto m = ManifoldModel::product_sphere_circle(1.0, 2 * kPi);
  AnalyticSpectrum sp(m, 80);
  const double t = 0.09;
  auto r = rescaled_provider(sp, {1 + t / 9, 1 - 2 * t / 9});
  for (int j = 0; j < r->count(); ++j) {
    const auto& lab = r->pair(j).label;
    const double sphere = lab[0] * (lab[0] + 1.0), circle = lab[2] * double(lab[2]);
    EXPECT_NEAR(r->lambda(j), sphere / 1.01 + circle / 0.98, 1e-12);
  }
  auto grid = sample_grid(r->model(), 16);
  EXPECT_NEAR(grid.total_weight(), 4 * kPi * 1.01 * 2 * kPi * std::sqrt(0.98), 1e-8);
  EXPECT_LT(orthonormality_error(*r, grid, r->count()), 1e-6);
}

TEST(Spectrum, ExternalUniformRescale) {
  auto m = ManifoldModel::circle(2 * kPi);
  AnalyticSpectrum sp(m, 5);
  auto grid = sample_grid(m, 8);
  const std::string path = temp_path("rescale.jsonl");
  export_spectrum(sp, 5, grid, 1e-10, path);
  auto ext = load_external_spectrum(path);
  auto r = rescaled_provider(ext, {4.0});
  EXPECT_NEAR(r->lambda(1), 0.25, 1e-15);
  EXPECT_NEAR(r->eval_jet(1, grid.points[0]).value, sp.eval_jet(1, grid.points[0]).value / std::sqrt(2.0),
              1e-14);
  EXPECT_THROW(rescaled_provider(ext, {4.0, 2.0}), DomainError);
  std::remove(path.c_str());
}
