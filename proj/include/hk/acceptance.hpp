#pragma once

// The numbered acceptance criteria, shared by the acceptance binary and the
// `verify` subcommand.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hk/analysis.hpp"
#include "hk/embedding.hpp"
#include "hk/freemap.hpp"
#include "hk/guenther.hpp"

namespace hk {

struct AcceptanceSettings {
  std::uint64_t seed = 20240601;

  double c1_defect = 1e-10;
  double c1_runtime = 60;

  double c2_pullback = 1e-8;
  double c2_runtime = 5;

  double c3_slope_lo = 0.85;
  double c3_slope_hi = 1.15;
  double c3_corrected_min = 1.8;
  double c3_kappa = 40;
  int c3_resolution = 8;
  double c3_runtime = 600;

  double c4_scale_ratio = 1e-3;
  double c4_null_ratio = 1e-8;
  double c4_block_factor = 5;
  int c4_points = 20;
  double c4_runtime = 30;

  double c5_rel = 1e-9;
  double c5_kernel = 1e-9;
  double c5_family = 1e-10;
  double c5_linear = 1e-12;
  int c5_draws = 100;
  double c5_runtime = 30;

  int c6_max_iter = 20;
  double c6_contraction = 0.5;
  double c6_bound_slack = 1e-6;
  double c6_residual = 1e-8;
  double c6_reconverge = 1e-8;
  double c6_epsilon = 1e-3;
  int c6_grid = 64;
  double c6_runtime = 300;

  double c7_k = 1e-3;
  double c7_residual = 1e-8;
  double c7_upper = 2.0;
  double c7_lower = 0.25;
  double c7_runtime = 300;

  double c8_inverse = 1e-12;
  double c8_block = 1e-10;
  double c8_identity = 1e-14;
  double c8_runtime = 10;

  double c9_runtime = 30;

  /// Named numeric fields, for config overrides and report echo.
  std::vector<std::pair<std::string, double*>> numeric_fields() {
    return {{"c1_defect", &c1_defect},         {"c1_runtime", &c1_runtime},
            {"c2_pullback", &c2_pullback},     {"c2_runtime", &c2_runtime},
            {"c3_slope_lo", &c3_slope_lo},     {"c3_slope_hi", &c3_slope_hi},
            {"c3_corrected_min", &c3_corrected_min}, {"c3_kappa", &c3_kappa},
            {"c3_runtime", &c3_runtime},       {"c4_scale_ratio", &c4_scale_ratio},
            {"c4_null_ratio", &c4_null_ratio}, {"c4_block_factor", &c4_block_factor},
            {"c4_runtime", &c4_runtime},       {"c5_rel", &c5_rel},
            {"c5_kernel", &c5_kernel},         {"c5_family", &c5_family},
            {"c5_linear", &c5_linear},         {"c5_runtime", &c5_runtime},
            {"c6_contraction", &c6_contraction}, {"c6_bound_slack", &c6_bound_slack},
            {"c6_residual", &c6_residual},     {"c6_reconverge", &c6_reconverge},
            {"c6_epsilon", &c6_epsilon},       {"c6_runtime", &c6_runtime},
            {"c7_k", &c7_k},                   {"c7_residual", &c7_residual},
            {"c7_upper", &c7_upper},           {"c7_lower", &c7_lower},
            {"c7_runtime", &c7_runtime},       {"c8_inverse", &c8_inverse},
            {"c8_block", &c8_block},           {"c8_identity", &c8_identity},
            {"c8_runtime", &c8_runtime},       {"c9_runtime", &c9_runtime}};
  }
  std::vector<std::pair<std::string, int*>> integer_fields() {
    return {{"c3_resolution", &c3_resolution}, {"c4_points", &c4_points}, {"c5_draws", &c5_draws},
            {"c6_max_iter", &c6_max_iter},     {"c6_grid", &c6_grid}};
  }
};

struct Check {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
};

struct CriterionResult {
  int id = 0;
  std::string title;
  std::vector<Check> checks;
  nlohmann::json data = nlohmann::json::object();
  double seconds = 0.0;
  double runtime_limit = 0.0;
  std::string error;  // set when the criterion threw

  bool within_time() const { return seconds <= runtime_limit; }
  bool pass() const {
    if (!error.empty() || !within_time()) return false;
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  }
  /// The checks that failed, or the error, as one line.
  std::string failure_summary() const {
    std::ostringstream os;
    os << std::setprecision(8);
    if (!error.empty()) os << "error: " << error << "; ";
    for (const Check& c : checks)
      if (!c.pass) os << c.name << " = " << c.value << " (threshold " << c.threshold << "); ";
    if (!within_time()) os << "runtime " << seconds << " s over " << runtime_limit << " s; ";
    std::string s = os.str();
    if (s.size() >= 2) s.resize(s.size() - 2);
    return s;
  }
};

inline Check check_le(std::string name, double value, double threshold) {
  return {std::move(name), value <= threshold, value, threshold};
}
inline Check check_lt(std::string name, double value, double threshold) {
  return {std::move(name), value < threshold, value, threshold};
}
inline Check check_ge(std::string name, double value, double threshold) {
  return {std::move(name), value >= threshold, value, threshold};
}
inline Check check_gt(std::string name, double value, double threshold) {
  return {std::move(name), value > threshold, value, threshold};
}

namespace detail {

inline ManifoldModel unit_torus2() {
  return ManifoldModel::flat_torus({2 * std::numbers::pi, 2 * std::numbers::pi});
}

/// Random traceless symmetric n x n matrix.
inline Eigen::MatrixXd random_traceless(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd h(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) h(i, j) = h(j, i) = nd(rng);
  h -= (h.trace() / n) * Eigen::MatrixXd::Identity(n, n);
  return h;
}

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, int m) {
  std::normal_distribution<double> nd;
  Eigen::VectorXd v(m);
  for (int i = 0; i < m; ++i) v[i] = nd(rng);
  return v;
}

/// Sorted random distinct grid indices.
inline std::vector<std::size_t> random_indices(std::mt19937_64& rng, std::size_t size, int count) {
  std::vector<std::size_t> idx(size);
  for (std::size_t i = 0; i < size; ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::min<std::size_t>(size, count));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace detail

/// Shared solver state for criteria 6 and 7.
struct GuentherContext {
  std::unique_ptr<BaseMap> base;
  FieldRq f;
  std::optional<SolveResult> solved;
};

class AcceptanceSuite {
 public:
  explicit AcceptanceSuite(AcceptanceSettings s = {}) : s_(s) {}

  static std::vector<int> all_ids() { return {1, 2, 3, 4, 5, 6, 7, 8, 9}; }

  static std::string title(int id) {
    switch (id) {
      case 1: return "homothety exactness on FlatTorus(2)";
      case 2: return "circle scale factor";
      case 3: return "first-order defect law on ProductSphereCircle";
      case 4: return "rank laws of gram(P) and gram(P_c)";
      case 5: return "right-inverse family";
      case 6: return "Guenther convergence";
      case 7: return "conformal family";
      case 8: return "linear-algebra layer";
      case 9: return "tail bound";
    }
    throw DomainError("unknown acceptance criterion " + std::to_string(id));
  }

  CriterionResult run(int id) {
    CriterionResult r;
    r.id = id;
    r.title = title(id);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      switch (id) {
        case 1: c1(r); break;
        case 2: c2(r); break;
        case 3: c3(r); break;
        case 4: c4(r); break;
        case 5: c5(r); break;
        case 6: c6(r); break;
        case 7: c7(r); break;
        case 8: c8(r); break;
        case 9: c9(r); break;
        default: title(id);
      }
    } catch (const Error& e) {
      r.error = e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
  }

 private:
  void c1(CriterionResult& r) {
    r.runtime_limit = s_.c1_runtime;
    const ManifoldModel m = detail::unit_torus2();
    const SampleGrid grid = sample_grid(m, 32);
    TruncationPolicy pol;
    for (double t : {0.05, 0.02, 0.01}) {
      EmbeddingMap map(provider_for(m, t, pol), t, pol);
      const PullbackReport rep = pullback_report(map, grid);
      std::ostringstream name;
      name << "defect_sup(t=" << t << ")";
      r.checks.push_back(check_le(name.str(), rep.defect_sup, s_.c1_defect));
      r.data["rows"].push_back({{"t", t}, {"q", map.q()}, {"defect_sup", rep.defect_sup}});
    }
  }

  void c2(CriterionResult& r) {
    r.runtime_limit = s_.c2_runtime;
    const ManifoldModel m = ManifoldModel::circle(2 * std::numbers::pi);
    const double t = 0.1;
    TruncationPolicy pol;
    EmbeddingMap map(provider_for(m, t, pol), t, pol);
    const SampleGrid grid = sample_grid(m, 256);
    double worst = 0.0;
    for (const ChartPoint& p : grid.points)
      worst = std::max(worst, std::abs(pullback_metric(map, p)(0, 0) - metric_at(m, p).g(0, 0)));
    r.checks.push_back(check_ge("q", map.q(), 32));
    r.checks.push_back(check_le("max|pullback-1|", worst, s_.c2_pullback));
    r.data = {{"t", t}, {"q", map.q()}, {"max_deviation", worst}};
  }

  void c3(CriterionResult& r) {
    r.runtime_limit = s_.c3_runtime;
    const ManifoldModel m = ManifoldModel::product_sphere_circle(1.0, 2 * std::numbers::pi);
    const std::vector<double> ts{0.1, 0.07, 0.05, 0.035, 0.025};
    TruncationPolicy pol;
    pol.lambda_t_cutoff = s_.c3_kappa;
    const auto plain = defect_scan(m, ts, pol, std::nullopt, s_.c3_resolution);
    const auto fixed = defect_scan(m, ts, pol, CorrectionSpec{1, 0.0}, s_.c3_resolution);
    std::vector<double> a, b;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      a.push_back(plain[i].defect_sup);
      b.push_back(fixed[i].defect_sup);
      r.data["rows"].push_back({{"t", ts[i]},
                                {"q_uncorrected", plain[i].q},
                                {"defect_uncorrected", a.back()},
                                {"q_corrected", fixed[i].q},
                                {"defect_corrected", b.back()}});
    }
    const OrderFit fa = fit_order(ts, a), fb = fit_order(ts, b);
    r.checks.push_back(check_ge("uncorrected slope >= lo", fa.slope, s_.c3_slope_lo));
    r.checks.push_back(check_le("uncorrected slope <= hi", fa.slope, s_.c3_slope_hi));
    r.checks.push_back(check_ge("corrected slope", fb.slope, s_.c3_corrected_min));
    r.data["uncorrected_slope"] = fa.slope;
    r.data["uncorrected_r2"] = fa.r_squared;
    r.data["corrected_slope"] = fb.slope;
    r.data["corrected_r2"] = fb.r_squared;
  }

  void c4(CriterionResult& r) {
    r.runtime_limit = s_.c4_runtime;
    const int n = 2;
    const double t = 0.02;
    const ManifoldModel m = detail::unit_torus2();
    TruncationPolicy pol;
    EmbeddingMap map(provider_for(m, t, pol), t, pol);
    const SampleGrid grid = sample_grid(m, 32);
    std::mt19937_64 rng(s_.seed);
    const int rows = jet_rows(n);
    // gradient rows are O(1), second-order rows O(t^-1/2)
    Eigen::VectorXd scale = Eigen::VectorXd::Ones(rows);
    scale.tail(rows - n).setConstant(std::sqrt(2 * t));
    double min_ratio = 1e300, max_null = 0.0, min_second = 1e300, block = 0.0, block_c = 0.0;
    for (std::size_t idx : detail::random_indices(rng, grid.size(), s_.c4_points)) {
      const Eigen::MatrixXd P = assemble_P(map, grid.points[idx]);
      const Eigen::MatrixXd G = gram(P), Gc = gram(assemble_Pc(P, n));
      const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(scale.asDiagonal() * G * scale.asDiagonal()).singularValues();
      const Eigen::VectorXd svc = Eigen::JacobiSVD<Eigen::MatrixXd>(scale.asDiagonal() * Gc * scale.asDiagonal()).singularValues();
      min_ratio = std::min(min_ratio, sv[rows - 1] / sv[0]);
      max_null = std::max(max_null, svc[rows - 1] / svc[0]);
      min_second = std::min(min_second, svc[rows - 2] / svc[0]);
      block = std::max(block, (2 * t * G.bottomRightCorner(rows - n, rows - n) - gram_limit_lower_right(n, false))
                                  .cwiseAbs().maxCoeff());
      block_c = std::max(block_c, (2 * t * Gc.bottomRightCorner(rows - n, rows - n) - gram_limit_lower_right(n, true))
                                      .cwiseAbs().maxCoeff());
    }
    r.checks.push_back(check_ge("gram(P) smallest/largest", min_ratio, s_.c4_scale_ratio));
    r.checks.push_back(check_le("gram(P_c) smallest/largest", max_null, s_.c4_null_ratio));
    r.checks.push_back(check_ge("gram(P_c) second smallest/largest", min_second, s_.c4_scale_ratio));
    r.checks.push_back(check_le("2t gram(P) lower-right vs I + 3 Xi(1/3)", block, s_.c4_block_factor * t));
    r.checks.push_back(check_le("2t gram(P_c) lower-right vs I + ((2n-2)/n) Xi(-1/(n-1))", block_c,
                                s_.c4_block_factor * t));
    r.data = {{"t", t}, {"q", map.q()}, {"points", s_.c4_points}};
  }

  void c5(CriterionResult& r) {
    r.runtime_limit = s_.c5_runtime;
    const int n = 2;
    const double t = 0.02;
    const ManifoldModel m = detail::unit_torus2();
    TruncationPolicy pol;
    EmbeddingMap map(provider_for(m, t, pol), t, pol);
    const SampleGrid grid = sample_grid(m, 32);
    std::mt19937_64 rng(s_.seed + 5);
    const auto pts = detail::random_indices(rng, grid.size(), 10);
    std::vector<FreeMapAt> fms;
    for (std::size_t i : pts) fms.emplace_back(map, grid.points[i]);
    double rel = 0.0, ker = 0.0, fam = 0.0, lin = 0.0;
    for (int d = 0; d < s_.c5_draws; ++d) {
      const FreeMapAt& fm = fms[d % fms.size()];
      const Eigen::VectorXd rhs = detail::random_vector(rng, jet_rows(n));
      rel = std::max(rel, (fm.P() * fm.apply_E(rhs) - rhs).norm() / rhs.norm());
    }
    for (const FreeMapAt& fm : fms) {
      const Eigen::MatrixXd Pc = fm.Pc();
      const Eigen::VectorXd w = fm.kernel_generator();
      ker = std::max(ker, (Pc * w).norm() / metric_rhs(n).norm());
      const Eigen::MatrixXd h = detail::random_traceless(rng, n);
      const Eigen::VectorXd v0 = fm.apply_Ec(h, 0.0);
      const Eigen::VectorXd ref = Pc * fm.apply_Ec(h, -1.0);
      for (double k : {0.0, 0.5, 2.0}) {
        const Eigen::VectorXd vk = fm.apply_Ec(h, k);
        fam = std::max(fam, (Pc * vk - ref).norm() / ref.norm());
        lin = std::max(lin, (vk - v0 - k * w).norm() / std::max(1.0, v0.norm()));
      }
    }
    r.checks.push_back(check_le("max |P E rhs - rhs|/|rhs|", rel, s_.c5_rel));
    r.checks.push_back(check_le("|P_c w| / |(0,g)|", ker, s_.c5_kernel));
    r.checks.push_back(check_le("P_c E_c(h,k) spread over k", fam, s_.c5_family));
    r.checks.push_back(check_le("E_c(h,k) - E_c(h,0) - k w", lin, s_.c5_linear));
    r.data = {{"t", t}, {"q", map.q()}, {"draws", s_.c5_draws}};
  }

  GuentherContext& guenther() {
    if (!ctx_.base) {
      const double t = 0.05;
      TruncationPolicy pol;
      ctx_.base = std::make_unique<BaseMap>(EmbeddingMap(provider_for(detail::unit_torus2(), t, pol), t, pol), s_.c6_grid);
      ctx_.f = manufactured_forcing(*ctx_.base, s_.c6_epsilon);
    }
    if (!ctx_.solved) {
      SolverConfig cfg;
      cfg.max_iter = s_.c6_max_iter;
      ctx_.solved = fixed_point_solve(*ctx_.base, ctx_.f, 0.0, cfg);
    }
    return ctx_;
  }

  void c6(CriterionResult& r) {
    r.runtime_limit = s_.c6_runtime;
    GuentherContext& g = guenther();
    const SolveResult& sol = *g.solved;
    double worst_contraction = 0.0, worst_bound = 0.0;
    for (std::size_t i = 1; i < sol.history.size(); ++i)
      worst_contraction = std::max(worst_contraction, sol.history[i].contraction);
    for (const IterationState& st : sol.history) worst_bound = std::max(worst_bound, st.v_norm / sol.seed_norm);
    const ResidualNorms res = verify_conformal(*g.base, sol.v, g.f);

    std::mt19937_64 rng(s_.seed + 6);
    std::normal_distribution<double> nd;
    FieldRq start = sol.v;
    // a smooth perturbation of size ~ seed/100 on every component
    for (Eigen::Index c = 0; c < start.cols(); ++c) {
      const double a = nd(rng) * 1e-2 * sol.seed_norm / std::sqrt(double(start.cols()));
      for (Eigen::Index p = 0; p < start.rows(); ++p) start(p, c) += a * std::cos(g.base->points()[p].x[0]);
    }
    SolverConfig cfg;
    cfg.max_iter = s_.c6_max_iter;
    const SolveResult again = fixed_point_solve(*g.base, g.f, 0.0, cfg, &start);

    r.checks.push_back(check_le("iterations", sol.history.size(), s_.c6_max_iter));
    r.checks.push_back(check_le("max contraction from step 2", worst_contraction, s_.c6_contraction));
    r.checks.push_back(check_lt("max |v_l| / |seed|", worst_bound, 1.0 + s_.c6_bound_slack));
    r.checks.push_back(check_le("verify residual (direct)", res.direct_sup, s_.c6_residual));
    r.checks.push_back(check_le("verify residual (pullback)", res.pullback_sup, s_.c6_residual));
    r.checks.push_back(check_le("reconvergence |v' - v|", field_sup(again.v - sol.v), s_.c6_reconverge));
    r.data = {{"t", g.base->t()},           {"q", g.base->q()},
              {"grid", g.base->spectral().N()}, {"seed_norm", sol.seed_norm},
              {"theta_value", sol.theta_value}, {"bound_2x_ok", sol.bound_ok()}};
    for (const IterationState& st : sol.history)
      r.data["history"].push_back({{"l", st.l},
                                   {"step_norm", st.step_norm},
                                   {"contraction", st.contraction},
                                   {"v_norm", st.v_norm},
                                   {"residual", st.residual}});
  }

  void c7(CriterionResult& r) {
    r.runtime_limit = s_.c7_runtime;
    GuentherContext& g = guenther();
    SolverConfig cfg;
    cfg.max_iter = std::max(s_.c6_max_iter, 50);
    const SolveResult r1 = fixed_point_solve(*g.base, g.f, s_.c7_k, cfg);
    const ConformalResult a = assemble_C(*g.base, g.solved->v, g.f, 0.0);
    const ConformalResult b = assemble_C(*g.base, r1.v, g.f, s_.c7_k);
    const double w = field_sup(g.base->kernel_generator());
    const double dist = field_sup(a.C - b.C);
    r.checks.push_back(check_le("verify residual k=0", a.residual.direct_sup, s_.c7_residual));
    r.checks.push_back(check_le("verify residual k=k1", b.residual.direct_sup, s_.c7_residual));
    r.checks.push_back(check_le("|C_0 - C_k1| upper", dist, s_.c7_upper * s_.c7_k * w));
    r.checks.push_back(check_ge("|C_0 - C_k1| lower", dist, s_.c7_lower * s_.c7_k * w));
    r.checks.push_back(check_gt("injectivity k=0", a.injectivity, 0.0));
    r.checks.push_back(check_gt("injectivity k=k1", b.injectivity, 0.0));
    r.data = {{"k", s_.c7_k},
              {"w_sup", w},
              {"distance", dist},
              {"injectivity_k0", a.injectivity},
              {"injectivity_k1", b.injectivity}};
  }

  void c8(CriterionResult& r) {
    r.runtime_limit = s_.c8_runtime;
    double inv = 0.0, ident = 0.0;
    bool ranks = true;
    for (int n = 2; n <= 6; ++n) {
      const double lo = -1.0 / (n - 1);
      for (double sigma : {-0.2, 0.0, 1.0 / 3.0, 0.9}) {
        const double s = std::clamp(sigma, lo + 1e-3, 1.0 - 1e-3);
        const Eigen::MatrixXd X = xi_matrix(n, s);
        inv = std::max(inv, (xi_inverse(n, s) * X - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff());
      }
      ranks = ranks && numerical_rank(xi_matrix(n, lo)) == n - 1;
      const Eigen::MatrixXd lhs = 3 * xi_matrix(n, 1.0 / 3) - (n + 2.0) / n * Eigen::MatrixXd::Ones(n, n);
      ident = std::max(ident, (lhs - (2.0 * n - 2) / n * xi_matrix(n, lo)).cwiseAbs().maxCoeff());
    }
    std::mt19937_64 rng(s_.seed + 8);
    std::uniform_int_distribution<int> dim(1, 6);
    double blk = 0.0;
    for (int d = 0; d < 100; ++d) {
      const int n1 = dim(rng), n2 = dim(rng);
      Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n1 + n2, n1 + n2);
      for (int i = 0; i < n1 + n2; ++i) A.row(i) = detail::random_vector(rng, n1 + n2).transpose();
      Eigen::MatrixXd M = A * A.transpose() + (n1 + n2) * Eigen::MatrixXd::Identity(n1 + n2, n1 + n2);
      // keep the off-diagonal coupling contractive
      M.bottomLeftCorner(n2, n1) *= 0.3;
      M.topRightCorner(n1, n2) *= 0.3;
      const Eigen::MatrixXd Y =
          block_inverse(M.topLeftCorner(n1, n1), M.bottomRightCorner(n2, n2), M.bottomLeftCorner(n2, n1));
      blk = std::max(blk, (Y - M.inverse()).cwiseAbs().maxCoeff());
    }
    r.checks.push_back(check_le("Xi inverse error", inv, s_.c8_inverse));
    r.checks.push_back({"rank Xi(-1/(n-1)) = n-1", ranks, ranks ? 1.0 : 0.0, 1.0});
    r.checks.push_back(check_le("block_inverse vs dense", blk, s_.c8_block));
    r.checks.push_back(check_le("3 Xi(1/3) - ((n+2)/n) J identity", ident, s_.c8_identity));
  }

  void c9(CriterionResult& r) {
    r.runtime_limit = s_.c9_runtime;
    TruncationPolicy pol;
    for (const ManifoldModel& m : {ManifoldModel::circle(2 * std::numbers::pi), detail::unit_torus2()}) {
      const SampleGrid grid = sample_grid(m, m.dim() == 1 ? 64 : 16);
      for (double t : {0.1, 0.05}) {
        const AnalyticSpectrum sp(m, 5 * policy_q(m.dim(), t, pol));
        const TailCheck tc = tail_bound_check(sp, t, pol, grid);
        std::ostringstream name;
        name << kind_name(m.kind()) << " tail(t=" << t << ")";
        r.checks.push_back(check_le(name.str(), tc.tail, tc.bound));
        r.data["rows"].push_back(
            {{"model", kind_name(m.kind())}, {"t", t}, {"q", tc.q}, {"tail", tc.tail}, {"bound", tc.bound}});
      }
    }
  }

  AcceptanceSettings s_;
  GuentherContext ctx_;
};

inline nlohmann::json to_json(const CriterionResult& r) {
  nlohmann::json j;
  j["id"] = r.id;
  j["title"] = r.title;
  j["pass"] = r.pass();
  j["runtime_limit_s"] = r.runtime_limit;
  j["within_runtime"] = r.within_time();
  if (!r.error.empty()) j["error"] = r.error;
  for (const Check& c : r.checks)
    j["checks"].push_back({{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"threshold", c.threshold}});
  j["data"] = r.data;
  return j;
}

}  // namespace hk
