// hkconf: spectra, defect scans, Guenther perturbation and the acceptance
// suite, driven by one JSON config.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "hk/hk.hpp"

namespace fs = std::filesystem;
using namespace hk;

namespace {

constexpr int kExitChecks = 1;
constexpr int kExitConfig = 2;
constexpr int kExitPrecondition = 3;
constexpr int kExitConvergence = 4;

std::string tag(double v) { return CsvTable::number(v); }

Report cmd_spectrum(const RunConfig& c, const fs::path& out) {
  Report rep;
  const int count = c.spectrum.count;
  const AnalyticSpectrum sp(c.model, count);
  const SampleGrid grid = sample_grid(c.model, c.spectrum.grid_resolution);
  const std::string rel = "eigenpairs/" + kind_name(c.model.kind()) + ".jsonl";
  ensure_directory(out / "eigenpairs");
  export_spectrum(sp, count, grid, c.spectrum.tolerance, (out / rel).string());
  rep.files.push_back(rel);

  const ExternalSpectrum back = load_external_spectrum((out / rel).string());
  double lam = 0.0, jets = 0.0;
  for (int j = 0; j < count; ++j) lam = std::max(lam, std::abs(back.lambda(j) - sp.lambda(j)));
  for (const ChartPoint& p : grid.points) {
    const JetBlock a = sp.eval_jets(p, count), b = back.eval_jets(p, count);
    jets = std::max({jets, (a.values - b.values).cwiseAbs().maxCoeff(),
                     (a.gradients - b.gradients).cwiseAbs().maxCoeff(),
                     (a.hessians - b.hessians).cwiseAbs().maxCoeff()});
  }
  const double ortho = orthonormality_error(sp, grid, count);
  rep.checks.push_back(check_le("reload count", std::abs(back.count() - count), 0));
  rep.checks.push_back(check_le("reload lambda deviation", lam, 0.0));
  rep.checks.push_back(check_le("reload jet deviation", jets, 0.0));
  rep.checks.push_back(check_le("orthonormality on the grid", ortho, c.spectrum.tolerance));
  for (int j = 0; j < count; ++j)
    rep.results["eigenpairs"].push_back({{"j", j}, {"lambda", sp.lambda(j)}, {"label", sp.pair(j).label}});
  rep.results["grid_points"] = grid.size();
  rep.results["orthonormality_error"] = ortho;
  return rep;
}

nlohmann::json scan(const RunConfig& c, const std::optional<CorrectionSpec>& corr, const std::string& label,
                    const fs::path& out, Report& rep, std::optional<OrderFit>& fit) {
  const auto rows = defect_scan(c.model, c.t_grid, c.truncation, corr, c.grid_resolution, c.regularity.alpha);
  CsvTable tab({"t", "q", "defect_sup", "defect_holder", "trace_min", "trace_max"});
  nlohmann::json j;
  std::vector<double> ts, ds;
  double worst = 0.0;
  for (const DefectRow& r : rows) {
    tab.add_row({r.t, double(r.q), r.defect_sup, r.defect_holder, r.trace_min, r.trace_max});
    j["rows"].push_back({{"t", r.t},
                         {"q", r.q},
                         {"defect_sup", r.defect_sup},
                         {"defect_holder", r.defect_holder},
                         {"trace_min", r.trace_min},
                         {"trace_max", r.trace_max}});
    ts.push_back(r.t);
    ds.push_back(r.defect_sup);
    worst = std::max(worst, r.defect_sup);
  }
  const std::string rel = "tables/defect_scan_" + label + ".csv";
  tab.write(out / rel);
  rep.files.push_back(rel);
  j["max_defect"] = worst;
  if (corr) j["eta1"] = corr->eta1;
  try {
    fit = fit_order(ts, ds);
    j["slope"] = fit->slope;
    j["r_squared"] = fit->r_squared;
  } catch (const DomainError& e) {
    // too few rows or exactly zero defects
    j["slope"] = nullptr;
    j["slope_note"] = e.what();
  }
  if (c.expect.max_defect) rep.checks.push_back(check_le("max defect_sup " + label, worst, *c.expect.max_defect));
  return j;
}

Report cmd_defect_scan(const RunConfig& c, const fs::path& out) {
  if (c.expect.corrected_slope_min && !c.correction)
    throw ConfigError("expect.corrected_slope_min needs a correction block");
  Report rep;
  std::optional<OrderFit> plain;
  rep.results["uncorrected"] = scan(c, std::nullopt, "uncorrected", out, rep, plain);
  if (c.expect.uncorrected_slope) {
    const double s = plain ? plain->slope : std::nan("");
    rep.checks.push_back(check_ge("uncorrected slope >= lo", s, c.expect.uncorrected_slope->first));
    rep.checks.push_back(check_le("uncorrected slope <= hi", s, c.expect.uncorrected_slope->second));
  }
  if (c.correction) {
    for (std::size_t i = 0; i < c.correction->eta.size(); ++i) {
      const std::string label = c.correction->eta.size() == 1 ? "corrected" : "corrected_eta" + std::to_string(i);
      std::optional<OrderFit> fit;
      rep.results["corrected"].push_back(scan(c, CorrectionSpec{c.correction->l, c.correction->eta[i]}, label, out, rep, fit));
      if (c.expect.corrected_slope_min)
        rep.checks.push_back(check_ge(label + " slope", fit ? fit->slope : std::nan(""), *c.expect.corrected_slope_min));
    }
  }
  return rep;
}

Report cmd_perturb(const RunConfig& c, const fs::path& out) {
  if (!c.model.is_flat()) throw DomainError("perturb: the Guenther solver runs on flat tori only");
  const PerturbConfig& pc = c.perturb;
  Report rep;
  const BaseMap base(EmbeddingMap(provider_for(c.model, pc.t, c.truncation), pc.t, c.truncation), pc.grid);
  const FieldRq f =
      pc.forcing.type == "manufactured" ? manufactured_forcing(base, pc.forcing.epsilon) : conformal_forcing(base);
  SolverConfig sc;
  sc.e = pc.e;
  sc.tol = pc.tol;
  sc.max_iter = pc.max_iter;
  sc.theta = pc.theta;
  sc.s = c.regularity.s;
  sc.alpha = c.regularity.alpha;
  rep.results["t"] = pc.t;
  rep.results["q"] = base.q();
  rep.results["grid"] = pc.grid;
  rep.results["forcing"] = {{"type", pc.forcing.type}, {"sup", sym_sup(f, base.dim())}};

  std::vector<ConformalResult> Cs;
  for (std::size_t i = 0; i < pc.k.size(); ++i) {
    const double k = pc.k[i];
    const SolveResult sol = fixed_point_solve(base, f, k, sc);
    Cs.push_back(assemble_C(base, sol.v, f, k, c.regularity.alpha));
    const ConformalResult& C = Cs.back();

    CsvTable tab({"l", "residual", "step_norm", "contraction", "v_norm", "bound_ok", "bound_strict_ok"});
    for (const IterationState& st : sol.history)
      tab.add_row({double(st.l), st.residual, st.step_norm, st.contraction, st.v_norm, double(st.bound_ok),
                   double(st.bound_strict_ok)});
    const std::string rel = "tables/iterations_k" + std::to_string(i) + ".csv";
    tab.write(out / rel);
    rep.files.push_back(rel);

    const std::string kt = "k=" + tag(k);
    rep.checks.push_back(check_le("verify residual (direct) " + kt, C.residual.direct_sup, pc.residual_tol));
    rep.checks.push_back(check_le("verify residual (pullback) " + kt, C.residual.pullback_sup, pc.residual_tol));
    rep.checks.push_back({"bound |v_l| < 2 |seed| " + kt, sol.bound_ok(), double(sol.bound_ok()), 1.0});
    rep.checks.push_back(check_gt("injectivity " + kt, C.injectivity, 0.0));
    rep.results["solutions"].push_back({{"k", k},
                                        {"iterations", sol.history.size()},
                                        {"seed_norm", sol.seed_norm},
                                        {"theta_value", sol.theta_value},
                                        {"v_norm", field_sup(sol.v)},
                                        {"bound_ok", sol.bound_ok()},
                                        {"bound_strict_ok", sol.bound_strict_ok()},
                                        {"residual",
                                         {{"direct_sup", C.residual.direct_sup},
                                          {"direct_holder", C.residual.direct_holder},
                                          {"pullback_sup", C.residual.pullback_sup},
                                          {"pullback_holder", C.residual.pullback_holder}}},
                                        {"injectivity", C.injectivity},
                                        {"table", rel}});
  }
  if (Cs.size() > 1) {
    const double w = field_sup(base.kernel_generator());
    rep.results["w_sup"] = w;
    for (std::size_t i = 1; i < Cs.size(); ++i) {
      const double dk = std::abs(pc.k[i] - pc.k[0]);
      const double dist = field_sup(Cs[i].C - Cs[0].C);
      const std::string kt = "k=" + tag(pc.k[0]) + " vs k=" + tag(pc.k[i]);
      rep.checks.push_back(check_le("family distance upper " + kt, dist, 2.0 * dk * w));
      if (dk > 0) rep.checks.push_back(check_ge("family distance lower " + kt, dist, 0.25 * dk * w));
      rep.results["family"].push_back({{"k0", pc.k[0]}, {"k", pc.k[i]}, {"distance", dist}});
    }
  }
  return rep;
}

Report cmd_freemap_diag(const RunConfig& c, const fs::path& out) {
  Report rep;
  const int n = c.model.dim();
  const int rows = jet_rows(n);
  const AcceptanceSettings limits;
  const double t = c.freemap.t;
  const SampleGrid grid = sample_grid(c.model, c.grid_resolution);
  std::mt19937_64 rng(c.seed);
  const auto idx = detail::random_indices(rng, grid.size(), c.freemap.points);

  const EmbeddingMap map(provider_for(c.model, t, c.truncation), t, c.truncation);
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(rows);
  scale.tail(rows - n).setConstant(std::sqrt(2 * t));
  CsvTable sv_tab({"point", "operator", "index", "singular_value"});
  double min_ratio = 1e300, max_null = 0.0, min_second = 1e300;
  for (std::size_t a = 0; a < idx.size(); ++a) {
    const ChartPoint& p = grid.points[idx[a]];
    const Eigen::MatrixXd P = assemble_P(map, p);
    const Eigen::MatrixXd G = gram(P), Gc = gram(assemble_Pc(P, n));
    const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(scale.asDiagonal() * G * scale.asDiagonal()).singularValues();
    const Eigen::VectorXd svc = Eigen::JacobiSVD<Eigen::MatrixXd>(scale.asDiagonal() * Gc * scale.asDiagonal()).singularValues();
    for (int i = 0; i < rows; ++i) {
      sv_tab.add_cells({std::to_string(a), "P", std::to_string(i), CsvTable::number(sv[i])});
      sv_tab.add_cells({std::to_string(a), "P_c", std::to_string(i), CsvTable::number(svc[i])});
    }
    min_ratio = std::min(min_ratio, sv[rows - 1] / sv[0]);
    max_null = std::max(max_null, svc[rows - 1] / svc[0]);
    min_second = std::min(min_second, svc[rows - 2] / svc[0]);
    const Eigen::MatrixXd lr = 2 * t * G.bottomRightCorner(rows - n, rows - n);
    const Eigen::MatrixXd lrc = 2 * t * Gc.bottomRightCorner(rows - n, rows - n);
    nlohmann::json pj;
    pj["chart"] = p.chart;
    pj["x"] = std::vector<double>(p.x.data(), p.x.data() + p.x.size());
    pj["gram_P_scaled_sv"] = std::vector<double>(sv.data(), sv.data() + sv.size());
    pj["gram_Pc_scaled_sv"] = std::vector<double>(svc.data(), svc.data() + svc.size());
    pj["lower_right_deviation"] = (lr - gram_limit_lower_right(n, false)).cwiseAbs().maxCoeff();
    pj["lower_right_deviation_c"] = (lrc - gram_limit_lower_right(n, true)).cwiseAbs().maxCoeff();
    rep.results["points"].push_back(pj);
  }
  sv_tab.write(out / "tables/freemap_singular_values.csv");
  rep.files.push_back("tables/freemap_singular_values.csv");
  rep.results["t"] = t;
  rep.results["q"] = map.q();
  rep.checks.push_back(check_ge("gram(P) smallest/largest", min_ratio, limits.c4_scale_ratio));
  rep.checks.push_back(check_le("gram(P_c) smallest/largest", max_null, limits.c4_null_ratio));
  rep.checks.push_back(check_ge("gram(P_c) second smallest/largest", min_second, limits.c4_scale_ratio));

  CsvTable e_tab({"t", "q", "e_norm"});
  std::vector<double> ts, es;
  for (double tt : c.freemap.t_grid) {
    const EmbeddingMap m(provider_for(c.model, tt, c.truncation), tt, c.truncation);
    std::mt19937_64 probe(c.seed);
    double e = 0.0;
    for (std::size_t i : idx) e = std::max(e, right_inverse_norm(FreeMapAt(m, grid.points[i]).gram_inverse(), probe));
    e_tab.add_row({tt, double(m.q()), e});
    ts.push_back(tt);
    es.push_back(e);
  }
  e_tab.write(out / "tables/freemap_e_norm.csv");
  rep.files.push_back("tables/freemap_e_norm.csv");
  const OrderFit fit = fit_order(ts, es);
  const double exponent = -(c.regularity.s + c.regularity.alpha) / 2.0;
  rep.results["e_norm"] = {{"t", ts}, {"norm", es}, {"slope", fit.slope}, {"r_squared", fit.r_squared},
                           {"exponent", exponent}};
  rep.checks.push_back(check_ge("E norm slope", fit.slope, exponent - 0.25));
  return rep;
}

Report cmd_verify(const RunConfig& c) {
  Report rep;
  AcceptanceSuite suite(c.verify.settings);
  const std::set<int> expected(c.verify.expected_failures.begin(), c.verify.expected_failures.end());
  for (int id : c.verify.criteria) {
    const CriterionResult r = suite.run(id);
    const std::string name = "criterion " + std::to_string(id) + " " + r.title;
    std::printf("%s: %s", name.c_str(), r.pass() ? "PASS" : "FAIL");
    if (!r.pass()) std::printf(" -- %s%s", r.failure_summary().c_str(), expected.count(id) ? " [expected]" : "");
    std::printf("\n");
    std::fflush(stdout);
    rep.checks.push_back({name, r.pass(), r.pass() ? 1.0 : 0.0, 1.0});
    if (expected.count(id)) rep.expected_failures.insert(name);
    rep.results["criteria"].push_back(to_json(r));
  }
  return rep;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"heat kernel embeddings: spectra, defect scans, conformal perturbation"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path, out_flag;
  std::uint64_t seed = 0;
  int threads = 0;
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--out", out_flag, "output directory; overrides HKCONF_OUT_DIR and output.dir");
  CLI::Option* seed_opt = app.add_option("--seed", seed, "seed for random probes; overrides the config");
  app.add_option("--threads", threads, "worker threads, 0 for the runtime default")->check(CLI::NonNegativeNumber);
  const std::map<std::string, std::string> commands{
      {"spectrum", "dump eigenpairs to eigenpairs/<kind>.jsonl and reload them"},
      {"defect-scan", "conformal defect of Psi_t over the t grid, with and without correction"},
      {"perturb", "Guenther iteration to a conformal immersion (flat tori)"},
      {"verify", "run the acceptance criteria"},
      {"freemap-diag", "gram singular values and the right-inverse norm sweep"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    RunConfig cfg = load_config(config_path);
    if (seed_opt->count()) cfg.seed = cfg.verify.settings.seed = seed;
    fs::path out = cfg.output_dir;
    if (const char* env = std::getenv("HKCONF_OUT_DIR"); env && *env) out = env;
    if (!out_flag.empty()) out = out_flag;
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#endif
    ensure_directory(out);

    Report rep;
    if (command == "spectrum") rep = cmd_spectrum(cfg, out);
    else if (command == "defect-scan") rep = cmd_defect_scan(cfg, out);
    else if (command == "perturb") rep = cmd_perturb(cfg, out);
    else if (command == "freemap-diag") rep = cmd_freemap_diag(cfg, out);
    else rep = cmd_verify(cfg);
    rep.command = command;
    rep.config = cfg.source;
    rep.seed = cfg.seed;
    write_json(rep.to_json(), out / "report.json");

    if (command != "verify")
      for (const Check& ch : rep.checks)
        std::printf("%s %s = %.6g (threshold %.6g)\n", ch.pass ? "PASS" : "FAIL", ch.name.c_str(), ch.value,
                    ch.threshold);
    std::printf("report: %s\n", (out / "report.json").string().c_str());
    return rep.pass() ? 0 : kExitChecks;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const SchemaError& e) {
    std::cerr << "schema error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const PreconditionError& e) {
    std::cerr << "precondition failed: " << e.what() << '\n';
    return kExitPrecondition;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << '\n';
    return kExitPrecondition;
  } catch (const ConvergenceError& e) {
    std::cerr << "no convergence: " << e.what() << '\n';
    return kExitConvergence;
  }
}
