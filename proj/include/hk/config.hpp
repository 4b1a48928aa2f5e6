#pragma once

// Run configuration: one JSON document, validated in full before any work.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "hk/acceptance.hpp"
#include "hk/embedding.hpp"
#include "hk/error.hpp"
#include "hk/geometry.hpp"
#include "hk/guenther.hpp"
#include "hk/model_io.hpp"

namespace hk {

struct CorrectionConfig {
  int l = 1;
  std::vector<double> eta{0.0};
};

struct RegularityConfig {
  int s = 2;
  double alpha = 0.5;
  int l = 3;  // order of the remaining defect, O(t^l)
};

struct SpectrumConfig {
  int count = 16;
  int grid_resolution = 16;
  double tolerance = 1e-8;
};

struct ForcingConfig {
  std::string type = "manufactured";  // or "conformal"
  double epsilon = 1e-3;
};

struct PerturbConfig {
  double t = 0.05;
  int grid = 64;
  double e = 1.0;
  double tol = 1e-12;
  int max_iter = 50;
  double theta = 0.25;
  std::vector<double> k{0.0};
  ForcingConfig forcing;
  double residual_tol = 1e-8;
  std::optional<double> k_max;  // defaults to t^2
};

struct ExpectConfig {
  std::optional<double> max_defect;
  std::optional<std::pair<double, double>> uncorrected_slope;
  std::optional<double> corrected_slope_min;
};

struct FreemapDiagConfig {
  double t = 0.02;
  int points = 4;
  std::vector<double> t_grid{0.1, 0.05, 0.02, 0.01};
};

struct VerifyConfig {
  std::vector<int> criteria = AcceptanceSuite::all_ids();
  std::vector<int> expected_failures;
  AcceptanceSettings settings;
};

struct RunConfig {
  nlohmann::json source;  // the document as read, echoed in reports
  ManifoldModel model = ManifoldModel::circle(2 * std::numbers::pi);
  std::uint64_t seed = AcceptanceSettings{}.seed;
  TruncationPolicy truncation;
  std::vector<double> t_grid{0.1, 0.07, 0.05, 0.035, 0.025};
  int grid_resolution = 16;
  std::optional<CorrectionConfig> correction;
  RegularityConfig regularity;
  SpectrumConfig spectrum;
  PerturbConfig perturb;
  ExpectConfig expect;
  FreemapDiagConfig freemap;
  VerifyConfig verify;
  std::string output_dir = "out";
};

namespace detail {

inline void only_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

inline double get_number(const nlohmann::json& j, const char* key, double fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ConfigError(where + "." + key + " must be a number");
  const double v = j[key].get<double>();
  if (!std::isfinite(v)) throw ConfigError(where + "." + key + " must be finite");
  return v;
}

inline int get_int(const nlohmann::json& j, const char* key, int fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer()) throw ConfigError(where + "." + key + " must be an integer");
  return j[key].get<int>();
}

inline std::vector<double> get_numbers(const nlohmann::json& j, const char* key, std::vector<double> fallback,
                                       const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_array()) throw ConfigError(where + "." + key + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& v : j[key]) {
    if (!v.is_number()) throw ConfigError(where + "." + key + " must be an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

inline std::vector<int> get_ints(const nlohmann::json& j, const char* key, std::vector<int> fallback,
                                 const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_array()) throw ConfigError(where + "." + key + " must be an array of integers");
  std::vector<int> out;
  for (const auto& v : j[key]) {
    if (!v.is_number_integer()) throw ConfigError(where + "." + key + " must be an array of integers");
    out.push_back(v.get<int>());
  }
  return out;
}

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace detail

/// Parses and validates; throws ConfigError on any problem.
inline RunConfig parse_config(const nlohmann::json& j) {
  using namespace detail;
  only_keys(j, {"model", "seed", "rho", "truncation", "t_grid", "grid_resolution", "correction", "regularity",
                "spectrum", "perturb", "expect", "freemap", "verify", "output"},
            "config");
  RunConfig c;
  c.source = j;
  require(j.contains("model"), "config.model is required");
  c.model = model_from_json(j["model"]);

  if (j.contains("seed")) {
    require(j["seed"].is_number_unsigned(), "config.seed must be a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  c.truncation.rho = get_number(j, "rho", 1.0, "config");
  require(c.truncation.rho > 0, "config.rho must be > 0");
  if (j.contains("truncation")) {
    const auto& t = j["truncation"];
    only_keys(t, {"q_override", "lambda_t_cutoff", "complete_eigenspaces"}, "truncation");
    if (t.contains("q_override")) {
      const int q = get_int(t, "q_override", 0, "truncation");
      require(q >= freeness_floor(c.model.dim()), "truncation.q_override is below the freeness floor n + n(n+1)/2");
      c.truncation.q_override = q;
    }
    if (t.contains("lambda_t_cutoff")) {
      const double k = get_number(t, "lambda_t_cutoff", 0, "truncation");
      require(k > 0, "truncation.lambda_t_cutoff must be > 0");
      c.truncation.lambda_t_cutoff = k;
    }
    if (t.contains("complete_eigenspaces")) {
      require(t["complete_eigenspaces"].is_boolean(), "truncation.complete_eigenspaces must be a boolean");
      c.truncation.complete_eigenspaces = t["complete_eigenspaces"].get<bool>();
    }
  }
  c.t_grid = get_numbers(j, "t_grid", c.t_grid, "config");
  for (std::size_t i = 0; i < c.t_grid.size(); ++i) {
    require(c.t_grid[i] > 0 && c.t_grid[i] < 1, "config.t_grid values must lie in (0, 1)");
    require(i == 0 || c.t_grid[i] < c.t_grid[i - 1], "config.t_grid must be strictly decreasing");
  }
  c.grid_resolution = get_int(j, "grid_resolution", c.grid_resolution, "config");
  require(c.grid_resolution >= 4, "config.grid_resolution must be >= 4");

  if (j.contains("correction") && !j["correction"].is_null()) {
    const auto& cj = j["correction"];
    only_keys(cj, {"l", "eta"}, "correction");
    CorrectionConfig cc;
    cc.l = get_int(cj, "l", 1, "correction");
    require(cc.l == 1, "correction.l: only the first-order correction (l = 1) is available");
    cc.eta = get_numbers(cj, "eta", cc.eta, "correction");
    require(!cc.eta.empty(), "correction.eta must not be empty");
    c.correction = cc;
  }

  // l is the order of the remaining defect: O(t) uncorrected, O(t^2) after h1,
  // exponentially small on flat tori
  const int achievable = c.model.is_flat() ? 3 : (c.correction ? 2 : 1);
  c.regularity.l = achievable;
  if (j.contains("regularity")) {
    const auto& r = j["regularity"];
    only_keys(r, {"s", "alpha", "l"}, "regularity");
    c.regularity.s = get_int(r, "s", c.regularity.s, "regularity");
    c.regularity.alpha = get_number(r, "alpha", c.regularity.alpha, "regularity");
    c.regularity.l = get_int(r, "l", c.regularity.l, "regularity");
  }
  require(c.regularity.s >= 2, "regularity.s must be >= 2");
  require(c.regularity.alpha > 0 && c.regularity.alpha < 1, "regularity.alpha must lie in (0, 1)");
  require(c.model.is_flat() || c.regularity.l <= achievable,
          "regularity.l exceeds the defect order the configured correction achieves");
  // the perturbation theorem needs s + alpha < l + 1/2; scans and diagnostics do not
  if (j.contains("regularity") || j.contains("perturb"))
    require(c.regularity.s + c.regularity.alpha < c.regularity.l + 0.5, "regularity: s + alpha must be < l + 1/2");

  if (j.contains("spectrum")) {
    const auto& s = j["spectrum"];
    only_keys(s, {"count", "grid_resolution", "tolerance"}, "spectrum");
    c.spectrum.count = get_int(s, "count", c.spectrum.count, "spectrum");
    c.spectrum.grid_resolution = get_int(s, "grid_resolution", c.spectrum.grid_resolution, "spectrum");
    c.spectrum.tolerance = get_number(s, "tolerance", c.spectrum.tolerance, "spectrum");
    require(c.spectrum.count >= 1, "spectrum.count must be >= 1");
    require(c.spectrum.grid_resolution >= 4, "spectrum.grid_resolution must be >= 4");
    require(c.spectrum.tolerance > 0, "spectrum.tolerance must be > 0");
  }

  if (j.contains("perturb")) {
    const auto& p = j["perturb"];
    only_keys(p, {"t", "grid", "e", "tol", "max_iter", "theta", "k", "forcing", "residual_tol", "k_max"}, "perturb");
    PerturbConfig& pc = c.perturb;
    pc.t = get_number(p, "t", pc.t, "perturb");
    pc.grid = get_int(p, "grid", pc.grid, "perturb");
    pc.e = get_number(p, "e", pc.e, "perturb");
    pc.tol = get_number(p, "tol", pc.tol, "perturb");
    pc.max_iter = get_int(p, "max_iter", pc.max_iter, "perturb");
    pc.theta = get_number(p, "theta", pc.theta, "perturb");
    pc.k = get_numbers(p, "k", pc.k, "perturb");
    pc.residual_tol = get_number(p, "residual_tol", pc.residual_tol, "perturb");
    if (p.contains("k_max")) pc.k_max = get_number(p, "k_max", 0, "perturb");
    if (p.contains("forcing")) {
      const auto& f = p["forcing"];
      only_keys(f, {"type", "epsilon"}, "perturb.forcing");
      if (f.contains("type")) {
        require(f["type"].is_string(), "perturb.forcing.type must be a string");
        pc.forcing.type = f["type"].get<std::string>();
      }
      pc.forcing.epsilon = get_number(f, "epsilon", pc.forcing.epsilon, "perturb.forcing");
    }
    require(pc.t > 0 && pc.t < 1, "perturb.t must lie in (0, 1)");
    require(pc.grid >= 8 && pc.grid % 2 == 0, "perturb.grid must be even and >= 8");
    require(pc.e > 0, "perturb.e must be > 0");
    require(pc.tol > 0, "perturb.tol must be > 0");
    require(pc.max_iter >= 1, "perturb.max_iter must be >= 1");
    require(pc.theta > 0, "perturb.theta must be > 0");
    require(!pc.k.empty(), "perturb.k must not be empty");
    require(pc.forcing.type == "manufactured" || pc.forcing.type == "conformal",
            "perturb.forcing.type must be 'manufactured' or 'conformal'");
    const double k_max = pc.k_max.value_or(pc.t * pc.t);
    for (double k : pc.k) require(std::abs(k) <= k_max, "perturb.k: |k| exceeds k_max (default t^2)");
  }

  if (j.contains("expect")) {
    const auto& e = j["expect"];
    only_keys(e, {"max_defect", "uncorrected_slope", "corrected_slope_min"}, "expect");
    if (e.contains("max_defect")) c.expect.max_defect = get_number(e, "max_defect", 0, "expect");
    if (e.contains("uncorrected_slope")) {
      const auto v = get_numbers(e, "uncorrected_slope", {}, "expect");
      require(v.size() == 2 && v[0] <= v[1], "expect.uncorrected_slope must be [lo, hi]");
      c.expect.uncorrected_slope = std::make_pair(v[0], v[1]);
    }
    if (e.contains("corrected_slope_min"))
      c.expect.corrected_slope_min = get_number(e, "corrected_slope_min", 0, "expect");
  }

  if (j.contains("freemap")) {
    const auto& f = j["freemap"];
    only_keys(f, {"t", "points", "t_grid"}, "freemap");
    c.freemap.t = get_number(f, "t", c.freemap.t, "freemap");
    c.freemap.points = get_int(f, "points", c.freemap.points, "freemap");
    c.freemap.t_grid = get_numbers(f, "t_grid", c.freemap.t_grid, "freemap");
    require(c.freemap.t > 0 && c.freemap.t < 1, "freemap.t must lie in (0, 1)");
    require(c.freemap.points >= 1, "freemap.points must be >= 1");
    require(c.freemap.t_grid.size() >= 3, "freemap.t_grid needs at least 3 values");
    for (double t : c.freemap.t_grid) require(t > 0 && t < 1, "freemap.t_grid values must lie in (0, 1)");
  }

  if (j.contains("verify")) {
    const auto& v = j["verify"];
    only_keys(v, {"criteria", "expected_failures", "tolerances"}, "verify");
    c.verify.criteria = get_ints(v, "criteria", c.verify.criteria, "verify");
    c.verify.expected_failures = get_ints(v, "expected_failures", {}, "verify");
    for (int id : c.verify.criteria) require(id >= 1 && id <= 9, "verify.criteria entries must lie in 1..9");
    if (v.contains("tolerances")) {
      const auto& t = v["tolerances"];
      require(t.is_object(), "verify.tolerances must be an object");
      auto nums = c.verify.settings.numeric_fields();
      auto ints = c.verify.settings.integer_fields();
      for (auto it = t.begin(); it != t.end(); ++it) {
        bool found = false;
        for (auto& [name, ptr] : nums)
          if (name == it.key()) {
            require(it.value().is_number(), "verify.tolerances." + name + " must be a number");
            *ptr = it.value().get<double>();
            found = true;
          }
        for (auto& [name, ptr] : ints)
          if (name == it.key()) {
            require(it.value().is_number_integer(), "verify.tolerances." + name + " must be an integer");
            *ptr = it.value().get<int>();
            found = true;
          }
        require(found, "unknown key '" + it.key() + "' in verify.tolerances");
      }
    }
  }
  c.verify.settings.seed = c.seed;

  if (j.contains("output")) {
    const auto& o = j["output"];
    only_keys(o, {"dir"}, "output");
    if (o.contains("dir")) {
      require(o["dir"].is_string() && !o["dir"].get<std::string>().empty(), "output.dir must be a non-empty string");
      c.output_dir = o["dir"].get<std::string>();
    }
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return parse_config(j);
}

}  // namespace hk
