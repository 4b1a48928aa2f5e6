#pragma once

// JSON form of a manifold model: {"kind": "...", "params": {...}}.

#include <string>
#include <vector>

#include <json.hpp>

#include "hk/error.hpp"
#include "hk/geometry.hpp"

namespace hk {

inline nlohmann::json model_to_json(const ManifoldModel& m) {
  nlohmann::json j;
  j["kind"] = kind_name(m.kind());
  switch (m.kind()) {
    case ManifoldKind::FlatTorus: j["params"] = {{"periods", m.lengths()}}; break;
    case ManifoldKind::Circle: j["params"] = {{"length", m.circle_length()}}; break;
    case ManifoldKind::RoundSphere2: j["params"] = {{"radius", m.sphere_radius()}}; break;
    case ManifoldKind::ProductSphereCircle:
      j["params"] = {{"radius", m.sphere_radius()}, {"length", m.circle_length()}};
      break;
  }
  return j;
}

namespace detail {

inline double positive_param(const nlohmann::json& p, const char* key) {
  if (!p.contains(key) || !p[key].is_number())
    throw ConfigError(std::string("model params: missing numeric '") + key + "'");
  const double v = p[key].get<double>();
  if (!(v > 0.0)) throw ConfigError(std::string("model params: '") + key + "' must be > 0");
  return v;
}

}  // namespace detail

inline ManifoldModel model_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    throw ConfigError("model: expected an object with a string 'kind'");
  const std::string kind = j["kind"].get<std::string>();
  const nlohmann::json p = j.value("params", nlohmann::json::object());
  if (!p.is_object()) throw ConfigError("model: 'params' must be an object");

  if (kind == "flat_torus") {
    std::vector<double> periods;
    if (p.contains("periods")) {
      if (!p["periods"].is_array()) throw ConfigError("flat_torus: 'periods' must be an array");
      for (const auto& v : p["periods"]) {
        if (!v.is_number()) throw ConfigError("flat_torus: periods must be numbers");
        periods.push_back(v.get<double>());
      }
    } else {
      // {"n": 2, "period": L} shorthand for a square lattice
      if (!p.contains("n") || !p["n"].is_number_integer())
        throw ConfigError("flat_torus: give 'periods' or integer 'n'");
      const int n = p["n"].get<int>();
      if (n < 1) throw ConfigError("flat_torus: n must be >= 1");
      const double L = p.contains("period") ? detail::positive_param(p, "period")
                                            : 2.0 * std::numbers::pi;
      periods.assign(n, L);
    }
    if (periods.empty()) throw ConfigError("flat_torus: no periods");
    for (double L : periods)
      if (!(L > 0.0)) throw ConfigError("flat_torus: periods must be > 0");
    return ManifoldModel::flat_torus(periods);
  }
  if (kind == "circle") return ManifoldModel::circle(detail::positive_param(p, "length"));
  if (kind == "round_sphere") return ManifoldModel::round_sphere(detail::positive_param(p, "radius"));
  if (kind == "product_sphere_circle")
    return ManifoldModel::product_sphere_circle(detail::positive_param(p, "radius"),
                                                detail::positive_param(p, "length"));
  throw ConfigError("model: unknown kind '" + kind + "'");
}

}  // namespace hk
