#pragma once

// JSON reports and CSV tables written by the command-line tool.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "hk/acceptance.hpp"
#include "hk/error.hpp"

namespace hk {

inline constexpr const char* kToolName = "hkconf";
inline constexpr const char* kVersion = "0.1.0";

/// Index and basis conventions, echoed in every report.
inline nlohmann::json conventions() {
  return {
      {"embedding", "component j = sqrt(2) (4 pi)^(n/4) t^((n+2)/4) exp(-lambda_j t / 2) phi_j"},
      {"eigenfunctions", "L2(dvol_g)-orthonormal, ascending lambda, truncation completed to whole eigenspaces"},
      {"jet_rows", "D_1..D_n, then D_iD_j for i < j in lexicographic order, then D_iD_i"},
      {"tensors", "components in the orthonormal frame of g; sup norms are frame norms"},
      {"symmetric_fields", "columns ordered (i, j) with i < j first, then the diagonal"},
      {"grid", "tensor product, last coordinate fastest; sphere factor ascending theta then phi"},
      {"eigenpair_hessians", "n x n coordinate Hessian per point, row-major"},
      {"defect", "G - (tr_g G / n) g"}};
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Report {
  std::string command;
  nlohmann::json config;
  std::uint64_t seed = 0;
  nlohmann::json results = nlohmann::json::object();
  std::vector<Check> checks;
  std::vector<std::string> files;  // relative to the output directory
  std::set<std::string> expected_failures;  // check names allowed to fail

  bool pass() const {
    for (const Check& c : checks)
      if (!c.pass && !expected_failures.count(c.name)) return false;
    return true;
  }

  /// Everything except generated_at is a function of config and seed.
  nlohmann::json to_json(bool with_timestamp = true) const {
    nlohmann::json j;
    j["tool"] = kToolName;
    j["version"] = kVersion;
    j["command"] = command;
    j["config"] = config;
    j["conventions"] = conventions();
    j["seed"] = seed;
    j["results"] = results;
    j["checks"] = nlohmann::json::array();
    for (const Check& c : checks)
      j["checks"].push_back({{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"threshold", c.threshold}});
    j["expected_failures"] = expected_failures;
    j["pass"] = pass();
    j["files"] = files;
    if (with_timestamp) j["generated_at"] = utc_timestamp();
    return j;
  }
};

inline void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
}

inline void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  ensure_directory(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(const std::vector<double>& row) {
    std::vector<std::string> cells;
    for (double v : row) cells.push_back(number(v));
    add_cells(std::move(cells));
  }
  void add_cells(std::vector<std::string> cells) {
    if (cells.size() != header_.size()) throw DomainError("CsvTable: row width differs from the header");
    rows_.push_back(std::move(cells));
  }
  std::size_t rows() const { return rows_.size(); }

  /// Shortest representation that round-trips.
  static std::string number(double v) {
    char buf[32];
    for (int prec = 1; prec <= 17; ++prec) {
      std::snprintf(buf, sizeof buf, "%.*g", prec, v);
      if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
  }

  void write(const std::filesystem::path& path) const {
    ensure_directory(path.parent_path());
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
      out << '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace hk
