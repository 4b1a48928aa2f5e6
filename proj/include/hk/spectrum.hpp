#pragma once

// Ordered Laplace-Beltrami eigenpairs with value/gradient/Hessian jets.
// Convention: Delta phi_j = -lambda_j phi_j, phi_j L2-orthonormal, real bases.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "hk/error.hpp"
#include "hk/geometry.hpp"
#include "hk/jet.hpp"
#include "hk/model_io.hpp"

namespace hk {

struct EigenPair {
  int j = 0;
  double lambda = 0.0;
  /// torus: (k_1..k_n, trig); circle: (k, trig); sphere: (l, m);
  /// product: (l, m, k, trig). trig 0 = cos, 1 = sin; sphere m < 0 is the sin type.
  std::vector<int> label;
};

inline std::string label_string(const std::vector<int>& label) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < label.size(); ++i) os << (i ? "," : "") << label[i];
  os << ')';
  return os.str();
}

struct JetEvaluation {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

/// Jets of the first `count` eigenfunctions at one point, one column per mode.
/// hessians column j holds the n x n coordinate Hessian in column-major order.
struct JetBlock {
  Eigen::VectorXd values;
  Eigen::MatrixXd gradients;
  Eigen::MatrixXd hessians;

  int count() const { return static_cast<int>(values.size()); }
  Eigen::Map<const Eigen::MatrixXd> hessian(int j, int n) const {
    return Eigen::Map<const Eigen::MatrixXd>(hessians.col(j).data(), n, n);
  }
};

enum class Backing { Analytic, External };

class SpectrumProvider {
 public:
  virtual ~SpectrumProvider() = default;

  virtual const ManifoldModel& model() const = 0;
  virtual Backing backing() const = 0;
  virtual int count() const = 0;
  virtual const EigenPair& pair(int j) const = 0;
  virtual JetBlock eval_jets(const ChartPoint& x, int count) const = 0;

  double lambda(int j) const { return pair(j).lambda; }

  std::vector<EigenPair> enumerate(int count) const {
    if (count < 1) throw DomainError("enumerate: count must be >= 1");
    if (count > this->count())
      throw PreconditionError("enumerate: provider has " + std::to_string(this->count()) +
                              " eigenpairs, " + std::to_string(count) + " requested");
    std::vector<EigenPair> out;
    out.reserve(count);
    for (int j = 0; j < count; ++j) out.push_back(pair(j));
    return out;
  }

  JetEvaluation eval_jet(int j, const ChartPoint& x) const {
    if (j < 0 || j >= count()) throw DomainError("eval_jet: index out of range");
    const JetBlock b = eval_jets(x, j + 1);
    const int n = model().dim();
    return {b.values[j], b.gradients.col(j), b.hessian(j, n)};
  }

  /// End (exclusive) of the eigenspace cluster containing index j.
  int cluster_end(int j) const {
    const double lam = lambda(j);
    int e = j + 1;
    while (e < count() && same_eigenvalue(lambda(e), lam)) ++e;
    return e;
  }

  static bool same_eigenvalue(double a, double b) {
    return std::abs(a - b) <= 1e-12 * std::max(1.0, std::max(std::abs(a), std::abs(b)));
  }
};

namespace detail {

/// Real orthonormal spherical harmonics on the sphere of radius R up to degree
/// lmax, as jets in chart coordinates. Index l*l + (m + l), m in [-l, l];
/// m > 0 ~ cos(m phi), m < 0 ~ sin(|m| phi) in the z-polar frame.
inline std::vector<Jet<2>> sphere_harmonic_jets(int chart, double theta, double phi, int lmax,
                                                double R) {
  using J = Jet<2>;
  const J th = J::variable(theta, 0);
  const J ph = J::variable(phi, 1);
  const J st = sin(th), ct = cos(th), sp = sin(ph), cp = cos(ph);
  J x, y, z;
  if (chart == 0) {
    x = st * cp;
    y = st * sp;
    z = ct;
  } else {
    x = ct;
    y = st * cp;
    z = st * sp;
  }

  std::vector<J> out(static_cast<std::size_t>(lmax + 1) * (lmax + 1));
  // re/im of (x + i y)^m
  J re(1.0), im(0.0);
  double qmm = 1.0 / std::sqrt(4.0 * std::numbers::pi);
  const double inv_r = 1.0 / R;
  for (int m = 0; m <= lmax; ++m) {
    if (m > 0) {
      const J nre = re * x - im * y;
      const J nim = re * y + im * x;
      re = nre;
      im = nim;
      qmm *= std::sqrt((2.0 * m + 1.0) / (2.0 * m));
    }
    // Q_l^m(z) for l = m..lmax by the normalized three-term recurrence
    J q_prev2(0.0), q_prev(qmm);
    for (int l = m; l <= lmax; ++l) {
      J q;
      if (l == m) {
        q = J(qmm);
      } else if (l == m + 1) {
        q = std::sqrt(2.0 * m + 3.0) * (z * q_prev);
      } else {
        const double a = std::sqrt((4.0 * l * l - 1.0) / (double(l) * l - double(m) * m));
        const double b = std::sqrt((double(l - 1) * (l - 1) - double(m) * m) /
                                   (4.0 * (l - 1) * (l - 1) - 1.0));
        q = a * (z * q_prev - b * q_prev2);
      }
      if (l > m) {
        q_prev2 = q_prev;
        q_prev = q;
      }
      if (m == 0) {
        out[l * l + l] = inv_r * q;
      } else {
        const double s = std::sqrt(2.0) * inv_r;
        out[l * l + l + m] = s * (q * re);
        out[l * l + l - m] = s * (q * im);
      }
    }
  }
  return out;
}

/// Circle factor jets in the angle coordinate: index 2k-1 cos, 2k sin, 0 constant.
inline void circle_mode_jets(double theta, int kmax, double L, std::vector<double>& v,
                             std::vector<double>& d1, std::vector<double>& d2) {
  const int size = 2 * kmax + 1;
  v.assign(size, 0.0);
  d1.assign(size, 0.0);
  d2.assign(size, 0.0);
  v[0] = 1.0 / std::sqrt(L);
  const double a = std::sqrt(2.0 / L);
  for (int k = 1; k <= kmax; ++k) {
    const double c = std::cos(k * theta), s = std::sin(k * theta);
    v[2 * k - 1] = a * c;
    d1[2 * k - 1] = -a * k * s;
    d2[2 * k - 1] = -a * k * k * c;
    v[2 * k] = a * s;
    d1[2 * k] = a * k * c;
    d2[2 * k] = -a * k * k * s;
  }
}

inline int circle_slot(int k, int trig) { return k == 0 ? 0 : 2 * k - 1 + trig; }

}  // namespace detail

/// Closed-form spectrum of a testbed model. Holds at least `min_count` pairs,
/// rounded up to the end of the last eigenspace so no eigenspace is split.
class AnalyticSpectrum : public SpectrumProvider {
 public:
  AnalyticSpectrum(const ManifoldModel& model, int min_count) : model_(model) {
    if (min_count < 1) throw DomainError("AnalyticSpectrum: count must be >= 1");
    // Grow the eigenvalue ceiling until enough modes fall under it.
    double cap = initial_cap(min_count);
    std::vector<EigenPair> modes;
    for (;;) {
      modes = modes_below(cap);
      if (static_cast<int>(modes.size()) >= min_count) break;
      cap *= 2.0;
    }
    finalize(std::move(modes), min_count);
  }

  /// Every mode with lambda <= lambda_max.
  static AnalyticSpectrum up_to_lambda(const ManifoldModel& model, double lambda_max) {
    AnalyticSpectrum s(model);
    auto modes = s.modes_below(lambda_max * (1.0 + 1e-12));
    const int size = static_cast<int>(modes.size());
    s.finalize(std::move(modes), size);
    return s;
  }

  const ManifoldModel& model() const override { return model_; }
  Backing backing() const override { return Backing::Analytic; }
  int count() const override { return static_cast<int>(pairs_.size()); }
  const EigenPair& pair(int j) const override {
    if (j < 0 || j >= count()) throw DomainError("eigenpair index out of range");
    return pairs_[j];
  }

  JetBlock eval_jets(const ChartPoint& p, int count) const override {
    if (count < 0 || count > this->count())
      throw PreconditionError("eval_jets: provider has " + std::to_string(this->count()) +
                              " eigenpairs, " + std::to_string(count) + " requested");
    detail::check_point(model_, p);
    const int n = model_.dim();
    JetBlock b;
    b.values.resize(count);
    b.gradients.resize(n, count);
    b.hessians.resize(n * n, count);
    if (count == 0) return b;

    switch (model_.kind()) {
      case ManifoldKind::FlatTorus:
      case ManifoldKind::Circle: eval_flat(p, count, b); break;
      case ManifoldKind::RoundSphere2: eval_sphere(p, count, b); break;
      case ManifoldKind::ProductSphereCircle: eval_product(p, count, b); break;
    }
    return b;
  }

 private:
  explicit AnalyticSpectrum(const ManifoldModel& model) : model_(model) {}

  double initial_cap(int count) const {
    // Weyl-type guess; the loop doubles it as needed.
    const double vol = model_.volume();
    const int n = model_.dim();
    const double unit_ball = std::pow(std::numbers::pi, n / 2.0) / std::tgamma(n / 2.0 + 1.0);
    const double c = std::pow(2.0 * std::numbers::pi, n) / (unit_ball * vol);
    return std::max(1e-6, 1.2 * std::pow(c * (count + 1), 2.0 / n));
  }

  std::vector<EigenPair> modes_below(double cap) const {
    std::vector<EigenPair> out;
    constexpr double two_pi = 2.0 * std::numbers::pi;
    switch (model_.kind()) {
      case ManifoldKind::FlatTorus:
      case ManifoldKind::Circle: {
        const auto& L = model_.lengths();
        const int n = static_cast<int>(L.size());
        std::vector<double> w2(n);
        std::vector<int> kmax(n);
        for (int i = 0; i < n; ++i) {
          const double w = two_pi / L[i];
          w2[i] = w * w;
          kmax[i] = static_cast<int>(std::floor(std::sqrt(cap / w2[i]))) + 1;
        }
        std::vector<int> k(n, 0);
        // half-lattice: first nonzero component positive
        auto visit = [&](auto&& self, int axis, double lam, bool nonzero) -> void {
          if (lam > cap) return;
          if (axis == n) {
            if (!nonzero) {
              out.push_back({0, 0.0, make_label(k, 0)});
              return;
            }
            out.push_back({0, lam, make_label(k, 0)});
            out.push_back({0, lam, make_label(k, 1)});
            return;
          }
          const int lo = nonzero ? -kmax[axis] : 0;
          for (int ki = lo; ki <= kmax[axis]; ++ki) {
            k[axis] = ki;
            self(self, axis + 1, lam + ki * double(ki) * w2[axis], nonzero || ki != 0);
          }
          k[axis] = 0;
        };
        visit(visit, 0, 0.0, false);
        break;
      }
      case ManifoldKind::RoundSphere2: {
        const double r2 = model_.sphere_radius() * model_.sphere_radius();
        for (int l = 0; l * (l + 1.0) / r2 <= cap; ++l)
          for (int m = -l; m <= l; ++m) out.push_back({0, l * (l + 1.0) / r2, {l, m}});
        break;
      }
      case ManifoldKind::ProductSphereCircle: {
        const double r2 = model_.sphere_radius() * model_.sphere_radius();
        const double w = two_pi / model_.circle_length();
        for (int l = 0; l * (l + 1.0) / r2 <= cap; ++l) {
          const double ls = l * (l + 1.0) / r2;
          for (int kk = 0; ls + kk * double(kk) * w * w <= cap; ++kk) {
            const double lam = ls + kk * double(kk) * w * w;
            for (int m = -l; m <= l; ++m) {
              out.push_back({0, lam, {l, m, kk, 0}});
              if (kk > 0) out.push_back({0, lam, {l, m, kk, 1}});
            }
          }
        }
        break;
      }
    }
    return out;
  }

  static std::vector<int> make_label(const std::vector<int>& k, int trig) {
    std::vector<int> l = k;
    l.push_back(trig);
    return l;
  }

  void finalize(std::vector<EigenPair> modes, int min_count) {
    std::sort(modes.begin(), modes.end(),
              [](const EigenPair& a, const EigenPair& b) { return a.lambda < b.lambda; });
    // Within a cluster of equal eigenvalues order by label.
    std::size_t i = 0;
    while (i < modes.size()) {
      std::size_t e = i + 1;
      while (e < modes.size() && same_eigenvalue(modes[e].lambda, modes[i].lambda)) ++e;
      std::sort(modes.begin() + i, modes.begin() + e,
                [](const EigenPair& a, const EigenPair& b) { return a.label < b.label; });
      const double lam = modes[i].lambda;
      for (std::size_t j = i; j < e; ++j) modes[j].lambda = lam;
      if (static_cast<int>(e) >= min_count) {
        modes.resize(e);
        break;
      }
      i = e;
    }
    pairs_ = std::move(modes);
    for (int j = 0; j < count(); ++j) pairs_[j].j = j;

    lmax_ = 0;
    kmax_ = 0;
    for (const auto& pr : pairs_) {
      if (model_.has_sphere_factor()) lmax_ = std::max(lmax_, pr.label[0]);
      if (model_.kind() == ManifoldKind::ProductSphereCircle) kmax_ = std::max(kmax_, pr.label[2]);
    }
  }

  void eval_flat(const ChartPoint& p, int count, JetBlock& b) const {
    const int n = model_.dim();
    const double a = std::sqrt(2.0 / model_.volume());
    Eigen::VectorXd k(n);
    for (int j = 0; j < count; ++j) {
      const auto& lab = pairs_[j].label;
      double phase = 0.0;
      bool zero = true;
      for (int i = 0; i < n; ++i) {
        k[i] = lab[i];
        phase += lab[i] * p.x[i];
        zero = zero && lab[i] == 0;
      }
      if (zero) {
        b.values[j] = 1.0 / std::sqrt(model_.volume());
        b.gradients.col(j).setZero();
        b.hessians.col(j).setZero();
        continue;
      }
      const double c = std::cos(phase), s = std::sin(phase);
      const bool is_sin = lab[n] == 1;
      const double f0 = is_sin ? s : c;
      const double f1 = is_sin ? c : -s;
      b.values[j] = a * f0;
      b.gradients.col(j) = a * f1 * k;
      Eigen::Map<Eigen::MatrixXd>(b.hessians.col(j).data(), n, n) = (-a * f0) * (k * k.transpose());
    }
  }

  void eval_sphere(const ChartPoint& p, int count, JetBlock& b) const {
    const auto Y = detail::sphere_harmonic_jets(p.chart, p.x[0], p.x[1], lmax_, model_.sphere_radius());
    for (int j = 0; j < count; ++j) {
      const int l = pairs_[j].label[0], m = pairs_[j].label[1];
      const Jet<2>& y = Y[l * l + l + m];
      b.values[j] = y.v;
      b.gradients.col(j) = y.g;
      Eigen::Map<Eigen::Matrix2d>(b.hessians.col(j).data()) = y.h;
    }
  }

  void eval_product(const ChartPoint& p, int count, JetBlock& b) const {
    const auto Y = detail::sphere_harmonic_jets(p.chart, p.x[0], p.x[1], lmax_, model_.sphere_radius());
    std::vector<double> cv, c1, c2;
    detail::circle_mode_jets(p.x[2], kmax_, model_.circle_length(), cv, c1, c2);
    for (int j = 0; j < count; ++j) {
      const auto& lab = pairs_[j].label;
      const Jet<2>& y = Y[lab[0] * lab[0] + lab[0] + lab[1]];
      const int slot = detail::circle_slot(lab[2], lab[3]);
      const double v = cv[slot], d = c1[slot], dd = c2[slot];
      b.values[j] = y.v * v;
      b.gradients(0, j) = y.g[0] * v;
      b.gradients(1, j) = y.g[1] * v;
      b.gradients(2, j) = y.v * d;
      Eigen::Map<Eigen::Matrix3d> H(b.hessians.col(j).data());
      H.topLeftCorner<2, 2>() = y.h * v;
      H(0, 2) = H(2, 0) = y.g[0] * d;
      H(1, 2) = H(2, 1) = y.g[1] * d;
      H(2, 2) = y.v * dd;
    }
  }

  ManifoldModel model_;
  std::vector<EigenPair> pairs_;
  int lmax_ = 0;
  int kmax_ = 0;
};

/// Spectrum tabulated on an explicit grid, read from an eigenpair JSONL file.
class ExternalSpectrum : public SpectrumProvider {
 public:
  ExternalSpectrum(ManifoldModel model, SampleGrid grid, std::vector<EigenPair> pairs,
                   std::vector<JetBlock> tables, double tolerance)
      : model_(std::move(model)), grid_(std::move(grid)), pairs_(std::move(pairs)),
        tables_(std::move(tables)), tolerance_(tolerance) {}

  const ManifoldModel& model() const override { return model_; }
  Backing backing() const override { return Backing::External; }
  int count() const override { return static_cast<int>(pairs_.size()); }
  const EigenPair& pair(int j) const override {
    if (j < 0 || j >= count()) throw DomainError("eigenpair index out of range");
    return pairs_[j];
  }
  const SampleGrid& grid() const { return grid_; }
  double tolerance() const { return tolerance_; }

  JetBlock eval_jets(const ChartPoint& p, int count) const override {
    if (count < 0 || count > this->count())
      throw PreconditionError("eval_jets: external spectrum has " + std::to_string(this->count()) +
                              " eigenpairs, " + std::to_string(count) + " requested");
    const int idx = find_point(p);
    const JetBlock& t = tables_[idx];
    JetBlock b;
    b.values = t.values.head(count);
    b.gradients = t.gradients.leftCols(count);
    b.hessians = t.hessians.leftCols(count);
    return b;
  }

  /// Uniform metric rescale g -> c g: lambda / c, jets * c^(-n/4).
  ExternalSpectrum rescaled(double c) const {
    if (!(c > 0.0)) throw DomainError("rescaled: factor must be > 0");
    const double s = std::pow(c, -model_.dim() / 4.0);
    ExternalSpectrum out = *this;
    out.model_ = model_.rescaled({c});
    for (auto& pr : out.pairs_) pr.lambda /= c;
    for (auto& w : out.grid_.weights) w *= std::pow(c, model_.dim() / 2.0);
    for (auto& t : out.tables_) {
      t.values *= s;
      t.gradients *= s;
      t.hessians *= s;
    }
    return out;
  }

 private:
  int find_point(const ChartPoint& p) const {
    for (std::size_t i = 0; i < grid_.points.size(); ++i) {
      const auto& g = grid_.points[i];
      if (g.chart == p.chart && g.x.size() == p.x.size() &&
          (g.x - p.x).cwiseAbs().maxCoeff() <= 1e-12)
        return static_cast<int>(i);
    }
    throw DomainError("external spectrum: query point is not on the tabulation grid");
  }

  ManifoldModel model_;
  SampleGrid grid_;
  std::vector<EigenPair> pairs_;
  std::vector<JetBlock> tables_;
  double tolerance_;
};

/// Max deviation of the quadrature Gram matrix of the first `count`
/// eigenfunctions from the identity.
inline double orthonormality_error(const SpectrumProvider& sp, const SampleGrid& grid, int count) {
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(count, count);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const JetBlock b = sp.eval_jets(grid.points[i], count);
    gram.noalias() += grid.weights[i] * (b.values * b.values.transpose());
  }
  return (gram - Eigen::MatrixXd::Identity(count, count)).cwiseAbs().maxCoeff();
}

/// Write the first `count` eigenpairs of `sp` tabulated on `grid` as JSONL.
inline void export_spectrum(const SpectrumProvider& sp, int count, const SampleGrid& grid,
                            double tolerance, const std::string& path) {
  if (count < 1 || count > sp.count()) throw DomainError("export_spectrum: bad count");
  const int n = sp.model().dim();
  const std::size_t np = grid.size();
  std::vector<JetBlock> tables;
  tables.reserve(np);
  for (const auto& p : grid.points) tables.push_back(sp.eval_jets(p, count));

  std::ofstream out(path);
  if (!out) throw ConfigError("export_spectrum: cannot open " + path);
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : grid.points) {
    nlohmann::json row = {p.chart};
    for (int i = 0; i < p.x.size(); ++i) row.push_back(p.x[i]);
    pts.push_back(row);
  }
  nlohmann::json header = {{"n", n},
                           {"grid", {{"points", pts}, {"weights", grid.weights}}},
                           {"tolerance", tolerance},
                           {"model", model_to_json(sp.model())}};
  out << header.dump() << '\n';
  for (int j = 0; j < count; ++j) {
    const auto& pr = sp.pair(j);
    std::vector<double> vals(np), grads(np * n), hess(np * n * n);
    for (std::size_t i = 0; i < np; ++i) {
      vals[i] = tables[i].values[j];
      for (int a = 0; a < n; ++a) grads[i * n + a] = tables[i].gradients(a, j);
      for (int a = 0; a < n; ++a)
        for (int c = 0; c < n; ++c) hess[(i * n + a) * n + c] = tables[i].hessians(a + n * c, j);
    }
    nlohmann::json rec = {{"j", j},           {"lambda", pr.lambda}, {"label", pr.label},
                          {"values", vals},   {"gradients", grads},  {"hessians", hess}};
    out << rec.dump() << '\n';
  }
}

namespace detail {

inline std::vector<double> number_array(const nlohmann::json& j, const char* key, std::size_t size,
                                        int line) {
  if (!j.contains(key) || !j[key].is_array())
    throw SchemaError("eigenpair file line " + std::to_string(line) + ": missing array '" + key + "'");
  const auto& a = j[key];
  if (a.size() != size)
    throw SchemaError("eigenpair file line " + std::to_string(line) + ": '" + key + "' has " +
                      std::to_string(a.size()) + " entries, expected " + std::to_string(size));
  std::vector<double> out;
  out.reserve(size);
  for (const auto& v : a) {
    if (!v.is_number())
      throw SchemaError("eigenpair file line " + std::to_string(line) + ": non-numeric entry in '" +
                        key + "'");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace detail

/// Load an eigenpair JSONL file. The header may carry "model"; otherwise the
/// caller supplies one. Orthonormality is checked against the header tolerance.
inline ExternalSpectrum load_external_spectrum(const std::string& path,
                                               const ManifoldModel* model_hint = nullptr) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open eigenpair file " + path);
  std::string line;
  int lineno = 0;
  auto parse = [&](const std::string& s) {
    try {
      return nlohmann::json::parse(s);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError("eigenpair file line " + std::to_string(lineno) + ": " + e.what());
    }
  };

  if (!std::getline(in, line)) throw SchemaError("eigenpair file is empty");
  ++lineno;
  const nlohmann::json header = parse(line);
  if (!header.is_object() || !header.contains("n") || !header["n"].is_number_integer() ||
      !header.contains("grid") || !header.contains("tolerance") || !header["tolerance"].is_number())
    throw SchemaError("eigenpair header must contain integer 'n', 'grid' and numeric 'tolerance'");
  const int n = header["n"].get<int>();
  const double tol = header["tolerance"].get<double>();

  ManifoldModel model = ManifoldModel::circle(1.0);
  if (header.contains("model")) {
    try {
      model = model_from_json(header["model"]);
    } catch (const ConfigError& e) {
      throw SchemaError(std::string("eigenpair header model: ") + e.what());
    }
  } else if (model_hint) {
    model = *model_hint;
  } else {
    throw SchemaError("eigenpair header has no 'model' and none was supplied");
  }
  if (model.dim() != n) throw SchemaError("eigenpair header 'n' does not match the model dimension");

  const auto& gj = header["grid"];
  if (!gj.is_object() || !gj.contains("points") || !gj["points"].is_array() ||
      !gj.contains("weights") || !gj["weights"].is_array() || gj["points"].size() != gj["weights"].size())
    throw SchemaError("eigenpair header 'grid' must hold matching 'points' and 'weights' arrays");
  SampleGrid grid;
  for (const auto& row : gj["points"]) {
    if (!row.is_array() || static_cast<int>(row.size()) != n + 1)
      throw SchemaError("grid point must be [chart, x_1..x_n]");
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x[i] = row[i + 1].get<double>();
    grid.points.emplace_back(row[0].get<int>(), x);
  }
  for (const auto& w : gj["weights"]) {
    const double v = w.get<double>();
    if (!(v > 0.0)) throw SchemaError("grid weights must be positive");
    grid.weights.push_back(v);
  }
  const std::size_t np = grid.size();

  std::vector<EigenPair> pairs;
  std::vector<std::vector<double>> vals, grads, hess;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const nlohmann::json rec = parse(line);
    if (!rec.contains("j") || !rec["j"].is_number_integer() || !rec.contains("lambda") ||
        !rec["lambda"].is_number())
      throw SchemaError("eigenpair file line " + std::to_string(lineno) + ": needs 'j' and 'lambda'");
    EigenPair pr;
    pr.j = rec["j"].get<int>();
    pr.lambda = rec["lambda"].get<double>();
    if (pr.j != static_cast<int>(pairs.size()))
      throw SchemaError("eigenpair file line " + std::to_string(lineno) + ": expected j = " +
                        std::to_string(pairs.size()));
    if (pr.lambda < 0.0)
      throw SchemaError("eigenpair file line " + std::to_string(lineno) + ": negative lambda");
    if (!pairs.empty() && pr.lambda < pairs.back().lambda)
      throw SchemaError("eigenpair file line " + std::to_string(lineno) +
                        ": lambda decreases (non-monotone spectrum)");
    if (rec.contains("label") && rec["label"].is_array())
      pr.label = rec["label"].get<std::vector<int>>();
    vals.push_back(detail::number_array(rec, "values", np, lineno));
    grads.push_back(detail::number_array(rec, "gradients", np * n, lineno));
    hess.push_back(detail::number_array(rec, "hessians", np * n * n, lineno));
    pairs.push_back(std::move(pr));
  }
  if (pairs.empty()) throw SchemaError("eigenpair file has no records");
  const int count = static_cast<int>(pairs.size());

  std::vector<JetBlock> tables(np);
  for (std::size_t i = 0; i < np; ++i) {
    JetBlock& b = tables[i];
    b.values.resize(count);
    b.gradients.resize(n, count);
    b.hessians.resize(n * n, count);
    for (int j = 0; j < count; ++j) {
      b.values[j] = vals[j][i];
      for (int a = 0; a < n; ++a) b.gradients(a, j) = grads[j][i * n + a];
      for (int a = 0; a < n; ++a)
        for (int c = 0; c < n; ++c) b.hessians(a + n * c, j) = hess[j][(i * n + a) * n + c];
    }
  }

  ExternalSpectrum sp(model, grid, std::move(pairs), std::move(tables), tol);
  const double err = orthonormality_error(sp, sp.grid(), count);
  if (err > tol)
    throw SchemaError("eigenpair file fails the orthonormality check: deviation " +
                      std::to_string(err) + " > tolerance " + std::to_string(tol));
  return sp;
}

/// The spectrum of the model with each metric block scaled by its factor,
/// in the same chart coordinates.
inline std::shared_ptr<SpectrumProvider> rescaled_provider(const SpectrumProvider& sp,
                                                           const std::vector<double>& factors) {
  for (double c : factors)
    if (!(c > 0.0)) throw DomainError("rescaled_provider: factors must be strictly positive");
  if (sp.backing() == Backing::Analytic)
    return std::make_shared<AnalyticSpectrum>(sp.model().rescaled(factors), sp.count());
  const auto& ext = dynamic_cast<const ExternalSpectrum&>(sp);
  for (double c : factors)
    if (c != factors.front())
      throw DomainError("rescaled_provider: external spectra support uniform rescaling only");
  return std::make_shared<ExternalSpectrum>(ext.rescaled(factors.front()));
}

}  // namespace hk
