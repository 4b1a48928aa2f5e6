#pragma once

// Closed-form testbed manifolds: flat tori, circles, the round 2-sphere and
// the product S^2 x S^1. Every periodic direction is an angle in [0, 2pi)
// with metric coefficient (L / 2pi)^2, so rescaling a factor changes the
// metric but never the chart.

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hk/error.hpp"

namespace hk {

enum class ManifoldKind { FlatTorus, Circle, RoundSphere2, ProductSphereCircle };

inline std::string kind_name(ManifoldKind k) {
  switch (k) {
    case ManifoldKind::FlatTorus: return "flat_torus";
    case ManifoldKind::Circle: return "circle";
    case ManifoldKind::RoundSphere2: return "round_sphere";
    case ManifoldKind::ProductSphereCircle: return "product_sphere_circle";
  }
  return "unknown";
}

/// A point in one of the model's charts. The sphere (and the sphere factor of
/// the product) has two polar charts: chart 0 with poles on the z-axis, chart 1
/// with poles on the x-axis.
struct ChartPoint {
  int chart = 0;
  Eigen::VectorXd x;

  ChartPoint() = default;
  ChartPoint(int c, Eigen::VectorXd coords) : chart(c), x(std::move(coords)) {}
  explicit ChartPoint(Eigen::VectorXd coords) : x(std::move(coords)) {}
};

class ManifoldModel {
 public:
  static ManifoldModel flat_torus(std::vector<double> periods) {
    ManifoldModel m;
    m.kind_ = ManifoldKind::FlatTorus;
    m.lengths_ = std::move(periods);
    m.dim_ = static_cast<int>(m.lengths_.size());
    m.validate();
    return m;
  }

  static ManifoldModel circle(double length) {
    ManifoldModel m;
    m.kind_ = ManifoldKind::Circle;
    m.lengths_ = {length};
    m.dim_ = 1;
    m.validate();
    return m;
  }

  static ManifoldModel round_sphere(double radius) {
    ManifoldModel m;
    m.kind_ = ManifoldKind::RoundSphere2;
    m.radius_ = radius;
    m.dim_ = 2;
    m.validate();
    return m;
  }

  static ManifoldModel product_sphere_circle(double radius, double length) {
    ManifoldModel m;
    m.kind_ = ManifoldKind::ProductSphereCircle;
    m.radius_ = radius;
    m.lengths_ = {length};
    m.dim_ = 3;
    m.validate();
    return m;
  }

  ManifoldKind kind() const { return kind_; }
  int dim() const { return dim_; }

  /// Torus periods, or the single circle length (circle and product).
  const std::vector<double>& lengths() const { return lengths_; }
  double sphere_radius() const { return radius_; }
  double circle_length() const { return lengths_.empty() ? 0.0 : lengths_.back(); }

  bool is_flat() const {
    return kind_ == ManifoldKind::FlatTorus || kind_ == ManifoldKind::Circle;
  }
  bool has_sphere_factor() const {
    return kind_ == ManifoldKind::RoundSphere2 || kind_ == ManifoldKind::ProductSphereCircle;
  }

  double volume() const {
    constexpr double pi = std::numbers::pi;
    double v = 1.0;
    for (double L : lengths_) v *= L;
    if (has_sphere_factor()) v *= 4.0 * pi * radius_ * radius_;
    return v;
  }

  double injectivity_radius() const {
    constexpr double pi = std::numbers::pi;
    double r = std::numeric_limits<double>::infinity();
    for (double L : lengths_) r = std::min(r, 0.5 * L);
    if (has_sphere_factor()) r = std::min(r, pi * radius_);
    return r;
  }

  /// Number of independent scale blocks: one per torus axis, one for the
  /// circle, one for the sphere, two for the product (sphere, circle).
  int block_count() const {
    switch (kind_) {
      case ManifoldKind::FlatTorus: return dim_;
      case ManifoldKind::ProductSphereCircle: return 2;
      default: return 1;
    }
  }

  /// Metric rescaled by a constant factor per block (g_block -> c * g_block).
  /// A single factor is applied to every block.
  ManifoldModel rescaled(const std::vector<double>& factors) const {
    const int blocks = block_count();
    if (factors.size() != 1 && static_cast<int>(factors.size()) != blocks)
      throw DomainError("rescaled: expected 1 or " + std::to_string(blocks) + " factors");
    for (double c : factors)
      if (!(c > 0.0)) throw DomainError("rescaled: scale factors must be strictly positive");
    auto factor = [&](int b) { return factors.size() == 1 ? factors[0] : factors[b]; };
    ManifoldModel m = *this;
    switch (kind_) {
      case ManifoldKind::FlatTorus:
        for (int i = 0; i < dim_; ++i) m.lengths_[i] *= std::sqrt(factor(i));
        break;
      case ManifoldKind::Circle: m.lengths_[0] *= std::sqrt(factor(0)); break;
      case ManifoldKind::RoundSphere2: m.radius_ *= std::sqrt(factor(0)); break;
      case ManifoldKind::ProductSphereCircle:
        m.radius_ *= std::sqrt(factor(0));
        m.lengths_[0] *= std::sqrt(factor(1));
        break;
    }
    return m;
  }

  /// Block index of each coordinate direction.
  std::vector<int> coordinate_blocks() const {
    switch (kind_) {
      case ManifoldKind::FlatTorus: {
        std::vector<int> b(dim_);
        for (int i = 0; i < dim_; ++i) b[i] = i;
        return b;
      }
      case ManifoldKind::Circle: return {0};
      case ManifoldKind::RoundSphere2: return {0, 0};
      case ManifoldKind::ProductSphereCircle: return {0, 0, 1};
    }
    return {};
  }

 private:
  ManifoldModel() = default;

  void validate() const {
    if (dim_ <= 0) throw DomainError("manifold dimension must be positive");
    for (double L : lengths_)
      if (!(L > 0.0)) throw DomainError("periods and lengths must be strictly positive");
    if (has_sphere_factor() && !(radius_ > 0.0))
      throw DomainError("sphere radius must be strictly positive");
  }

  ManifoldKind kind_ = ManifoldKind::Circle;
  int dim_ = 1;
  std::vector<double> lengths_;
  double radius_ = 0.0;
};

/// Riemann tensor R_{abc}^d with R(X,Y)Z = [nabla_X, nabla_Y]Z - nabla_{[X,Y]}Z,
/// so that Ric_bc = R_{abc}^a.
class Riemann {
 public:
  Riemann() = default;
  explicit Riemann(int n) : n_(n), data_(static_cast<std::size_t>(n) * n * n * n, 0.0) {}

  int dim() const { return n_; }
  double& operator()(int a, int b, int c, int d) { return data_[index(a, b, c, d)]; }
  double operator()(int a, int b, int c, int d) const { return data_[index(a, b, c, d)]; }

 private:
  std::size_t index(int a, int b, int c, int d) const {
    return ((static_cast<std::size_t>(a) * n_ + b) * n_ + c) * n_ + d;
  }
  int n_ = 0;
  std::vector<double> data_;
};

struct MetricAtPoint {
  Eigen::MatrixXd g;
  Eigen::MatrixXd g_inv;
  /// christoffel[k](i, j) = Gamma^k_ij
  std::vector<Eigen::MatrixXd> christoffel;
  Eigen::MatrixXd ricci;
  double scalar = 0.0;
  Riemann riemann;
  // Every testbed is locally symmetric, so the covariant derivative of the
  // curvature vanishes; kept explicit for the r-term assembly.
  bool curvature_parallel = true;
};

namespace detail {

inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a < 0) a += two_pi;
  return a;
}

inline void check_point(const ManifoldModel& model, const ChartPoint& p) {
  if (p.x.size() != model.dim())
    throw DomainError("chart point has " + std::to_string(p.x.size()) +
                      " coordinates, model dimension is " + std::to_string(model.dim()));
  for (int i = 0; i < p.x.size(); ++i)
    if (!std::isfinite(p.x[i])) throw DomainError("chart point has a non-finite coordinate");
  if (model.has_sphere_factor()) {
    if (p.chart != 0 && p.chart != 1) throw DomainError("sphere charts are 0 and 1");
    const double theta = p.x[0];
    if (!(theta > 0.0 && theta < std::numbers::pi))
      throw DomainError("polar angle outside the open chart domain (0, pi)");
  } else if (p.chart != 0) {
    throw DomainError("periodic models have a single chart");
  }
}

}  // namespace detail

/// Unit-sphere position of the sphere coordinates (theta, phi) in a chart.
inline Eigen::Vector3d sphere_position(int chart, double theta, double phi) {
  const double st = std::sin(theta), ct = std::cos(theta);
  const double sp = std::sin(phi), cp = std::cos(phi);
  if (chart == 0) return {st * cp, st * sp, ct};
  return {ct, st * cp, st * sp};
}

/// Inverse of sphere_position for the given chart.
inline std::pair<double, double> sphere_coordinates(int chart, const Eigen::Vector3d& p) {
  Eigen::Vector3d q = chart == 0 ? p : Eigen::Vector3d(p[1], p[2], p[0]);
  const double theta = std::atan2(std::hypot(q[0], q[1]), q[2]);
  const double phi = detail::wrap_angle(std::atan2(q[1], q[0]));
  return {theta, phi};
}

/// Re-express a point in the chart that keeps it furthest from that chart's poles.
inline ChartPoint rechart(const ManifoldModel& model, const ChartPoint& p) {
  if (!model.has_sphere_factor()) return p;
  detail::check_point(model, p);
  if (std::sin(p.x[0]) >= std::sqrt(0.5)) return p;
  const Eigen::Vector3d pos = sphere_position(p.chart, p.x[0], p.x[1]);
  const int other = 1 - p.chart;
  auto [theta, phi] = sphere_coordinates(other, pos);
  ChartPoint q = p;
  q.chart = other;
  q.x[0] = theta;
  q.x[1] = phi;
  return q;
}

inline MetricAtPoint metric_at(const ManifoldModel& model, const ChartPoint& p) {
  detail::check_point(model, p);
  const int n = model.dim();
  MetricAtPoint m;
  m.g = Eigen::MatrixXd::Zero(n, n);
  m.christoffel.assign(n, Eigen::MatrixXd::Zero(n, n));
  m.ricci = Eigen::MatrixXd::Zero(n, n);
  m.riemann = Riemann(n);

  constexpr double two_pi = 2.0 * std::numbers::pi;
  int offset = 0;
  if (model.has_sphere_factor()) {
    const double R = model.sphere_radius();
    const double st = std::sin(p.x[0]), ct = std::cos(p.x[0]);
    m.g(0, 0) = R * R;
    m.g(1, 1) = R * R * st * st;
    m.christoffel[0](1, 1) = -st * ct;
    m.christoffel[1](0, 1) = ct / st;
    m.christoffel[1](1, 0) = ct / st;
    const double K = 1.0 / (R * R);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 2; ++c)
          for (int d = 0; d < 2; ++d)
            m.riemann(a, b, c, d) =
                K * (m.g(b, c) * (a == d ? 1.0 : 0.0) - m.g(a, c) * (b == d ? 1.0 : 0.0));
    m.ricci.block(0, 0, 2, 2) = K * m.g.block(0, 0, 2, 2);
    m.scalar = 2.0 * K;
    offset = 2;
  }
  for (std::size_t i = 0; i < model.lengths().size(); ++i) {
    const double s = model.lengths()[i] / two_pi;
    m.g(offset + i, offset + i) = s * s;
  }
  m.g_inv = m.g.inverse();
  return m;
}

/// Columns are an orthonormal frame e_a expressed in coordinate components.
inline Eigen::MatrixXd orthonormal_frame(const ManifoldModel& model, const ChartPoint& p) {
  const MetricAtPoint m = metric_at(model, p);
  // Every testbed metric is diagonal in its charts.
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(model.dim(), model.dim());
  for (int i = 0; i < model.dim(); ++i) e(i, i) = 1.0 / std::sqrt(m.g(i, i));
  return e;
}

/// Coordinate components of a covariant 2-tensor -> orthonormal frame components.
inline Eigen::MatrixXd to_frame(const Eigen::MatrixXd& frame, const Eigen::MatrixXd& tensor) {
  return frame.transpose() * tensor * frame;
}

/// First-order heat-kernel coefficient A1 = (1/3)(S g / 2 - Ric), coordinate components.
inline Eigen::MatrixXd a1_tensor(const ManifoldModel& model, const ChartPoint& p) {
  const MetricAtPoint m = metric_at(model, p);
  return (0.5 * m.scalar * m.g - m.ricci) / 3.0;
}

struct SampleGrid {
  std::vector<ChartPoint> points;
  std::vector<double> weights;

  std::size_t size() const { return points.size(); }
  double total_weight() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }
};

/// Gauss-Legendre nodes and weights on [-1, 1], ascending nodes.
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int count) {
  std::vector<double> x(count), w(count);
  for (int i = 0; i < (count + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (count + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= count; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (count == 1) p0 = 1.0, p1 = z;
      dp = count * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= count; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = count * (z * p1 - p0) / (z * z - 1.0);
    }
    x[i] = -z;
    x[count - 1 - i] = z;
    w[i] = w[count - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return {x, w};
}

/// Quadrature grid with positive weights summing to the model volume.
/// Periodic directions: `resolution` uniform nodes. Sphere: `resolution`
/// Gauss-Legendre nodes in cos(theta) times 2*resolution nodes in phi.
inline SampleGrid sample_grid(const ManifoldModel& model, int resolution) {
  if (resolution < 4) throw DomainError("sample_grid: resolution must be at least 4");
  constexpr double two_pi = 2.0 * std::numbers::pi;

  // Factor grids as (coordinate lists, weights).
  std::vector<std::vector<double>> coords;  // one entry per factor point
  std::vector<double> weights;
  coords.push_back({});
  weights.push_back(1.0);

  auto extend = [&](const std::vector<std::vector<double>>& fc, const std::vector<double>& fw) {
    std::vector<std::vector<double>> nc;
    std::vector<double> nw;
    nc.reserve(coords.size() * fc.size());
    for (std::size_t i = 0; i < coords.size(); ++i)
      for (std::size_t j = 0; j < fc.size(); ++j) {
        auto c = coords[i];
        c.insert(c.end(), fc[j].begin(), fc[j].end());
        nc.push_back(std::move(c));
        nw.push_back(weights[i] * fw[j]);
      }
    coords = std::move(nc);
    weights = std::move(nw);
  };

  if (model.has_sphere_factor()) {
    const double R = model.sphere_radius();
    auto [z, wz] = gauss_legendre(resolution);
    const int nphi = 2 * resolution;
    std::vector<std::vector<double>> fc;
    std::vector<double> fw;
    for (int i = resolution - 1; i >= 0; --i)  // ascending theta
      for (int j = 0; j < nphi; ++j) {
        fc.push_back({std::acos(z[i]), two_pi * j / nphi});
        fw.push_back(R * R * wz[i] * two_pi / nphi);
      }
    extend(fc, fw);
  }
  for (double L : model.lengths()) {
    std::vector<std::vector<double>> fc;
    std::vector<double> fw;
    for (int j = 0; j < resolution; ++j) {
      fc.push_back({two_pi * j / resolution});
      fw.push_back(L / resolution);
    }
    extend(fc, fw);
  }

  SampleGrid grid;
  grid.weights = std::move(weights);
  grid.points.reserve(coords.size());
  for (auto& c : coords)
    grid.points.emplace_back(0, Eigen::Map<Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size())));
  return grid;
}

/// Geodesic distance (product metric: Pythagorean combination of factors).
inline double geodesic_distance(const ManifoldModel& model, const ChartPoint& a, const ChartPoint& b) {
  constexpr double pi = std::numbers::pi;
  constexpr double two_pi = 2.0 * pi;
  double d2 = 0.0;
  int offset = 0;
  if (model.has_sphere_factor()) {
    const Eigen::Vector3d pa = sphere_position(a.chart, a.x[0], a.x[1]);
    const Eigen::Vector3d pb = sphere_position(b.chart, b.x[0], b.x[1]);
    const double ang = std::atan2(pa.cross(pb).norm(), pa.dot(pb));
    d2 += std::pow(model.sphere_radius() * ang, 2);
    offset = 2;
  }
  for (std::size_t i = 0; i < model.lengths().size(); ++i) {
    double d = std::abs(detail::wrap_angle(a.x[offset + i] - b.x[offset + i]));
    d = std::min(d, two_pi - d);
    d2 += std::pow(d * model.lengths()[i] / two_pi, 2);
  }
  return std::sqrt(d2);
}

}  // namespace hk
