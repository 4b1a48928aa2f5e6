#pragma once

// Second-order forward-mode jets: value, gradient and Hessian of a scalar
// function of N variables. Used to differentiate the closed-form
// eigenfunctions through chart maps without symbolic algebra.

#include <cmath>

#include <Eigen/Core>

namespace hk {

template <int N>
struct Jet {
  using Vec = Eigen::Matrix<double, N, 1>;
  using Mat = Eigen::Matrix<double, N, N>;

  double v = 0.0;
  Vec g = Vec::Zero();
  Mat h = Mat::Zero();

  Jet() = default;
  explicit Jet(double value) : v(value) {}
  Jet(double value, const Vec& grad, const Mat& hess) : v(value), g(grad), h(hess) {}

  /// The coordinate function x_i.
  static Jet variable(double value, int i) {
    Jet j(value);
    j.g[i] = 1.0;
    return j;
  }

  Jet& operator+=(const Jet& o) {
    v += o.v;
    g += o.g;
    h += o.h;
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    v -= o.v;
    g -= o.g;
    h -= o.h;
    return *this;
  }
  Jet& operator*=(double s) {
    v *= s;
    g *= s;
    h *= s;
    return *this;
  }
};

template <int N>
inline Jet<N> operator+(Jet<N> a, const Jet<N>& b) {
  return a += b;
}
template <int N>
inline Jet<N> operator-(Jet<N> a, const Jet<N>& b) {
  return a -= b;
}
template <int N>
inline Jet<N> operator-(Jet<N> a) {
  return a *= -1.0;
}
template <int N>
inline Jet<N> operator*(Jet<N> a, double s) {
  return a *= s;
}
template <int N>
inline Jet<N> operator*(double s, Jet<N> a) {
  return a *= s;
}
template <int N>
inline Jet<N> operator+(Jet<N> a, double s) {
  a.v += s;
  return a;
}

template <int N>
inline Jet<N> operator*(const Jet<N>& a, const Jet<N>& b) {
  Jet<N> r;
  r.v = a.v * b.v;
  r.g = a.v * b.g + b.v * a.g;
  r.h = a.v * b.h + b.v * a.h + a.g * b.g.transpose() + b.g * a.g.transpose();
  return r;
}

// Chain rule for a scalar function with derivatives (f0, f1, f2) at a.v.
template <int N>
inline Jet<N> compose(const Jet<N>& a, double f0, double f1, double f2) {
  Jet<N> r;
  r.v = f0;
  r.g = f1 * a.g;
  r.h = f1 * a.h + f2 * (a.g * a.g.transpose());
  return r;
}

template <int N>
inline Jet<N> sin(const Jet<N>& a) {
  const double s = std::sin(a.v), c = std::cos(a.v);
  return compose(a, s, c, -s);
}

template <int N>
inline Jet<N> cos(const Jet<N>& a) {
  const double s = std::sin(a.v), c = std::cos(a.v);
  return compose(a, c, -s, -c);
}

template <int N>
inline Jet<N> sqrt(const Jet<N>& a) {
  const double r = std::sqrt(a.v);
  return compose(a, r, 0.5 / r, -0.25 / (r * a.v));
}

}  // namespace hk
