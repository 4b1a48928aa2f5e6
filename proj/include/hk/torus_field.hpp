#pragma once

// Pseudo-spectral calculus on a flat torus sampled on a uniform N^n grid in
// angle coordinates. Derivatives are frame derivatives D_i = (1/s_i) d/dtheta_i
// with s_i = L_i / 2pi, so the metric is the identity in the frame and the
// Laplacian is sum_i D_i^2. Spectra are stored in FFTW's r2c layout and
// normalized so that they are the Fourier coefficients.

#include <complex>
#include <functional>
#include <memory>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <fftw3.h>

#include "hk/error.hpp"
#include "hk/geometry.hpp"

namespace hk {

/// Samples of a map M -> R^q: one row per grid point, one column per component.
using FieldRq = Eigen::MatrixXd;
using Spectrum = Eigen::MatrixXcd;

class TorusSpectral {
 public:
  TorusSpectral(const ManifoldModel& model, int N) : model_(model), n_(model.dim()), N_(N) {
    if (!model.is_flat()) throw DomainError("the spectral field backend supports flat tori and circles only");
    if (N < 4 || N % 2) throw DomainError("spectral grid size must be even and >= 4");
    M_ = 3 * N / 2;
    if (M_ % 2) ++M_;
    for (int i = 0; i < n_; ++i) scale_.push_back(model.lengths()[i] / (2.0 * std::numbers::pi));
    points_ = ipow(N_, n_);
    padded_points_ = ipow(M_, n_);
    modes_ = ipow(N_, n_ - 1) * (N_ / 2 + 1);
    padded_modes_ = ipow(M_, n_ - 1) * (M_ / 2 + 1);
    // integer wavenumbers of each stored mode
    wave_.resize(modes_, n_);
    nyquist_.resize(modes_, n_);
    for (int idx = 0; idx < modes_; ++idx) {
      int rest = idx;
      for (int d = n_ - 1; d >= 0; --d) {
        const int len = d == n_ - 1 ? N_ / 2 + 1 : N_;
        const int i = rest % len;
        rest /= len;
        wave_(idx, d) = (d == n_ - 1 || i <= N_ / 2) ? i : i - N_;
        nyquist_(idx, d) = i == N_ / 2;
      }
    }
  }

  const ManifoldModel& model() const { return model_; }
  int dim() const { return n_; }
  int N() const { return N_; }
  int padded_N() const { return M_; }
  int points() const { return points_; }
  int modes() const { return modes_; }
  const Eigen::MatrixXi& wavenumbers() const { return wave_; }

  /// Grid points in the order used by sample_grid(model, N).
  SampleGrid grid() const { return sample_grid(model_, N_); }

  Spectrum forward(const FieldRq& f) const { return forward_impl(f, N_, points_, modes_); }
  FieldRq backward(const Spectrum& s) const { return backward_impl(s, N_, points_, modes_); }

  /// Frame derivative D_i; the Nyquist mode of axis i is dropped.
  Spectrum derivative(const Spectrum& s, int i) const {
    Spectrum out(s.rows(), s.cols());
    for (int m = 0; m < modes_; ++m) {
      const std::complex<double> f = nyquist_(m, i) ? 0.0 : std::complex<double>(0.0, wave_(m, i) / scale_[i]);
      out.row(m) = f * s.row(m);
    }
    return out;
  }

  /// D_i D_j. Mixed derivatives drop the Nyquist modes of both axes.
  Spectrum derivative2(const Spectrum& s, int i, int j) const {
    Spectrum out(s.rows(), s.cols());
    for (int m = 0; m < modes_; ++m) {
      double f = -wave_(m, i) * double(wave_(m, j)) / (scale_[i] * scale_[j]);
      if (i != j && (nyquist_(m, i) || nyquist_(m, j))) f = 0.0;
      out.row(m) = f * s.row(m);
    }
    return out;
  }

  /// -|k|^2 in the metric, per mode.
  double symbol_laplacian(int m) const {
    double s = 0.0;
    for (int d = 0; d < n_; ++d) s += std::pow(wave_(m, d) / scale_[d], 2);
    return -s;
  }

  Spectrum laplacian(const Spectrum& s) const {
    Spectrum out(s.rows(), s.cols());
    for (int m = 0; m < modes_; ++m) out.row(m) = symbol_laplacian(m) * s.row(m);
    return out;
  }

  /// (Delta - e)^-1, componentwise.
  Spectrum resolvent(const Spectrum& s, double e) const {
    if (!(e > 0.0)) throw DomainError("resolvent: e must be > 0");
    Spectrum out(s.rows(), s.cols());
    for (int m = 0; m < modes_; ++m) out.row(m) = s.row(m) / (symbol_laplacian(m) - e);
    return out;
  }

  /// Physical samples on the padded M^n grid (Nyquist modes dropped).
  FieldRq backward_padded(const Spectrum& s) const {
    Spectrum big = Spectrum::Zero(padded_modes_, s.cols());
    for (int m = 0; m < modes_; ++m) {
      bool nyq = false;
      for (int d = 0; d < n_; ++d) nyq = nyq || nyquist_(m, d);
      if (!nyq) big.row(padded_index(m)) = s.row(m);
    }
    return backward_impl(big, M_, padded_points_, padded_modes_);
  }

  /// Spectrum on the base grid of samples given on the padded grid (truncation).
  Spectrum forward_from_padded(const FieldRq& f) const {
    const Spectrum big = forward_impl(f, M_, padded_points_, padded_modes_);
    Spectrum s(modes_, f.cols());
    for (int m = 0; m < modes_; ++m) {
      bool nyq = false;
      for (int d = 0; d < n_; ++d) nyq = nyq || nyquist_(m, d);
      s.row(m) = nyq ? Eigen::RowVectorXcd::Zero(f.cols()) : Eigen::RowVectorXcd(big.row(padded_index(m)));
    }
    return s;
  }

 private:
  static int ipow(int b, int e) {
    int r = 1;
    for (int i = 0; i < e; ++i) r *= b;
    return r;
  }

  int padded_index(int m) const {
    int idx = 0;
    for (int d = 0; d < n_; ++d) {
      const int len = d == n_ - 1 ? M_ / 2 + 1 : M_;
      const int k = wave_(m, d);
      idx = idx * len + (k >= 0 ? k : k + M_);
    }
    return idx;
  }

  std::vector<int> dims(int N) const { return std::vector<int>(n_, N); }

  Spectrum forward_impl(const FieldRq& f, int N, int points, int modes) const {
    if (f.rows() != points) throw DomainError("spectral transform: field has the wrong number of samples");
    const int c = static_cast<int>(f.cols());
    Spectrum out(modes, c);
    if (c == 0) return out;
    FieldRq in = f;  // FFTW may overwrite its input
    auto d = dims(N);
    fftw_plan plan = fftw_plan_many_dft_r2c(n_, d.data(), c, in.data(), nullptr, 1, points,
                                            reinterpret_cast<fftw_complex*>(out.data()), nullptr, 1, modes,
                                            FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!plan) throw DomainError("FFTW planning failed");
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    out /= static_cast<double>(points);
    return out;
  }

  FieldRq backward_impl(const Spectrum& s, int N, int points, int modes) const {
    if (s.rows() != modes) throw DomainError("spectral transform: spectrum has the wrong number of modes");
    const int c = static_cast<int>(s.cols());
    FieldRq out(points, c);
    if (c == 0) return out;
    Spectrum in = s;
    auto d = dims(N);
    fftw_plan plan = fftw_plan_many_dft_c2r(n_, d.data(), c, reinterpret_cast<fftw_complex*>(in.data()), nullptr,
                                            1, modes, out.data(), nullptr, 1, points,
                                            FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!plan) throw DomainError("FFTW planning failed");
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    return out;
  }

  ManifoldModel model_;
  int n_;
  int N_;
  int M_;
  std::vector<double> scale_;
  int points_ = 0, padded_points_ = 0, modes_ = 0, padded_modes_ = 0;
  Eigen::MatrixXi wave_;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> nyquist_;
};

}  // namespace hk
