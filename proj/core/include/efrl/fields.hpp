#pragma once

// Periodic-grid fields on the square [0, side)^2 and their spectral counterparts.
//
// Storage is row-major with x fastest: value(ix, iy) lives at iy * n + ix.
// Mode (j, i) of a SpectralField holds the coefficient of wavenumber
// (kx, ky) = 2*pi/side * (m(j), m(i)) where m(j) = j for j < n/2 and j - n otherwise.
//
// DFT convention (unnormalized forward, 1/n^2 on the inverse):
//   F(k) = sum_x f(x) exp(-i k.x),   f(x) = n^-2 sum_k F(k) exp(i k.x)
// so Parseval reads  sum_x |f|^2 dx^2 = side^2 / n^4 * sum_k |F|^2.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace efrl {

using Complex = std::complex<double>;

struct GridSpec {
  int n = 64;
  double side = 1.0;

  GridSpec() = default;
  GridSpec(int n_, double side_ = 1.0);

  [[nodiscard]] double dx() const { return side / n; }
  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(n) * n; }
  /// Signed mode index for storage index j in [0, n).
  [[nodiscard]] int mode(int j) const { return j < n / 2 ? j : j - n; }
  /// Angular wavenumber 2*pi*m/side of signed mode index m.
  [[nodiscard]] double wavenumber(int m) const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct RealField {
  GridSpec grid;
  std::vector<double> values;

  RealField() = default;
  explicit RealField(const GridSpec& g) : grid(g), values(g.size(), 0.0) {}

  double& operator()(int ix, int iy) { return values[static_cast<std::size_t>(iy) * grid.n + ix]; }
  double operator()(int ix, int iy) const { return values[static_cast<std::size_t>(iy) * grid.n + ix]; }

  [[nodiscard]] bool all_finite() const;
  [[nodiscard]] double max_abs() const;
};

struct VelocityField {
  GridSpec grid;
  RealField ux;
  RealField uy;

  VelocityField() = default;
  explicit VelocityField(const GridSpec& g) : grid(g), ux(g), uy(g) {}

  [[nodiscard]] bool all_finite() const { return ux.all_finite() && uy.all_finite(); }

  VelocityField& operator+=(const VelocityField& o);
  VelocityField& operator-=(const VelocityField& o);
  VelocityField& operator*=(double s);
};

VelocityField operator+(VelocityField a, const VelocityField& b);
VelocityField operator-(VelocityField a, const VelocityField& b);
VelocityField operator*(double s, VelocityField a);

struct SpectralField {
  GridSpec grid;
  std::vector<Complex> coeffs;

  SpectralField() = default;
  explicit SpectralField(const GridSpec& g) : grid(g), coeffs(g.size(), Complex{0.0, 0.0}) {}

  Complex& operator()(int j, int i) { return coeffs[static_cast<std::size_t>(i) * grid.n + j]; }
  Complex operator()(int j, int i) const { return coeffs[static_cast<std::size_t>(i) * grid.n + j]; }
};

/// Both velocity components in spectral space.
struct SpectralVelocity {
  SpectralField x;
  SpectralField y;

  SpectralVelocity() = default;
  explicit SpectralVelocity(const GridSpec& g) : x(g), y(g) {}
  [[nodiscard]] const GridSpec& grid() const { return x.grid; }
};

// Transforms. Throws BlowUpError on non-finite input.
SpectralField dft_forward(const RealField& f);
RealField dft_inverse(const SpectralField& F);
SpectralVelocity dft_forward(const VelocityField& u);
VelocityField dft_inverse(const SpectralVelocity& U);

/// Sets F(k) = conj(F(-k)) by averaging each conjugate pair; self-conjugate
/// modes keep only their real part.
void enforce_hermitian(SpectralField& F);
/// Largest |F(k) - conj(F(-k))| relative to max |F|.
double hermitian_defect(const SpectralField& F);

/// Per-mode projector I - k k^T / |k|^2; the k = 0 mode is left untouched and
/// Nyquist modes are zeroed.
void leray_project_inplace(SpectralVelocity& U);
VelocityField leray_project(const VelocityField& u);

/// Zeroes every mode with |m| > n/3 in either index.
SpectralField dealias(const SpectralField& F);
void dealias_inplace(SpectralField& F);

/// Spectral derivatives. The Nyquist mode of an odd derivative is dropped.
SpectralField ddx(const SpectralField& F);
SpectralField ddy(const SpectralField& F);

RealField divergence(const VelocityField& u);
RealField vorticity(const VelocityField& u);
SpectralField vorticity_hat(const SpectralVelocity& U);
/// L2 norm over the domain of the full velocity gradient tensor.
double grad_norm(const VelocityField& u);
double grad_norm(const SpectralVelocity& U);

/// max |div u| over grid points, evaluated spectrally.
double max_divergence(const VelocityField& u);
/// RMS velocity magnitude sqrt(mean |u|^2).
double rms_velocity(const VelocityField& u);
/// L2 norm over the domain, sqrt(int |u|^2 dx).
double l2_norm(const VelocityField& u);
double l2_norm(const SpectralVelocity& U);

}  // namespace efrl
