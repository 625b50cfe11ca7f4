#include "efrl/fields.hpp"

#include "efrl/errors.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>

namespace efrl {

GridSpec::GridSpec(int n_, double side_) : n(n_), side(side_) {
  if (n < 8 || !std::has_single_bit(static_cast<unsigned>(n))) {
    throw ShapeError("grid size must be a power of two >= 8, got " + std::to_string(n));
  }
  if (!(side > 0.0) || !std::isfinite(side)) {
    throw ShapeError("grid side must be positive");
  }
}

double GridSpec::wavenumber(int m) const { return 2.0 * std::numbers::pi * m / side; }

bool RealField::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

double RealField::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

namespace {

void require_same_grid(const GridSpec& a, const GridSpec& b) {
  if (!(a == b)) throw ShapeError("grid mismatch");
}

// FFTW planning is not thread-safe, execution with the new-array interface is.
class PlanCache {
public:
  struct Plans {
    fftw_plan forward;
    fftw_plan backward;
  };

  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  Plans get(int n) {
    std::lock_guard lock(mutex_);
    if (auto it = plans_.find(n); it != plans_.end()) return it->second;
    std::vector<Complex> a(static_cast<std::size_t>(n) * n), b(a.size());
    auto* in = reinterpret_cast<fftw_complex*>(a.data());
    auto* out = reinterpret_cast<fftw_complex*>(b.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    Plans p{fftw_plan_dft_2d(n, n, in, out, FFTW_FORWARD, flags),
            fftw_plan_dft_2d(n, n, in, out, FFTW_BACKWARD, flags)};
    plans_.emplace(n, p);
    return p;
  }

  ~PlanCache() {
    for (auto& [n, p] : plans_) {
      fftw_destroy_plan(p.forward);
      fftw_destroy_plan(p.backward);
    }
  }

private:
  std::mutex mutex_;
  std::map<int, Plans> plans_;
};

void execute(fftw_plan plan, const std::vector<Complex>& in, std::vector<Complex>& out) {
  // Out-of-place c2c transforms leave the input intact.
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

}  // namespace

SpectralField dft_forward(const RealField& f) {
  if (!f.all_finite()) throw BlowUpError("non-finite value in field passed to dft_forward");
  const auto plans = PlanCache::instance().get(f.grid.n);
  std::vector<Complex> in(f.values.begin(), f.values.end());
  SpectralField F(f.grid);
  execute(plans.forward, in, F.coeffs);
  return F;
}

RealField dft_inverse(const SpectralField& F) {
  for (const auto& c : F.coeffs) {
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) {
      throw BlowUpError("non-finite coefficient passed to dft_inverse");
    }
  }
  const auto plans = PlanCache::instance().get(F.grid.n);
  std::vector<Complex> out(F.coeffs.size());
  execute(plans.backward, F.coeffs, out);
  RealField f(F.grid);
  const double scale = 1.0 / static_cast<double>(F.grid.size());
  for (std::size_t k = 0; k < out.size(); ++k) f.values[k] = out[k].real() * scale;
  return f;
}

SpectralVelocity dft_forward(const VelocityField& u) {
  SpectralVelocity U;
  U.x = dft_forward(u.ux);
  U.y = dft_forward(u.uy);
  return U;
}

VelocityField dft_inverse(const SpectralVelocity& U) {
  VelocityField u;
  u.grid = U.grid();
  u.ux = dft_inverse(U.x);
  u.uy = dft_inverse(U.y);
  return u;
}

void enforce_hermitian(SpectralField& F) {
  const int n = F.grid.n;
  for (int i = 0; i < n; ++i) {
    const int ci = (n - i) % n;
    for (int j = 0; j < n; ++j) {
      const int cj = (n - j) % n;
      const std::size_t a = static_cast<std::size_t>(i) * n + j;
      const std::size_t b = static_cast<std::size_t>(ci) * n + cj;
      if (b < a) continue;
      if (a == b) {
        F.coeffs[a] = {F.coeffs[a].real(), 0.0};
      } else {
        const Complex avg = 0.5 * (F.coeffs[a] + std::conj(F.coeffs[b]));
        F.coeffs[a] = avg;
        F.coeffs[b] = std::conj(avg);
      }
    }
  }
}

double hermitian_defect(const SpectralField& F) {
  const int n = F.grid.n;
  double defect = 0.0, scale = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Complex a = F(j, i);
      const Complex b = F((n - j) % n, (n - i) % n);
      defect = std::max(defect, std::abs(a - std::conj(b)));
      scale = std::max(scale, std::abs(a));
    }
  }
  return scale > 0.0 ? defect / scale : 0.0;
}

void leray_project_inplace(SpectralVelocity& U) {
  require_same_grid(U.x.grid, U.y.grid);
  const GridSpec& g = U.grid();
  const int nyquist = g.n / 2;
  for (int i = 0; i < g.n; ++i) {
    const double ky = g.wavenumber(g.mode(i));
    for (int j = 0; j < g.n; ++j) {
      Complex& ax = U.x(j, i);
      Complex& ay = U.y(j, i);
      // Nyquist modes have no conjugate partner with the opposite wavevector,
      // so no real solenoidal field lives there.
      if (i == nyquist || j == nyquist) {
        ax = 0.0;
        ay = 0.0;
        continue;
      }
      const double kx = g.wavenumber(g.mode(j));
      const double k2 = kx * kx + ky * ky;
      if (k2 == 0.0) continue;
      const Complex kdotu = (kx * ax + ky * ay) / k2;
      ax -= kx * kdotu;
      ay -= ky * kdotu;
    }
  }
}

VelocityField leray_project(const VelocityField& u) {
  auto U = dft_forward(u);
  leray_project_inplace(U);
  return dft_inverse(U);
}

void dealias_inplace(SpectralField& F) {
  const GridSpec& g = F.grid;
  for (int i = 0; i < g.n; ++i) {
    const bool cut_y = 3 * std::abs(g.mode(i)) > g.n;
    for (int j = 0; j < g.n; ++j) {
      if (cut_y || 3 * std::abs(g.mode(j)) > g.n) F(j, i) = 0.0;
    }
  }
}

SpectralField dealias(const SpectralField& F) {
  SpectralField out = F;
  dealias_inplace(out);
  return out;
}

namespace {

// i * k_axis, with the Nyquist row/column dropped.
SpectralField differentiate(const SpectralField& F, bool along_x) {
  const GridSpec& g = F.grid;
  SpectralField out(g);
  const int nyq = g.n / 2;
  for (int i = 0; i < g.n; ++i) {
    for (int j = 0; j < g.n; ++j) {
      const int idx = along_x ? j : i;
      if (idx == nyq) continue;
      const double k = g.wavenumber(g.mode(idx));
      out(j, i) = Complex{0.0, k} * F(j, i);
    }
  }
  return out;
}

}  // namespace

SpectralField ddx(const SpectralField& F) { return differentiate(F, true); }
SpectralField ddy(const SpectralField& F) { return differentiate(F, false); }

RealField divergence(const VelocityField& u) {
  const auto U = dft_forward(u);
  SpectralField d = ddx(U.x);
  const SpectralField dy = ddy(U.y);
  for (std::size_t k = 0; k < d.coeffs.size(); ++k) d.coeffs[k] += dy.coeffs[k];
  return dft_inverse(d);
}

SpectralField vorticity_hat(const SpectralVelocity& U) {
  SpectralField w = ddx(U.y);
  const SpectralField duxdy = ddy(U.x);
  for (std::size_t k = 0; k < w.coeffs.size(); ++k) w.coeffs[k] -= duxdy.coeffs[k];
  return w;
}

RealField vorticity(const VelocityField& u) { return dft_inverse(vorticity_hat(dft_forward(u))); }

double grad_norm(const SpectralVelocity& U) {
  const GridSpec& g = U.grid();
  double sum = 0.0;
  for (int i = 0; i < g.n; ++i) {
    const double ky = g.wavenumber(g.mode(i));
    for (int j = 0; j < g.n; ++j) {
      const double kx = g.wavenumber(g.mode(j));
      sum += (kx * kx + ky * ky) * (std::norm(U.x(j, i)) + std::norm(U.y(j, i)));
    }
  }
  const double n2 = static_cast<double>(g.size());
  return std::sqrt(sum * g.side * g.side / (n2 * n2));
}

double grad_norm(const VelocityField& u) { return grad_norm(dft_forward(u)); }

double max_divergence(const VelocityField& u) { return divergence(u).max_abs(); }

double l2_norm(const VelocityField& u) {
  double sum = 0.0;
  for (std::size_t k = 0; k < u.ux.values.size(); ++k) {
    sum += u.ux.values[k] * u.ux.values[k] + u.uy.values[k] * u.uy.values[k];
  }
  const double dx = u.grid.dx();
  return std::sqrt(sum * dx * dx);
}

double l2_norm(const SpectralVelocity& U) {
  double sum = 0.0;
  for (std::size_t k = 0; k < U.x.coeffs.size(); ++k) {
    sum += std::norm(U.x.coeffs[k]) + std::norm(U.y.coeffs[k]);
  }
  const GridSpec& g = U.grid();
  const double n2 = static_cast<double>(g.size());
  return std::sqrt(sum * g.side * g.side / (n2 * n2));
}

double rms_velocity(const VelocityField& u) {
  return l2_norm(u) / u.grid.side;
}

VelocityField& VelocityField::operator+=(const VelocityField& o) {
  require_same_grid(grid, o.grid);
  for (std::size_t k = 0; k < ux.values.size(); ++k) {
    ux.values[k] += o.ux.values[k];
    uy.values[k] += o.uy.values[k];
  }
  return *this;
}

VelocityField& VelocityField::operator-=(const VelocityField& o) {
  require_same_grid(grid, o.grid);
  for (std::size_t k = 0; k < ux.values.size(); ++k) {
    ux.values[k] -= o.ux.values[k];
    uy.values[k] -= o.uy.values[k];
  }
  return *this;
}

VelocityField& VelocityField::operator*=(double s) {
  for (auto& v : ux.values) v *= s;
  for (auto& v : uy.values) v *= s;
  return *this;
}

VelocityField operator+(VelocityField a, const VelocityField& b) { return a += b; }
VelocityField operator-(VelocityField a, const VelocityField& b) { return a -= b; }
VelocityField operator*(double s, VelocityField a) { return a *= s; }

}  // namespace efrl
