#include "efrl/solver.hpp"

#include "efrl/errors.hpp"
#include "efrl/metrics.hpp"

#include <cassert>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

namespace efrl {

FluidParams FluidParams::from_reynolds(double re, double dt) {
  FluidParams p;
  p.re = re;
  p.nu = 1.0 / re;
  p.dt = dt;
  p.validate();
  return p;
}

void FluidParams::validate() const {
  if (!(nu > 0.0) || !(dt > 0.0) || !(re > 0.0)) {
    throw ConfigError("fluid parameters require nu > 0, dt > 0, re > 0");
  }
}

SolverState SolverState::initial(const VelocityField& u0, double t0, std::int64_t step0) {
  SolverState s;
  s.u = u0;
  s.t = t0;
  s.step_index = step0;
  s.reference_energy = kinetic_energy(u0);
  return s;
}

SpectralVelocity advection_hat(const SpectralVelocity& U) {
  SpectralVelocity Ud = U;
  dealias_inplace(Ud.x);
  dealias_inplace(Ud.y);
  const VelocityField ud = dft_inverse(Ud);
  const RealField omega = dft_inverse(vorticity_hat(Ud));

  // (u . grad) u = grad(|u|^2 / 2) + omega z x u; the gradient part is removed by P.
  VelocityField lamb(U.grid());
  for (std::size_t k = 0; k < omega.values.size(); ++k) {
    lamb.ux.values[k] = -omega.values[k] * ud.uy.values[k];
    lamb.uy.values[k] = omega.values[k] * ud.ux.values[k];
  }
  SpectralVelocity N = dft_forward(lamb);
  enforce_hermitian(N.x);
  enforce_hermitian(N.y);
  dealias_inplace(N.x);
  dealias_inplace(N.y);
  leray_project_inplace(N);
  return N;
}

namespace {

SpectralVelocity evolve_hat(const VelocityField& u, const FluidParams& p) {
  SpectralVelocity U = dft_forward(u);
  const SpectralVelocity N = advection_hat(U);
  leray_project_inplace(U);
  const GridSpec& g = U.grid();
  for (int i = 0; i < g.n; ++i) {
    const double ky = g.wavenumber(g.mode(i));
    for (int j = 0; j < g.n; ++j) {
      const double kx = g.wavenumber(g.mode(j));
      const double damp = 1.0 / (1.0 + p.nu * p.dt * (kx * kx + ky * ky));
      U.x(j, i) = (U.x(j, i) - p.dt * N.x(j, i)) * damp;
      U.y(j, i) = (U.y(j, i) - p.dt * N.y(j, i)) * damp;
    }
  }
  assert(hermitian_defect(U.x) < 1e-12 && hermitian_defect(U.y) < 1e-12);
  return U;
}

// out = a * x + b * y, per component.
void combine(SpectralVelocity& out, const std::vector<double>& a, const SpectralVelocity& x,
             const std::vector<double>& b, const SpectralVelocity& y) {
  for (std::size_t k = 0; k < a.size(); ++k) {
    out.x.coeffs[k] = a[k] * x.x.coeffs[k] + b[k] * y.x.coeffs[k];
    out.y.coeffs[k] = a[k] * x.y.coeffs[k] + b[k] * y.y.coeffs[k];
  }
}

// U - dt * A(U)
SpectralVelocity euler_stage(const SpectralVelocity& U, double dt) {
  SpectralVelocity out = advection_hat(U);
  for (std::size_t k = 0; k < out.x.coeffs.size(); ++k) {
    out.x.coeffs[k] = U.x.coeffs[k] - dt * out.x.coeffs[k];
    out.y.coeffs[k] = U.y.coeffs[k] - dt * out.y.coeffs[k];
  }
  return out;
}

}  // namespace

VelocityField evolve_step(const VelocityField& u, const FluidParams& p) {
  return dft_inverse(evolve_hat(u, p));
}

VelocityField dns_step(const VelocityField& u, const FluidParams& p) {
  SpectralVelocity U = dft_forward(u);
  leray_project_inplace(U);
  const GridSpec& g = U.grid();
  const std::size_t size = U.x.coeffs.size();
  // Diffusion factors exp(-nu k^2 h) for h = dt, dt/2 and -dt/2.
  std::vector<double> full(size), half(size), back(size), zero(size, 0.0);
  for (int i = 0; i < g.n; ++i) {
    const double ky = g.wavenumber(g.mode(i));
    for (int j = 0; j < g.n; ++j) {
      const double kx = g.wavenumber(g.mode(j));
      const double a = p.nu * p.dt * (kx * kx + ky * ky);
      const auto idx = static_cast<std::size_t>(i) * static_cast<std::size_t>(g.n) + static_cast<std::size_t>(j);
      full[idx] = std::exp(-a);
      half[idx] = std::exp(-0.5 * a);
      back[idx] = std::exp(0.5 * a);
    }
  }
  std::vector<double> w3(size), w4(size), w13(size), w23(size);
  for (std::size_t k = 0; k < size; ++k) {
    w3[k] = 0.75 * half[k];
    w4[k] = 0.25 * back[k];
    w13[k] = full[k] / 3.0;
    w23[k] = 2.0 * half[k] / 3.0;
  }
  SpectralVelocity U1(g), U2(g), U3(g);
  combine(U1, full, euler_stage(U, p.dt), zero, U);
  combine(U2, w3, U, w4, euler_stage(U1, p.dt));
  combine(U3, w13, U, w23, euler_stage(U2, p.dt));
  return dft_inverse(U3);
}

void differential_filter_inplace(SpectralVelocity& W, double delta) {
  if (!(delta >= 0.0)) throw std::invalid_argument("filter radius must be non-negative");
  leray_project_inplace(W);
  if (delta == 0.0) return;
  const GridSpec& g = W.grid();
  const double two_d2 = 2.0 * delta * delta;
  for (int i = 0; i < g.n; ++i) {
    const double ky = g.wavenumber(g.mode(i));
    for (int j = 0; j < g.n; ++j) {
      const double kx = g.wavenumber(g.mode(j));
      const double gain = 1.0 / (1.0 + two_d2 * (kx * kx + ky * ky));
      W.x(j, i) *= gain;
      W.y(j, i) *= gain;
    }
  }
}

VelocityField differential_filter(const VelocityField& w, double delta) {
  if (!(delta >= 0.0)) throw std::invalid_argument("filter radius must be non-negative");
  SpectralVelocity W = dft_forward(w);
  differential_filter_inplace(W, delta);
  return dft_inverse(W);
}

bool is_blown_up(const VelocityField& u, double reference_energy) {
  if (!u.all_finite()) return true;
  const double e = kinetic_energy(u);
  return !std::isfinite(e) || e > kBlowUpEnergyFactor * reference_energy;
}

namespace {

SolverState advance(const SolverState& state, const FluidParams& p, const double* delta) {
  if (state.blown_up) throw std::logic_error("cannot step a blown-up state");
  SolverState next;
  next.t = state.t + p.dt;
  next.step_index = state.step_index + 1;
  next.reference_energy = state.reference_energy;
  try {
    SpectralVelocity W = evolve_hat(state.u, p);
    if (delta != nullptr) differential_filter_inplace(W, *delta);
    next.u = dft_inverse(W);
    next.blown_up = is_blown_up(next.u, state.reference_energy);
  } catch (const BlowUpError&) {
    next.u = state.u;
    next.blown_up = true;
  }
  return next;
}

}  // namespace

SolverState ef_step(const SolverState& state, double delta, const FluidParams& p) {
  if (!(delta >= 0.0)) throw std::invalid_argument("filter radius must be non-negative");
  return advance(state, p, &delta);
}

SolverState noef_step(const SolverState& state, const FluidParams& p) {
  return advance(state, p, nullptr);
}

SpectrumProfile peaked_spectrum(double k_peak) {
  if (!(k_peak > 0.0)) throw ConfigError("spectrum peak must be positive");
  return [k_peak](double k) {
    const double r = k / k_peak;
    return k * k * k * k * std::exp(-2.0 * r * r);
  };
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t mode_key(std::uint64_t seed, int mx, int my) {
  const auto ux = static_cast<std::uint64_t>(static_cast<std::uint32_t>(mx));
  const auto uy = static_cast<std::uint64_t>(static_cast<std::uint32_t>(my));
  return splitmix64(splitmix64(seed) ^ splitmix64((ux << 32) | uy));
}

int shell_of(double mag) { return static_cast<int>(std::floor(mag + 0.5)); }

}  // namespace

VelocityField init_decaying_turbulence(const GridSpec& grid, const SpectrumProfile& profile,
                                       double total_energy, std::uint64_t seed) {
  if (!(total_energy >= 0.0)) throw ConfigError("total energy must be non-negative");
  const int n = grid.n;
  const int max_shell = n / 2 - 1;

  std::vector<int> shell_count(static_cast<std::size_t>(max_shell) + 1, 0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const int s = shell_of(std::hypot(grid.mode(j), grid.mode(i)));
      if (s >= 1 && s <= max_shell) ++shell_count[static_cast<std::size_t>(s)];
    }
  }
  std::vector<double> shell_energy(shell_count.size(), 0.0);
  double profile_sum = 0.0;
  for (int s = 1; s <= max_shell; ++s) {
    const double e = profile(static_cast<double>(s));
    if (!(e >= 0.0) || !std::isfinite(e)) throw ConfigError("spectrum profile must be finite and >= 0");
    shell_energy[static_cast<std::size_t>(s)] = e;
    profile_sum += e;
  }
  if (total_energy == 0.0 || profile_sum == 0.0) return VelocityField(grid);
  const double c = total_energy / profile_sum;

  // Physical energy of one coefficient pair is side^2 / (2 n^4) * |u_hat|^2.
  const double n2 = static_cast<double>(grid.size());
  const double coeff_scale = n2 * n2 / (grid.side * grid.side);

  SpectralVelocity U(grid);
  for (int i = 0; i < n; ++i) {
    const int my = grid.mode(i);
    for (int j = 0; j < n; ++j) {
      const int mx = grid.mode(j);
      const int s = shell_of(std::hypot(mx, my));
      if (s < 1 || s > max_shell) continue;
      // Sample the upper half-plane, mirror the rest by conjugation.
      const bool canonical = my > 0 || (my == 0 && mx > 0);
      const int cmx = canonical ? mx : -mx;
      const int cmy = canonical ? my : -my;

      std::mt19937_64 rng(mode_key(seed, cmx, cmy));
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      const double tau = unit(rng);
      const double theta = 2.0 * std::numbers::pi * unit(rng);

      const double mode_energy = c * shell_energy[static_cast<std::size_t>(s)] /
                                 shell_count[static_cast<std::size_t>(s)];
      const double amplitude = std::sqrt(2.0 * mode_energy * coeff_scale);
      Complex a = std::polar(amplitude, 2.0 * std::numbers::pi * tau);

      // Unit direction P e / |P e|, orthogonal to the canonical wavevector.
      const double kx = cmx, ky = cmy;
      const double k2 = kx * kx + ky * ky;
      const double ex = std::cos(theta), ey = std::sin(theta);
      const double proj = (kx * ex + ky * ey) / k2;
      double px = ex - kx * proj, py = ey - ky * proj;
      const double pn = std::hypot(px, py);
      if (pn < 1e-14) {
        px = -ky / std::sqrt(k2);
        py = kx / std::sqrt(k2);
      } else {
        px /= pn;
        py /= pn;
      }
      if (!canonical) a = std::conj(a);
      U.x(j, i) = a * px;
      U.y(j, i) = a * py;
    }
  }
  // Transform to physical space and project once more on the discrete grid.
  return leray_project(dft_inverse(U));
}

double kolmogorov_scale(const FluidParams& p, double length) {
  if (!(p.re > 0.0)) throw ConfigError("Reynolds number must be positive");
  return length * std::pow(p.re, -0.75);
}

}  // namespace efrl
