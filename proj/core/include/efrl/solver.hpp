#pragma once

// Evolve-Filter time stepping on the periodic square.
//
// Evolve: first-order semi-implicit step, advection explicit at u_n and
// diffusion implicit per mode, pressure eliminated by the Leray projection:
//   w_hat = P (u_hat - dt * A(u_n)) / (1 + nu dt |k|^2)
// with A(u) = P D F[(Du . grad) Du], D the 2/3-rule truncation.
//
// Filter (Stokes differential filter, multiplier realized by P):
//   u_hat = P w_hat / (1 + 2 delta^2 |k|^2)

#include "efrl/fields.hpp"

#include <cstdint>
#include <functional>

namespace efrl {

struct FluidParams {
  double nu = 2.5e-5;
  double dt = 1e-3;
  double re = 4.0e4;

  /// Unit normalization U = L = 1: nu = 1 / re.
  static FluidParams from_reynolds(double re, double dt);
  void validate() const;
};

struct SolverState {
  VelocityField u;
  double t = 0.0;
  std::int64_t step_index = 0;
  bool blown_up = false;
  /// Kinetic energy the blow-up bound is measured against (energy at t = 0).
  double reference_energy = 0.0;

  static SolverState initial(const VelocityField& u0, double t0 = 0.0, std::int64_t step0 = 0);
};

/// Energy growth factor over reference_energy that counts as blow-up.
inline constexpr double kBlowUpEnergyFactor = 1e6;

/// Dealiased, projected advection term P D F[(Du . grad) Du] in spectral space.
SpectralVelocity advection_hat(const SpectralVelocity& U);

/// One evolve step. Throws BlowUpError when the output is non-finite.
VelocityField evolve_step(const VelocityField& u, const FluidParams& p);

/// Fine-grid reference step: third-order SSP Runge-Kutta for the advection
/// term with an exact integrating factor for diffusion. Throws BlowUpError
/// when the output is non-finite.
VelocityField dns_step(const VelocityField& u, const FluidParams& p);

/// Stokes differential filter of radius delta >= 0; delta = 0 is the plain projection.
VelocityField differential_filter(const VelocityField& w, double delta);
void differential_filter_inplace(SpectralVelocity& W, double delta);

/// Evolve then filter. Never throws on blow-up; sets state.blown_up instead.
SolverState ef_step(const SolverState& state, double delta, const FluidParams& p);
SolverState noef_step(const SolverState& state, const FluidParams& p);

/// True when u is non-finite or its energy exceeds the blow-up bound.
bool is_blown_up(const VelocityField& u, double reference_energy);

/// Shell energy profile E(kappa), kappa in integer shell units of 2*pi/side.
using SpectrumProfile = std::function<double(double)>;

/// E(k) proportional to k^4 exp(-2 (k / k_peak)^2); peaks at k = k_peak.
SpectrumProfile peaked_spectrum(double k_peak = 10.0);

/// Random divergence-free field whose shell energies follow `profile`, scaled
/// so the total kinetic energy equals `total_energy`. Each mode's random phase
/// and direction are keyed by (seed, mode), so grids of different size agree
/// on the modes they share. Only shells 1 .. n/2 - 1 are populated.
VelocityField init_decaying_turbulence(const GridSpec& grid, const SpectrumProfile& profile,
                                       double total_energy, std::uint64_t seed);

/// Kolmogorov length L * Re^(-3/4).
double kolmogorov_scale(const FluidParams& p, double length = 1.0);

}  // namespace efrl
