#pragma once

#include "efrl/fields.hpp"

#include <span>
#include <vector>

namespace efrl {

/// 1/2 * integral of |u|^2 over the domain.
double kinetic_energy(const VelocityField& u);
double kinetic_energy(const SpectralVelocity& U);
/// 1/2 * integral of omega^2 over the domain.
double enstrophy(const VelocityField& u);
double enstrophy(const SpectralVelocity& U);

/// Shell-binned energy. energy[k] sums 1/2 |u_hat_m|^2 (Parseval-normalized)
/// over modes with k - 1/2 <= |m| < k + 1/2, |m| in units of 2*pi/side.
/// Shells run from 0 (the mean) up to the grid corner, so the sum over all
/// shells equals the kinetic energy; the resolved range is 1 .. n/2.
struct SpectrumStats {
  double time = 0.0;
  std::vector<double> energy;

  /// E(k) for k >= 1, or 0 outside the stored range.
  [[nodiscard]] double at(int shell) const;
  [[nodiscard]] double total() const;
  [[nodiscard]] int resolved_shells() const { return resolved; }
  int resolved = 0;
};

SpectrumStats energy_spectrum(const VelocityField& u, double time = 0.0);
SpectrumStats energy_spectrum(const SpectralVelocity& U, double time = 0.0);

/// Time-averaged relative energy error (1/N) sum |(E_n - E_ref_n) / E_ref_n|.
double err_energy(std::span<const double> series, std::span<const double> reference);

struct SpectrumError {
  /// (1/N) sum_n (1/K) sum_{k=1..K} log10(E_n(k) / E_ref_n(k)).
  double signed_value = 0.0;
  /// Same with |log10(.)|.
  double absolute_value = 0.0;
  /// Shell/time pairs skipped because an energy was zero, negative or non-finite.
  std::size_t excluded = 0;
};

/// Log10 spectrum error over shells 1..K. Excluded shells are dropped from
/// the per-step shell average; a step with no valid shell is skipped.
SpectrumError err_spectrum_detail(std::span<const SpectrumStats> spectra,
                                  std::span<const SpectrumStats> reference, int max_shell);
double err_spectrum(std::span<const SpectrumStats> spectra,
                    std::span<const SpectrumStats> reference, int max_shell);

/// Sharp spectral truncation of a fine-grid field onto a coarse grid. The
/// coarse Nyquist modes are dropped so the result stays real and solenoidal.
VelocityField filtered_dns_project(const VelocityField& fine, const GridSpec& coarse);

}  // namespace efrl
