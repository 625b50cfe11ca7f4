#include "efrl/metrics.hpp"

#include "efrl/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace efrl {

namespace {

double parseval_factor(const GridSpec& g) {
  const double n2 = static_cast<double>(g.size());
  return g.side * g.side / (n2 * n2);
}

}  // namespace

double kinetic_energy(const VelocityField& u) {
  double sum = 0.0;
  for (std::size_t k = 0; k < u.ux.values.size(); ++k) {
    sum += u.ux.values[k] * u.ux.values[k] + u.uy.values[k] * u.uy.values[k];
  }
  const double dx = u.grid.dx();
  return 0.5 * sum * dx * dx;
}

double kinetic_energy(const SpectralVelocity& U) {
  double sum = 0.0;
  for (std::size_t k = 0; k < U.x.coeffs.size(); ++k) {
    sum += std::norm(U.x.coeffs[k]) + std::norm(U.y.coeffs[k]);
  }
  return 0.5 * sum * parseval_factor(U.grid());
}

double enstrophy(const SpectralVelocity& U) {
  const SpectralField w = vorticity_hat(U);
  double sum = 0.0;
  for (const auto& c : w.coeffs) sum += std::norm(c);
  return 0.5 * sum * parseval_factor(U.grid());
}

double enstrophy(const VelocityField& u) { return enstrophy(dft_forward(u)); }

double SpectrumStats::at(int shell) const {
  if (shell < 0 || static_cast<std::size_t>(shell) >= energy.size()) return 0.0;
  return energy[static_cast<std::size_t>(shell)];
}

double SpectrumStats::total() const {
  double s = 0.0;
  for (double e : energy) s += e;
  return s;
}

SpectrumStats energy_spectrum(const SpectralVelocity& U, double time) {
  const GridSpec& g = U.grid();
  SpectrumStats out;
  out.time = time;
  out.resolved = g.n / 2;
  const int corner = static_cast<int>(std::floor(std::sqrt(2.0) * (g.n / 2) + 0.5));
  out.energy.assign(static_cast<std::size_t>(corner) + 1, 0.0);
  const double f = 0.5 * parseval_factor(g);
  for (int i = 0; i < g.n; ++i) {
    for (int j = 0; j < g.n; ++j) {
      const double mag = std::hypot(g.mode(j), g.mode(i));
      const auto shell = static_cast<std::size_t>(std::floor(mag + 0.5));
      out.energy[shell] += f * (std::norm(U.x(j, i)) + std::norm(U.y(j, i)));
    }
  }
  return out;
}

SpectrumStats energy_spectrum(const VelocityField& u, double time) {
  return energy_spectrum(dft_forward(u), time);
}

double err_energy(std::span<const double> series, std::span<const double> reference) {
  if (series.size() != reference.size()) throw ShapeError("err_energy: length mismatch");
  if (series.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t n = 0; n < series.size(); ++n) {
    if (!(reference[n] > 0.0)) throw std::invalid_argument("err_energy: reference energy must be > 0");
    sum += std::abs((series[n] - reference[n]) / reference[n]);
  }
  return sum / static_cast<double>(series.size());
}

SpectrumError err_spectrum_detail(std::span<const SpectrumStats> spectra,
                                  std::span<const SpectrumStats> reference, int max_shell) {
  if (spectra.size() != reference.size()) throw ShapeError("err_spectrum: length mismatch");
  if (max_shell < 1) throw std::invalid_argument("err_spectrum: K must be >= 1");
  SpectrumError out;
  std::size_t steps = 0;
  for (std::size_t n = 0; n < spectra.size(); ++n) {
    double sum = 0.0, abs_sum = 0.0;
    int valid = 0;
    for (int k = 1; k <= max_shell; ++k) {
      const double e = spectra[n].at(k);
      const double r = reference[n].at(k);
      if (!(e > 0.0) || !(r > 0.0) || !std::isfinite(e) || !std::isfinite(r)) {
        ++out.excluded;
        continue;
      }
      const double l = std::log10(e / r);
      sum += l;
      abs_sum += std::abs(l);
      ++valid;
    }
    if (valid == 0) continue;
    out.signed_value += sum / valid;
    out.absolute_value += abs_sum / valid;
    ++steps;
  }
  if (steps > 0) {
    out.signed_value /= static_cast<double>(steps);
    out.absolute_value /= static_cast<double>(steps);
  }
  return out;
}

double err_spectrum(std::span<const SpectrumStats> spectra, std::span<const SpectrumStats> reference,
                    int max_shell) {
  return err_spectrum_detail(spectra, reference, max_shell).signed_value;
}

VelocityField filtered_dns_project(const VelocityField& fine, const GridSpec& coarse) {
  const GridSpec& fg = fine.grid;
  if (fg.n < coarse.n || fg.n % coarse.n != 0 || fg.side != coarse.side) {
    throw ShapeError("filtered_dns_project: fine grid must be an integer refinement of the coarse grid");
  }
  const SpectralVelocity F = dft_forward(fine);
  SpectralVelocity C(coarse);
  const double scale = static_cast<double>(coarse.size()) / static_cast<double>(fg.size());
  const int half = coarse.n / 2;
  for (int i = 0; i < coarse.n; ++i) {
    const int my = coarse.mode(i);
    if (my == -half) continue;
    const int fi = my >= 0 ? my : my + fg.n;
    for (int j = 0; j < coarse.n; ++j) {
      const int mx = coarse.mode(j);
      if (mx == -half) continue;
      const int fj = mx >= 0 ? mx : mx + fg.n;
      C.x(j, i) = scale * F.x(fj, fi);
      C.y(j, i) = scale * F.y(fj, fi);
    }
  }
  return dft_inverse(C);
}

}  // namespace efrl
