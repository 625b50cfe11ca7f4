#include "efrl/rewards.hpp"

#include "efrl/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace efrl {

void RewardParams::validate() const {
  if (!(alpha > 0.0) || !(alpha_res > 0.0) || !(alpha_grad > 0.0) || !(alpha_energy > 0.0) ||
      !(alpha_enstrophy > 0.0)) {
    throw ConfigError("reward scales must be strictly positive");
  }
}

double reward_map(double error, double alpha) {
  if (!(error >= 0.0)) throw std::invalid_argument("reward_map: error must be non-negative");
  return 2.0 * std::exp(-error / alpha) - 1.0;
}

double relative_error_dd(const VelocityField& u, const VelocityField& u_ref) {
  if (!(u.grid == u_ref.grid)) throw ShapeError("reward_dd: grid mismatch");
  const double ref = l2_norm(u_ref);
  if (!(ref > 0.0)) throw std::invalid_argument("reward_dd: reference norm is zero");
  const double rel = l2_norm(u - u_ref) / ref;
  return rel * rel;
}

double reward_dd(const VelocityField& u, const VelocityField& u_ref, const RewardParams& params) {
  return reward_map(relative_error_dd(u, u_ref), params.alpha);
}

double residual_norm(const VelocityField& u_next, const VelocityField& u_prev, const FluidParams& p) {
  if (!(u_next.grid == u_prev.grid)) throw ShapeError("residual_norm: grid mismatch");
  const SpectralVelocity Un = dft_forward(u_next);
  const SpectralVelocity Up = dft_forward(u_prev);
  SpectralVelocity R = advection_hat(Un);
  const GridSpec& g = Un.grid();
  const double inv_dt = 1.0 / p.dt;
  for (int i = 0; i < g.n; ++i) {
    const double ky = g.wavenumber(g.mode(i));
    for (int j = 0; j < g.n; ++j) {
      const double kx = g.wavenumber(g.mode(j));
      const double k2 = kx * kx + ky * ky;
      R.x(j, i) += (Un.x(j, i) - Up.x(j, i)) * inv_dt + p.nu * k2 * Un.x(j, i);
      R.y(j, i) += (Un.y(j, i) - Up.y(j, i)) * inv_dt + p.nu * k2 * Un.y(j, i);
    }
  }
  leray_project_inplace(R);
  return l2_norm(R);
}

double reward_df(const StepDiagnostics& diag, const RewardParams& params) {
  const double residual_term = 2.0 * std::exp(-params.alpha_res * diag.res) - 1.0;
  const double denom = params.grad_form == GradTermForm::ScaledDifference
                           ? params.alpha_grad * (diag.grad_now - diag.grad_prev)
                           : params.alpha_grad * diag.grad_now - diag.grad_prev;
  // Vanishing gradient change: exp(-|1/0|) -> 0, so the half-term is -1.
  const double grad_term = denom == 0.0 ? -1.0 : 2.0 * std::exp(-std::abs(1.0 / denom)) - 1.0;
  return 0.5 * residual_term + 0.5 * grad_term;
}

double growth_penalty(double now, double prev, double alpha) {
  if (!(now > prev)) return 0.0;
  if (!(prev > 0.0)) return -1.0;
  return std::exp(-(now - prev) / (alpha * prev)) - 1.0;
}

double reward_sp(const StepDiagnostics& diag, const RewardParams& params, double base_df) {
  return base_df + growth_penalty(diag.energy_now, diag.energy_prev, params.alpha_energy) +
         growth_penalty(diag.enstrophy_now, diag.enstrophy_prev, params.alpha_enstrophy);
}

Return cumulative_return(std::span<const double> rewards, double gamma) {
  Return r;
  double discount = 1.0;
  for (double x : rewards) {
    r.plain += x;
    r.discounted += discount * x;
    discount *= gamma;
  }
  return r;
}

}  // namespace efrl
