#pragma once

#include "efrl/fields.hpp"
#include "efrl/solver.hpp"

#include <span>

namespace efrl {

/// How the gradient-change term scales its reciprocal.
enum class GradTermForm {
  /// 1 / (alpha_grad * (g_now - g_prev))
  ScaledDifference,
  /// 1 / (alpha_grad * g_now - g_prev), the alternative parenthesization.
  ScaledCurrent,
};

struct RewardParams {
  double alpha = 1.0;
  double alpha_res = 1e5;
  double alpha_grad = 1e4;
  double alpha_energy = 0.1;
  double alpha_enstrophy = 0.1;
  GradTermForm grad_form = GradTermForm::ScaledDifference;

  void validate() const;
};

struct StepDiagnostics {
  double res = 0.0;
  double grad_now = 0.0;
  double grad_prev = 0.0;
  double energy_now = 0.0;
  double energy_prev = 0.0;
  double enstrophy_now = 0.0;
  double enstrophy_prev = 0.0;
};

/// 2 exp(-e / alpha) - 1, mapping e >= 0 into (-1, 1].
double reward_map(double error, double alpha);

/// (||u - u_ref|| / ||u_ref||)^2.
double relative_error_dd(const VelocityField& u, const VelocityField& u_ref);
double reward_dd(const VelocityField& u, const VelocityField& u_ref, const RewardParams& params);

/// L2 norm of P[(u_next - u_prev)/dt + A(u_next) - nu Lap u_next], A the
/// solver's dealiased advection operator.
double residual_norm(const VelocityField& u_next, const VelocityField& u_prev, const FluidParams& p);

/// Residual-term half plus gradient-change half, each of the reward_map form.
double reward_df(const StepDiagnostics& diag, const RewardParams& params);

/// Energy/enstrophy growth penalty exp(-(X_now - X_prev) / (alpha X_prev)) - 1
/// when X grew, 0 otherwise; -1 when X_prev is zero and X grew.
double growth_penalty(double now, double prev, double alpha);
double reward_sp(const StepDiagnostics& diag, const RewardParams& params, double base_df);

struct Return {
  double discounted = 0.0;
  double plain = 0.0;
};
Return cumulative_return(std::span<const double> rewards, double gamma);

}  // namespace efrl
