#include "efrl/env.hpp"

#include "efrl/errors.hpp"
#include "efrl/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace efrl {

ActionSpace build_action_space() {
  ActionSpace a;
  for (int i = 0; i < 4; ++i) a.values[static_cast<std::size_t>(i)] = std::pow(10.0, -10.0 + i);
  for (int i = 0; i < 46; ++i) {
    a.values[static_cast<std::size_t>(4 + i)] = std::pow(10.0, -6.0 + 3.0 * i / 45.0);
  }
  return a;
}

double ActionSpace::decode(int index) const {
  if (index < 0 || index >= kNumActions) {
    throw std::out_of_range("action index " + std::to_string(index) + " outside [0, 50)");
  }
  return values[static_cast<std::size_t>(index)];
}

int ActionSpace::index_of(double delta) const {
  for (int i = 0; i < kNumActions; ++i) {
    const double v = values[static_cast<std::size_t>(i)];
    if (std::abs(v - delta) <= 1e-12 * v) return i;
  }
  throw std::out_of_range("filter radius is not in the action space");
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::DD: return "dd";
    case Variant::DD_RAND: return "dd-rand";
    case Variant::DF: return "df";
    case Variant::SP_DF: return "sp-df";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  if (name == "dd") return Variant::DD;
  if (name == "dd-rand") return Variant::DD_RAND;
  if (name == "df") return Variant::DF;
  if (name == "sp-df") return Variant::SP_DF;
  throw ConfigError("unknown variant '" + std::string(name) + "' (expected dd, dd-rand, df, sp-df)");
}

bool needs_reference(Variant v) { return v == Variant::DD || v == Variant::DD_RAND; }

EpisodeConfig EpisodeConfig::for_variant(Variant v, int total_steps, double gamma) {
  EpisodeConfig c;
  c.variant = v;
  c.gamma = gamma;
  c.random_start = v == Variant::DD_RAND;
  c.n_train = v == Variant::DD_RAND ? total_steps / 10 : total_steps / 4;
  return c;
}

void ReferenceStore::push(VelocityField u) {
  if (!(u.grid == grid_)) throw ShapeError("reference snapshot grid mismatch");
  snapshots_.push_back(std::move(u));
}

const VelocityField& ReferenceStore::at(std::int64_t step) const {
  if (!covers(step)) {
    throw ConfigError("reference store has steps 1.." + std::to_string(count()) + ", step " +
                      std::to_string(step) + " requested");
  }
  return snapshots_[static_cast<std::size_t>(step - 1)];
}

Observation encode_observation(const VelocityField& u, double scale) {
  Observation obs(2 * u.grid.size());
  const std::size_t n2 = u.grid.size();
  for (std::size_t k = 0; k < n2; ++k) {
    obs[k] = u.ux.values[k] * scale;
    obs[n2 + k] = u.uy.values[k] * scale;
  }
  return obs;
}

void EnvContext::validate() const {
  fluid.validate();
  rewards.validate();
  if (episode.n_train <= 0) throw ConfigError("episode length must be positive");
  if (needs_reference(episode.variant)) {
    if (refs == nullptr) {
      throw ConfigError("variant " + std::string(to_string(episode.variant)) +
                        " needs filtered-DNS reference snapshots");
    }
    if (!(refs->grid() == initial.grid)) throw ConfigError("reference grid differs from the coarse grid");
    if (std::abs(refs->dt() - fluid.dt) > 1e-12 * fluid.dt) {
      throw ConfigError("reference time step differs from the coarse time step");
    }
  }
}

EnvContext make_env_context(const VelocityField& initial, const FluidParams& fluid,
                            const RewardParams& rewards, const EpisodeConfig& episode,
                            const ReferenceStore* refs) {
  EnvContext ctx;
  ctx.fluid = fluid;
  ctx.rewards = rewards;
  ctx.episode = episode;
  ctx.initial = initial;
  ctx.refs = refs;
  const double urms = rms_velocity(initial);
  ctx.obs_scale = urms > 0.0 ? 1.0 / urms : 1.0;
  ctx.validate();
  return ctx;
}

std::int64_t sample_start_step(std::int64_t n_train_total, std::mt19937_64& rng) {
  if (n_train_total < 1) throw ConfigError("random start needs a training window of at least one step");
  std::uniform_int_distribution<std::int64_t> pick(1, n_train_total);
  return pick(rng);
}

ResetResult env_reset(const EnvContext& ctx, std::mt19937_64& rng, std::int64_t n_train_total) {
  ResetResult r;
  if (ctx.episode.random_start) {
    if (ctx.refs == nullptr) throw ConfigError("random episode starts need reference snapshots");
    const std::int64_t start = sample_start_step(n_train_total, rng);
    const std::int64_t last = start + ctx.episode.n_train;
    if (!ctx.refs->covers(last)) {
      throw ConfigError("reference store ends at step " + std::to_string(ctx.refs->count()) +
                        " but a random start needs step " + std::to_string(last));
    }
    r.state.solver = SolverState::initial(ctx.refs->at(start), start * ctx.fluid.dt, start);
    r.state.start_step = start;
  } else {
    r.state.solver = SolverState::initial(ctx.initial);
  }
  r.obs = encode_observation(r.state.solver.u, ctx.obs_scale);
  return r;
}

Transition env_step(const EnvContext& ctx, EpisodeState& state, int action, StepInfo* info) {
  if (state.done) throw std::logic_error("env_step on a finished episode");
  const double delta = ctx.actions.decode(action);

  Transition tr;
  tr.action = action;
  tr.obs = encode_observation(state.solver.u, ctx.obs_scale);

  const SolverState prev = state.solver;
  state.solver = ef_step(prev, delta, ctx.fluid);
  ++state.steps_taken;

  StepInfo local;
  local.delta = delta;
  if (state.solver.blown_up) {
    tr.reward = -1.0;
    tr.done = true;
    // The state after blow-up has no meaningful encoding; reuse the last one.
    tr.next_obs = tr.obs;
    local.blown_up = true;
  } else {
    const VelocityField& u = state.solver.u;
    switch (ctx.episode.variant) {
      case Variant::DD:
      case Variant::DD_RAND:
        tr.reward = reward_dd(u, ctx.refs->at(state.solver.step_index), ctx.rewards);
        local.grad_norm = grad_norm(u);
        break;
      case Variant::DF:
      case Variant::SP_DF: {
        StepDiagnostics d;
        d.res = residual_norm(u, prev.u, ctx.fluid);
        d.grad_now = grad_norm(u);
        d.grad_prev = grad_norm(prev.u);
        d.energy_now = kinetic_energy(u);
        d.energy_prev = kinetic_energy(prev.u);
        d.enstrophy_now = enstrophy(u);
        d.enstrophy_prev = enstrophy(prev.u);
        const double base = reward_df(d, ctx.rewards);
        tr.reward = ctx.episode.variant == Variant::DF ? base : reward_sp(d, ctx.rewards, base);
        local.res = d.res;
        local.grad_norm = d.grad_now;
        break;
      }
    }
    local.energy = kinetic_energy(u);
    local.enstrophy = enstrophy(u);
    tr.done = state.steps_taken >= ctx.episode.n_train;
    tr.next_obs = encode_observation(u, ctx.obs_scale);
  }
  state.done = tr.done;
  if (info != nullptr) *info = local;
  return tr;
}

}  // namespace efrl
