#pragma once

// Episodic MDP around the EF step: the action picks the filter radius, the
// observation is the filtered velocity, the reward depends on the variant.

#include "efrl/fields.hpp"
#include "efrl/rewards.hpp"
#include "efrl/solver.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace efrl {

inline constexpr int kNumActions = 50;

/// Filter radii: 4 log-spaced values on [1e-10, 1e-7], then 46 log-spaced on [1e-6, 1e-3].
struct ActionSpace {
  std::array<double, kNumActions> values{};

  [[nodiscard]] static constexpr int size() { return kNumActions; }
  /// Radius of action `index`; throws std::out_of_range outside [0, 50).
  [[nodiscard]] double decode(int index) const;
  /// Index of the value equal to `delta` (relative tolerance 1e-12); throws when absent.
  [[nodiscard]] int index_of(double delta) const;
};

ActionSpace build_action_space();

enum class Variant { DD, DD_RAND, DF, SP_DF };

std::string_view to_string(Variant v);
/// Accepts "dd", "dd-rand", "df", "sp-df". Throws ConfigError otherwise.
Variant parse_variant(std::string_view name);
bool needs_reference(Variant v);

struct EpisodeConfig {
  Variant variant = Variant::DF;
  int n_train = 500;
  bool random_start = false;
  double gamma = 0.99;

  /// Table defaults: N/4 steps from t = 0, or N/10 steps from a random start for DD_RAND.
  static EpisodeConfig for_variant(Variant v, int total_steps, double gamma = 0.99);
};

using Observation = std::vector<double>;

struct Transition {
  Observation obs;
  int action = 0;
  double reward = 0.0;
  Observation next_obs;
  bool done = false;
};

/// Filtered-DNS snapshots on the coarse grid at coarse steps 1..count.
class ReferenceStore {
public:
  ReferenceStore() = default;
  ReferenceStore(const GridSpec& grid, double dt) : grid_(grid), dt_(dt) {}

  /// Appends the snapshot for the next step (count() + 1).
  void push(VelocityField u);
  [[nodiscard]] const VelocityField& at(std::int64_t step) const;
  [[nodiscard]] bool covers(std::int64_t step) const { return step >= 1 && step <= count(); }
  [[nodiscard]] std::int64_t count() const { return static_cast<std::int64_t>(snapshots_.size()); }
  [[nodiscard]] const GridSpec& grid() const { return grid_; }
  [[nodiscard]] double dt() const { return dt_; }

  /// Directory of step_%06d snapshot files plus an `index` manifest.
  void save(const std::filesystem::path& dir) const;
  static ReferenceStore load(const std::filesystem::path& dir);

private:
  GridSpec grid_;
  double dt_ = 0.0;
  std::vector<VelocityField> snapshots_;
};

/// Flattened ux then uy, multiplied by `scale`.
Observation encode_observation(const VelocityField& u, double scale);

/// Everything an episode needs that does not change between episodes.
struct EnvContext {
  ActionSpace actions = build_action_space();
  FluidParams fluid;
  RewardParams rewards;
  EpisodeConfig episode;
  VelocityField initial;
  /// Observation scale 1 / U_rms of `initial`.
  double obs_scale = 1.0;
  const ReferenceStore* refs = nullptr;

  /// Validates variant/reference compatibility. Throws ConfigError.
  void validate() const;
};

EnvContext make_env_context(const VelocityField& initial, const FluidParams& fluid,
                            const RewardParams& rewards, const EpisodeConfig& episode,
                            const ReferenceStore* refs);

struct EpisodeState {
  SolverState solver;
  std::int64_t start_step = 0;
  int steps_taken = 0;
  bool done = false;
};

struct ResetResult {
  EpisodeState state;
  Observation obs;
};

/// Start index for DD_RAND drawn uniformly from {1..n_train_total}.
std::int64_t sample_start_step(std::int64_t n_train_total, std::mt19937_64& rng);

/// `rng` is only consumed for random starts. `n_train_total` is the
/// training-window length the random start is drawn from.
ResetResult env_reset(const EnvContext& ctx, std::mt19937_64& rng, std::int64_t n_train_total = 0);

/// Per-step record for the diagnostics log.
struct StepInfo {
  double delta = 0.0;
  double res = 0.0;
  double grad_norm = 0.0;
  double energy = 0.0;
  double enstrophy = 0.0;
  bool blown_up = false;
};

/// One EF step with action `action`. Throws std::out_of_range for bad actions
/// and std::logic_error when the episode is already done.
Transition env_step(const EnvContext& ctx, EpisodeState& state, int action, StepInfo* info = nullptr);

}  // namespace efrl
