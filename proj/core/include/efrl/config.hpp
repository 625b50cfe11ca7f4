#pragma once

// Run configuration. Files are INI (key=value under [section] headers); any
// key left out keeps the profile default.

#include "efrl/dqn.hpp"
#include "efrl/env.hpp"
#include "efrl/rewards.hpp"
#include "efrl/solver.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace efrl {

enum class Profile { Paper, Ci };

Profile parse_profile(std::string_view name);
std::string_view to_string(Profile p);

struct RunConfig {
  Profile profile = Profile::Paper;

  // [grid]
  int coarse_n = 64;
  int fine_n = 256;
  double side = 1.0;
  // [flow]
  double re = 4.0e4;
  double dt = 1e-3;
  double t_final = 2.0;
  // [init]
  double k_peak = 10.0;
  double initial_energy = 0.5;
  std::uint64_t init_seed = 42;
  // [train]
  Variant variant = Variant::DF;
  int episodes = 90;
  int checkpoint_every = 10;
  /// Target copy interval in units of N_train.
  int target_update_factor = 5;
  // [agent]
  AgentConfig agent;
  // [reward]
  RewardParams rewards;
  // [eval]
  std::vector<double> snapshot_times = {0.5, 1.0, 1.5};
  std::vector<int> spectrum_k = {8, 32};
  // [output]
  std::string out_dir = "runs/default";

  static RunConfig for_profile(Profile p);

  /// N = t_final / dt. Throws ConfigError when not integral.
  [[nodiscard]] int total_steps() const;
  [[nodiscard]] int n_train() const { return total_steps() / 4; }
  [[nodiscard]] int n_rand_train() const { return total_steps() / 10; }
  [[nodiscard]] GridSpec coarse_grid() const { return GridSpec(coarse_n, side); }
  [[nodiscard]] GridSpec fine_grid() const { return GridSpec(fine_n, side); }
  [[nodiscard]] FluidParams fluid() const { return FluidParams::from_reynolds(re, dt); }
  /// Fine-grid step dt * coarse_n / fine_n.
  [[nodiscard]] FluidParams fine_fluid() const;
  [[nodiscard]] EpisodeConfig episode() const;
  /// Agent settings with the target interval resolved against N_train.
  [[nodiscard]] AgentConfig resolved_agent() const;
  /// Coarse-step count the reference store must cover for `variant`.
  [[nodiscard]] int reference_steps(Variant v) const;

  void validate() const;
};

/// Profile defaults overlaid with the file's values. Unknown keys are errors.
RunConfig load_config(const std::filesystem::path& path, Profile base);
/// Same, from INI text.
RunConfig parse_config(const std::string& ini_text, Profile base);
/// Complete INI text; parse_config(dump_config(c)) reproduces c.
std::string dump_config(const RunConfig& cfg);

}  // namespace efrl
