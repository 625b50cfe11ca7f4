#pragma once

// Command implementations shared by the CLI and the acceptance suite:
// filtered-DNS generation, agent training, extrapolation evaluation and
// cross-run comparison.

#include "efrl/config.hpp"
#include "efrl/dqn.hpp"
#include "efrl/env.hpp"
#include "efrl/metrics.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace efrl {

using LogFn = std::function<void(const std::string&)>;

struct InitialConditions {
  VelocityField fine;
  /// Spectral truncation of `fine` onto the coarse grid.
  VelocityField coarse;
};

InitialConditions make_initial_conditions(const RunConfig& cfg);

/// Fine-grid dns_step run for `coarse_steps` coarse steps. `on_step(k, u)` receives the
/// coarse projection after coarse step k = 1..coarse_steps. Throws
/// BlowUpError when the DNS itself blows up.
void run_dns(const RunConfig& cfg, const VelocityField& fine_initial, int coarse_steps,
             const std::function<void(int, const VelocityField&)>& on_step, const LogFn& log = {});

ReferenceStore build_reference(const RunConfig& cfg, int coarse_steps, const LogFn& log = {});

/// Writes the reference store for cfg.variant into <out_dir>/reference.
/// DF and SP-DF need no reference; a training-window store is written anyway.
std::filesystem::path cmd_gen_dns(const RunConfig& cfg, const LogFn& log = {});

struct EpisodeRecord {
  int episode = 0;
  std::int64_t start_step = 0;
  int steps = 0;
  double reward_sum = 0.0;
  double discounted = 0.0;
  double mean_loss = 0.0;
  double epsilon = 0.0;
  bool blown_up = false;
};

struct TrainResult {
  std::vector<EpisodeRecord> episodes;
  MlpParams params;
  AdamState adam;
  std::int64_t total_steps = 0;
};

/// Episode loop for cfg.variant. Writes train_log.csv, train_steps.csv and
/// checkpoints into `out_dir` unless it is empty.
TrainResult train_agent(const RunConfig& cfg, const ReferenceStore* refs,
                        const std::filesystem::path& out_dir, const LogFn& log = {});

/// Loads <out_dir>/reference when the variant needs it, trains, saves
/// <out_dir>/agent.efdq and the resolved config.
TrainResult cmd_train(const RunConfig& cfg, const LogFn& log = {});

struct MethodTrace {
  std::string name;
  std::vector<double> time;
  std::vector<double> energy;
  std::vector<double> enstrophy;
  std::vector<double> grad_norm;
  /// Filter radius used for the step ending at time[i]; 0 at t = 0 and for noEF.
  std::vector<double> delta;
  std::vector<int> actions;
  std::vector<SpectrumStats> spectra;
  bool blown_up = false;
  /// Step at which the blow-up flag was raised, or -1.
  std::int64_t blowup_step = -1;
};

struct MethodSummary {
  std::string name;
  bool blown_up = false;
  std::int64_t steps_completed = 0;
  double err_energy = 0.0;
  std::map<int, SpectrumError> err_spectrum;
};

struct EvalResult {
  MethodTrace reference;
  std::vector<MethodTrace> methods;
  std::vector<MethodSummary> summary;

  [[nodiscard]] const MethodSummary& find(const std::string& name) const;
};

/// Greedy RL-EF rollout (when `policy` is given), noEF and EF(eta) over the
/// full window, scored against the filtered DNS over the steps each method
/// completed.
EvalResult evaluate(const RunConfig& cfg, const MlpParams* policy, const LogFn& log = {});

/// Writes time series, spectra, action trace, histogram and summary.json into `dir`.
void write_eval_outputs(const RunConfig& cfg, const EvalResult& result, const std::filesystem::path& dir);

/// Loads the checkpoint, evaluates and writes into <out_dir>/eval.
EvalResult cmd_eval(const RunConfig& cfg, const std::filesystem::path& checkpoint, const LogFn& log = {});

/// Reads <dir>/eval/summary.json (or <dir>/summary.json) from each run and
/// writes compare.csv and compare.json into `out`. Returns the CSV text.
std::string cmd_compare(const std::vector<std::filesystem::path>& runs, const std::filesystem::path& out);

}  // namespace efrl
