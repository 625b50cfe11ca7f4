#pragma once

// Deep Q-learning: an MLP Q-network with ReLU hidden layers, Adam, global
// gradient-norm clipping, a hard-synced target network and uniform replay.

#include "efrl/env.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace efrl {

struct MlpParams {
  /// Layer widths, input first: e.g. {obs_dim, 64, 64, 50}.
  std::vector<int> sizes;
  /// weights[l] is sizes[l+1] x sizes[l].
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  static MlpParams zeros(const std::vector<int>& sizes);
  /// Uniform(+-1/sqrt(fan_in)) for weights and biases.
  static MlpParams random(const std::vector<int>& sizes, std::mt19937_64& rng);

  [[nodiscard]] int input_dim() const { return sizes.front(); }
  [[nodiscard]] int output_dim() const { return sizes.back(); }
  [[nodiscard]] std::size_t num_layers() const { return weights.size(); }
  [[nodiscard]] std::size_t num_parameters() const;
  /// All parameters, layer by layer, weights (row-major) then biases.
  [[nodiscard]] std::vector<double> flatten() const;
  void unflatten(std::span<const double> flat);
  void set_zero();
  /// Sum of squares of every parameter.
  [[nodiscard]] double squared_norm() const;

  friend bool operator==(const MlpParams& a, const MlpParams& b);
};

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  MlpParams m;
  MlpParams v;

  static AdamState for_params(const MlpParams& params);
};

struct AgentConfig {
  std::vector<int> hidden = {64, 64};
  double gamma = 0.99;
  double lr = 1e-5;
  int batch = 128;
  double max_grad_norm = 5.0;
  /// Environment steps between hard target copies (5 N_train by default).
  std::int64_t target_update_interval = 2500;
  std::size_t replay_capacity = 50000;
  double eps_start = 1.0;
  double eps_end = 0.05;
  /// Fraction of the total step budget over which epsilon decays linearly.
  double eps_fraction = 0.5;
  /// Gradient steps are taken every `train_freq` environment steps.
  int train_freq = 1;
  /// Minimum buffer size before training starts (never below `batch`).
  std::size_t learning_starts = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Linear decay from eps_start to eps_end over eps_fraction * total_steps.
double epsilon_at(const AgentConfig& cfg, std::int64_t step, std::int64_t total_steps);

/// All action values for one observation.
Eigen::VectorXd q_forward(const MlpParams& params, std::span<const double> obs);
/// Batched forward pass; `obs` holds one observation per column.
Eigen::MatrixXd q_forward(const MlpParams& params, const Eigen::MatrixXd& obs);

/// Argmax with lowest-index tie-break.
int greedy_action(const Eigen::VectorXd& q);
/// Uniform random action with probability epsilon, greedy otherwise.
int select_action(const MlpParams& params, std::span<const double> obs, double epsilon,
                  std::mt19937_64& rng);

struct Batch {
  /// obs_dim x B, one observation per column.
  Eigen::MatrixXd obs;
  Eigen::MatrixXd next_obs;
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<bool> done;

  [[nodiscard]] std::size_t size() const { return actions.size(); }
};

/// y = r for terminal transitions, r + gamma * max_a' Q_target(s', a') otherwise.
std::vector<double> td_targets(const Batch& batch, const MlpParams& target, double gamma);

/// Mean over the batch of (Q(s, a) - y)^2 and its gradient with respect to
/// every parameter (written into `grad`, same shapes as `params`).
double td_loss_and_gradient(const MlpParams& params, const Eigen::MatrixXd& obs,
                            std::span<const int> actions, std::span<const double> targets,
                            MlpParams& grad);

/// Scales `grad` so its global L2 norm is at most max_norm. Returns the norm before clipping.
double clip_gradients(MlpParams& grad, double max_norm);

/// One bias-corrected Adam update.
void adam_update(MlpParams& params, AdamState& adam, const MlpParams& grad, double lr);

/// Uniform ring-buffer replay. Observations are stored once in float32; the
/// next_obs of a transition and the obs of the following one share storage
/// when they are identical.
class ReplayBuffer {
public:
  ReplayBuffer(std::size_t capacity, std::size_t obs_dim);

  void push(const Transition& t);
  [[nodiscard]] std::size_t size() const { return count_; }
  [[nodiscard]] std::size_t capacity() const { return capacity_; }
  [[nodiscard]] std::size_t obs_dim() const { return obs_dim_; }
  /// Number of distinct stored observation frames.
  [[nodiscard]] std::size_t stored_frames() const;

  /// `batch` distinct transitions sampled uniformly without replacement.
  Batch sample(std::size_t batch, std::mt19937_64& rng) const;
  /// Transition `i` (0 = oldest) converted back to double.
  [[nodiscard]] Transition get(std::size_t i) const;

private:
  struct Slot {
    std::int64_t obs_frame = -1;
    std::int64_t next_frame = -1;
    int action = 0;
    double reward = 0.0;
    bool done = false;
  };

  std::int64_t store_frame(const Observation& obs);
  void release_frame(std::int64_t id);
  void copy_frame(std::int64_t id, double* out) const;

  std::size_t capacity_;
  std::size_t obs_dim_;
  std::vector<Slot> slots_;
  std::size_t cursor_ = 0;
  std::size_t count_ = 0;
  std::map<std::int64_t, std::pair<std::vector<float>, int>> frames_;
  std::int64_t next_frame_id_ = 0;
  std::int64_t last_frame_ = -1;
};

/// Samples a batch, builds TD targets from `target`, clips and applies Adam.
/// Returns the batch loss before the update.
double train_step(MlpParams& params, AdamState& adam, const ReplayBuffer& buffer,
                  const MlpParams& target, const AgentConfig& cfg, std::mt19937_64& rng);

/// Hard copy when step_counter is a positive multiple of `interval`. Returns true on copy.
bool target_sync(const MlpParams& params, MlpParams& target, std::int64_t step_counter,
                 std::int64_t interval);

// Checkpoint: "EFDQ" | u32 version | u32 layer count | u32 sizes... |
// weights and biases (row-major f64) | u64 adam step | adam m | adam v |
// u64 length + key=value metadata text. Little-endian.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  MlpParams params;
  AdamState adam;
  std::map<std::string, std::string> metadata;
};

void save_checkpoint(const std::filesystem::path& path, const MlpParams& params,
                     const AdamState& adam, const std::map<std::string, std::string>& metadata = {});
/// Throws FormatError on bad magic, version or truncation and ShapeError when
/// `expected_input_dim` > 0 differs from the stored input width.
Checkpoint load_checkpoint(const std::filesystem::path& path, int expected_input_dim = 0);

}  // namespace efrl
