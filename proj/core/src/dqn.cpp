#include "efrl/dqn.hpp"

#include "efrl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <unordered_set>

namespace efrl {

MlpParams MlpParams::zeros(const std::vector<int>& sizes) {
  if (sizes.size() < 2) throw ShapeError("an MLP needs at least input and output widths");
  for (int s : sizes) {
    if (s <= 0) throw ShapeError("layer widths must be positive");
  }
  MlpParams p;
  p.sizes = sizes;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    p.weights.emplace_back(Eigen::MatrixXd::Zero(sizes[l + 1], sizes[l]));
    p.biases.emplace_back(Eigen::VectorXd::Zero(sizes[l + 1]));
  }
  return p;
}

MlpParams MlpParams::random(const std::vector<int>& sizes, std::mt19937_64& rng) {
  MlpParams p = zeros(sizes);
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    auto& w = p.weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = dist(rng);
    }
    for (Eigen::Index r = 0; r < p.biases[l].size(); ++r) p.biases[l](r) = dist(rng);
  }
  return p;
}

std::size_t MlpParams::num_parameters() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
  }
  return n;
}

std::vector<double> MlpParams::flatten() const {
  std::vector<double> out;
  out.reserve(num_parameters());
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const auto& w = weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) out.push_back(w(r, c));
    }
    for (Eigen::Index r = 0; r < biases[l].size(); ++r) out.push_back(biases[l](r));
  }
  return out;
}

void MlpParams::unflatten(std::span<const double> flat) {
  if (flat.size() != num_parameters()) throw ShapeError("parameter vector length mismatch");
  std::size_t k = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    auto& w = weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = flat[k++];
    }
    for (Eigen::Index r = 0; r < biases[l].size(); ++r) biases[l](r) = flat[k++];
  }
}

void MlpParams::set_zero() {
  for (auto& w : weights) w.setZero();
  for (auto& b : biases) b.setZero();
}

double MlpParams::squared_norm() const {
  double s = 0.0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    s += weights[l].squaredNorm() + biases[l].squaredNorm();
  }
  return s;
}

bool operator==(const MlpParams& a, const MlpParams& b) {
  if (a.sizes != b.sizes) return false;
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    if (a.weights[l] != b.weights[l] || a.biases[l] != b.biases[l]) return false;
  }
  return true;
}

AdamState AdamState::for_params(const MlpParams& params) {
  AdamState s;
  s.m = MlpParams::zeros(params.sizes);
  s.v = MlpParams::zeros(params.sizes);
  return s;
}

void AgentConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must be in (0, 1]");
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (batch <= 0) throw ConfigError("batch size must be positive");
  if (!(max_grad_norm > 0.0)) throw ConfigError("max_grad_norm must be positive");
  if (target_update_interval <= 0) throw ConfigError("target update interval must be positive");
  if (replay_capacity < static_cast<std::size_t>(batch)) {
    throw ConfigError("replay capacity must hold at least one batch");
  }
  if (!(eps_start >= 0.0 && eps_start <= 1.0 && eps_end >= 0.0 && eps_end <= 1.0)) {
    throw ConfigError("epsilon bounds must lie in [0, 1]");
  }
  if (!(eps_fraction > 0.0 && eps_fraction <= 1.0)) throw ConfigError("eps_fraction must be in (0, 1]");
  if (train_freq <= 0) throw ConfigError("train_freq must be positive");
  for (int h : hidden) {
    if (h <= 0) throw ConfigError("hidden widths must be positive");
  }
}

double epsilon_at(const AgentConfig& cfg, std::int64_t step, std::int64_t total_steps) {
  const double horizon = cfg.eps_fraction * static_cast<double>(std::max<std::int64_t>(total_steps, 1));
  const double frac = std::min(1.0, static_cast<double>(step) / horizon);
  return cfg.eps_start + frac * (cfg.eps_end - cfg.eps_start);
}

Eigen::MatrixXd q_forward(const MlpParams& params, const Eigen::MatrixXd& obs) {
  if (obs.rows() != params.input_dim()) {
    throw ShapeError("observation length " + std::to_string(obs.rows()) + " != network input " +
                     std::to_string(params.input_dim()));
  }
  Eigen::MatrixXd a = obs;
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    Eigen::MatrixXd z = params.weights[l] * a;
    z.colwise() += params.biases[l];
    if (l + 1 < params.num_layers()) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a;
}

Eigen::VectorXd q_forward(const MlpParams& params, std::span<const double> obs) {
  const Eigen::Map<const Eigen::MatrixXd> x(obs.data(), static_cast<Eigen::Index>(obs.size()), 1);
  return q_forward(params, Eigen::MatrixXd(x)).col(0);
}

int greedy_action(const Eigen::VectorXd& q) {
  int best = 0;
  for (Eigen::Index i = 1; i < q.size(); ++i) {
    if (q(i) > q(best)) best = static_cast<int>(i);
  }
  return best;
}

int select_action(const MlpParams& params, std::span<const double> obs, double epsilon,
                  std::mt19937_64& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must be in [0, 1]");
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (epsilon > 0.0 && coin(rng) < epsilon) {
    std::uniform_int_distribution<int> pick(0, params.output_dim() - 1);
    return pick(rng);
  }
  return greedy_action(q_forward(params, obs));
}

std::vector<double> td_targets(const Batch& batch, const MlpParams& target, double gamma) {
  if (batch.size() == 0) throw std::invalid_argument("td_targets: empty batch");
  std::vector<double> y(batch.size());
  const Eigen::MatrixXd q_next = q_forward(target, batch.next_obs);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    y[i] = batch.rewards[i];
    if (!batch.done[i]) y[i] += gamma * q_next.col(static_cast<Eigen::Index>(i)).maxCoeff();
  }
  return y;
}

double td_loss_and_gradient(const MlpParams& params, const Eigen::MatrixXd& obs,
                            std::span<const int> actions, std::span<const double> targets,
                            MlpParams& grad) {
  const std::size_t layers = params.num_layers();
  const auto B = static_cast<Eigen::Index>(actions.size());
  if (obs.cols() != B || targets.size() != actions.size()) throw ShapeError("batch size mismatch");
  if (obs.rows() != params.input_dim()) throw ShapeError("observation length mismatch");

  // Forward pass keeping every activation.
  std::vector<Eigen::MatrixXd> act;
  act.reserve(layers + 1);
  act.push_back(obs);
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = params.weights[l] * act.back();
    z.colwise() += params.biases[l];
    if (l + 1 < layers) z = z.cwiseMax(0.0);
    act.push_back(std::move(z));
  }

  const Eigen::MatrixXd& q = act.back();
  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(q.rows(), B);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < B; ++i) {
    const int a = actions[static_cast<std::size_t>(i)];
    if (a < 0 || a >= q.rows()) throw std::out_of_range("action index out of range");
    const double err = q(a, i) - targets[static_cast<std::size_t>(i)];
    loss += err * err;
    delta(a, i) = 2.0 * err / static_cast<double>(B);
  }
  loss /= static_cast<double>(B);

  if (grad.sizes != params.sizes) grad = MlpParams::zeros(params.sizes);
  for (std::size_t l = layers; l-- > 0;) {
    grad.weights[l].noalias() = delta * act[l].transpose();
    grad.biases[l] = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd back = params.weights[l].transpose() * delta;
      // ReLU derivative from the stored post-activation (zero where clipped).
      delta = back.cwiseProduct((act[l].array() > 0.0).cast<double>().matrix());
    }
  }
  return loss;
}

double clip_gradients(MlpParams& grad, double max_norm) {
  const double norm = std::sqrt(grad.squared_norm());
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (auto& w : grad.weights) w *= scale;
    for (auto& b : grad.biases) b *= scale;
  }
  return norm;
}

void adam_update(MlpParams& params, AdamState& adam, const MlpParams& grad, double lr) {
  if (adam.m.sizes != params.sizes) adam = AdamState::for_params(params);
  ++adam.step;
  const double t = static_cast<double>(adam.step);
  const double c1 = 1.0 - std::pow(adam.beta1, t);
  const double c2 = 1.0 - std::pow(adam.beta2, t);
  const double b1 = adam.beta1, b2 = adam.beta2, eps = adam.eps;
  auto update = [&](auto& p, auto& m, auto& v, const auto& g) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    update(params.weights[l], adam.m.weights[l], adam.v.weights[l], grad.weights[l]);
    update(params.biases[l], adam.m.biases[l], adam.v.biases[l], grad.biases[l]);
  }
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t obs_dim)
    : capacity_(capacity), obs_dim_(obs_dim), slots_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
}

std::size_t ReplayBuffer::stored_frames() const { return frames_.size(); }

std::int64_t ReplayBuffer::store_frame(const Observation& obs) {
  if (obs.size() != obs_dim_) throw ShapeError("transition observation length mismatch");
  if (last_frame_ >= 0) {
    auto it = frames_.find(last_frame_);
    if (it != frames_.end()) {
      const auto& stored = it->second.first;
      bool same = true;
      for (std::size_t k = 0; k < obs_dim_ && same; ++k) same = stored[k] == static_cast<float>(obs[k]);
      if (same) {
        ++it->second.second;
        return last_frame_;
      }
    }
  }
  std::vector<float> f(obs_dim_);
  for (std::size_t k = 0; k < obs_dim_; ++k) f[k] = static_cast<float>(obs[k]);
  const std::int64_t id = next_frame_id_++;
  frames_.emplace(id, std::make_pair(std::move(f), 1));
  last_frame_ = id;
  return id;
}

void ReplayBuffer::release_frame(std::int64_t id) {
  auto it = frames_.find(id);
  if (it != frames_.end() && --it->second.second == 0) frames_.erase(it);
}

void ReplayBuffer::copy_frame(std::int64_t id, double* out) const {
  const auto& f = frames_.at(id).first;
  for (std::size_t k = 0; k < obs_dim_; ++k) out[k] = f[k];
}

void ReplayBuffer::push(const Transition& t) {
  Slot& s = slots_[cursor_];
  if (count_ == capacity_) {
    release_frame(s.obs_frame);
    release_frame(s.next_frame);
  }
  s.obs_frame = store_frame(t.obs);
  s.next_frame = store_frame(t.next_obs);
  s.action = t.action;
  s.reward = t.reward;
  s.done = t.done;
  cursor_ = (cursor_ + 1) % capacity_;
  count_ = std::min(count_ + 1, capacity_);
}

Transition ReplayBuffer::get(std::size_t i) const {
  if (i >= count_) throw std::out_of_range("replay index out of range");
  const std::size_t idx = (cursor_ + capacity_ - count_ + i) % capacity_;
  const Slot& s = slots_[idx];
  Transition t;
  t.obs.resize(obs_dim_);
  t.next_obs.resize(obs_dim_);
  copy_frame(s.obs_frame, t.obs.data());
  copy_frame(s.next_frame, t.next_obs.data());
  t.action = s.action;
  t.reward = s.reward;
  t.done = s.done;
  return t;
}

Batch ReplayBuffer::sample(std::size_t batch, std::mt19937_64& rng) const {
  if (batch > count_) throw std::invalid_argument("not enough transitions to sample a batch");
  // Floyd's algorithm: `batch` distinct indices from [0, count_).
  std::vector<std::size_t> picked;
  picked.reserve(batch);
  std::unordered_set<std::size_t> seen;
  for (std::size_t j = count_ - batch; j < count_; ++j) {
    std::uniform_int_distribution<std::size_t> dist(0, j);
    std::size_t r = dist(rng);
    if (seen.contains(r)) r = j;
    seen.insert(r);
    picked.push_back(r);
  }

  Batch b;
  const auto dim = static_cast<Eigen::Index>(obs_dim_);
  const auto cols = static_cast<Eigen::Index>(batch);
  b.obs.resize(dim, cols);
  b.next_obs.resize(dim, cols);
  b.actions.resize(batch);
  b.rewards.resize(batch);
  b.done.resize(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    const Slot& s = slots_[picked[i]];
    copy_frame(s.obs_frame, b.obs.col(static_cast<Eigen::Index>(i)).data());
    copy_frame(s.next_frame, b.next_obs.col(static_cast<Eigen::Index>(i)).data());
    b.actions[i] = s.action;
    b.rewards[i] = s.reward;
    b.done[i] = s.done;
  }
  return b;
}

double train_step(MlpParams& params, AdamState& adam, const ReplayBuffer& buffer,
                  const MlpParams& target, const AgentConfig& cfg, std::mt19937_64& rng) {
  const Batch batch = buffer.sample(static_cast<std::size_t>(cfg.batch), rng);
  const std::vector<double> y = td_targets(batch, target, cfg.gamma);
  MlpParams grad;
  const double loss = td_loss_and_gradient(params, batch.obs, batch.actions, y, grad);
  clip_gradients(grad, cfg.max_grad_norm);
  adam_update(params, adam, grad, cfg.lr);
  return loss;
}

bool target_sync(const MlpParams& params, MlpParams& target, std::int64_t step_counter,
                 std::int64_t interval) {
  if (interval <= 0) throw std::invalid_argument("target sync interval must be positive");
  if (step_counter > 0 && step_counter % interval == 0) {
    target = params;
    return true;
  }
  return false;
}

}  // namespace efrl
