#include "efrl/config.hpp"

#include "efrl/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

namespace efrl {

namespace pt = boost::property_tree;

Profile parse_profile(std::string_view name) {
  if (name == "paper") return Profile::Paper;
  if (name == "ci") return Profile::Ci;
  throw ConfigError("unknown profile '" + std::string(name) + "' (expected paper or ci)");
}

std::string_view to_string(Profile p) { return p == Profile::Paper ? "paper" : "ci"; }

RunConfig RunConfig::for_profile(Profile p) {
  RunConfig c;
  c.profile = p;
  if (p == Profile::Ci) {
    c.coarse_n = 32;
    c.fine_n = 128;
    c.t_final = 0.5;
    c.episodes = 20;
    c.checkpoint_every = 5;
    c.snapshot_times = {0.125, 0.25, 0.5};
    c.spectrum_k = {8, 16};
    c.out_dir = "runs/ci";
  }
  return c;
}

int RunConfig::total_steps() const {
  if (!(dt > 0.0) || !(t_final > 0.0)) throw ConfigError("dt and t_final must be positive");
  const double n = t_final / dt;
  const double r = std::round(n);
  if (std::abs(n - r) > 1e-9 * std::max(1.0, r)) throw ConfigError("t_final / dt must be an integer");
  return static_cast<int>(r);
}

FluidParams RunConfig::fine_fluid() const {
  return FluidParams::from_reynolds(re, dt * static_cast<double>(coarse_n) / fine_n);
}

EpisodeConfig RunConfig::episode() const {
  return EpisodeConfig::for_variant(variant, total_steps(), agent.gamma);
}

AgentConfig RunConfig::resolved_agent() const {
  AgentConfig a = agent;
  a.target_update_interval = static_cast<std::int64_t>(target_update_factor) * n_train();
  return a;
}

int RunConfig::reference_steps(Variant v) const {
  switch (v) {
    case Variant::DD: return n_train();
    case Variant::DD_RAND: return n_train() + n_rand_train();
    case Variant::DF:
    case Variant::SP_DF: return 0;
  }
  return 0;
}

void RunConfig::validate() const {
  const GridSpec c = coarse_grid();
  const GridSpec f = fine_grid();
  if (f.n < c.n || f.n % c.n != 0) throw ConfigError("fine grid size must be a multiple of the coarse size");
  if (!(re > 0.0)) throw ConfigError("re must be positive");
  const int n = total_steps();
  if (n < 10) throw ConfigError("need at least 10 time steps");
  if (!(initial_energy >= 0.0)) throw ConfigError("initial energy must be non-negative");
  if (!(k_peak > 0.0)) throw ConfigError("k_peak must be positive");
  if (episodes <= 0) throw ConfigError("episodes must be positive");
  if (checkpoint_every <= 0) throw ConfigError("checkpoint_every must be positive");
  if (target_update_factor <= 0) throw ConfigError("target_update_factor must be positive");
  for (double t : snapshot_times) {
    if (!(t >= 0.0 && t <= t_final)) throw ConfigError("snapshot times must lie in [0, t_final]");
  }
  for (int k : spectrum_k) {
    if (k < 1 || k > c.n / 2) throw ConfigError("spectrum K must lie in [1, coarse_n / 2]");
  }
  rewards.validate();
  resolved_agent().validate();
}

namespace {

// Shortest text that parses back to the same value.
template <typename T>
std::string format_value(const T& v) {
  if constexpr (std::is_floating_point_v<T>) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
  } else {
    std::ostringstream os;
    os << v;
    return os.str();
  }
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_value(v[i]);
  return out;
}

template <typename T>
std::vector<T> split(const std::string& s, const std::string& key) {
  std::vector<T> out;
  std::string spaced = s;
  std::replace(spaced.begin(), spaced.end(), ',', ' ');
  std::istringstream is(spaced);
  T v{};
  while (is >> v) out.push_back(v);
  if (!is.eof() || out.empty()) throw ConfigError("cannot parse list '" + s + "' for " + key);
  return out;
}

std::string grad_form_name(GradTermForm f) {
  return f == GradTermForm::ScaledDifference ? "difference" : "current";
}

GradTermForm parse_grad_form(const std::string& s) {
  if (s == "difference") return GradTermForm::ScaledDifference;
  if (s == "current") return GradTermForm::ScaledCurrent;
  throw ConfigError("reward.grad_form must be 'difference' or 'current'");
}

// Visits every key with a reader/writer pair so parsing and dumping share one table.
template <typename Visitor>
void visit(RunConfig& c, Visitor&& f) {
  f("grid.coarse", c.coarse_n);
  f("grid.fine", c.fine_n);
  f("grid.side", c.side);
  f("flow.re", c.re);
  f("flow.dt", c.dt);
  f("flow.t_final", c.t_final);
  f("init.k_peak", c.k_peak);
  f("init.energy", c.initial_energy);
  f("init.seed", c.init_seed);
  f("train.episodes", c.episodes);
  f("train.checkpoint_every", c.checkpoint_every);
  f("train.target_update_factor", c.target_update_factor);
  f("agent.gamma", c.agent.gamma);
  f("agent.lr", c.agent.lr);
  f("agent.batch", c.agent.batch);
  f("agent.max_grad_norm", c.agent.max_grad_norm);
  f("agent.replay_capacity", c.agent.replay_capacity);
  f("agent.eps_start", c.agent.eps_start);
  f("agent.eps_end", c.agent.eps_end);
  f("agent.eps_fraction", c.agent.eps_fraction);
  f("agent.train_freq", c.agent.train_freq);
  f("agent.learning_starts", c.agent.learning_starts);
  f("agent.seed", c.agent.seed);
  f("reward.alpha", c.rewards.alpha);
  f("reward.alpha_res", c.rewards.alpha_res);
  f("reward.alpha_grad", c.rewards.alpha_grad);
  f("reward.alpha_energy", c.rewards.alpha_energy);
  f("reward.alpha_enstrophy", c.rewards.alpha_enstrophy);
  f("output.dir", c.out_dir);
}

const std::set<std::string> kListKeys = {"agent.hidden", "eval.snapshot_times", "eval.spectrum_k",
                                         "train.variant", "reward.grad_form", "run.profile"};

}  // namespace

RunConfig parse_config(const std::string& ini_text, Profile base) {
  pt::ptree tree;
  try {
    std::istringstream is(ini_text);
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }

  // An explicit [run] profile in the file picks the base defaults.
  if (auto p = tree.get_optional<std::string>("run.profile")) base = parse_profile(*p);
  RunConfig c = RunConfig::for_profile(base);

  std::set<std::string> known = kListKeys;
  visit(c, [&](const std::string& key, auto& field) {
    known.insert(key);
    using T = std::decay_t<decltype(field)>;
    if (auto v = tree.get_optional<std::string>(key)) {
      if constexpr (std::is_same_v<T, std::string>) {
        field = *v;
      } else {
        std::istringstream is(*v);
        T parsed{};
        if (!(is >> parsed) || !(is >> std::ws).eof()) {
          throw ConfigError("invalid value '" + *v + "' for " + key);
        }
        field = parsed;
      }
    }
  });
  if (auto v = tree.get_optional<std::string>("agent.hidden")) c.agent.hidden = split<int>(*v, "agent.hidden");
  if (auto v = tree.get_optional<std::string>("eval.snapshot_times")) {
    c.snapshot_times = split<double>(*v, "eval.snapshot_times");
  }
  if (auto v = tree.get_optional<std::string>("eval.spectrum_k")) c.spectrum_k = split<int>(*v, "eval.spectrum_k");
  if (auto v = tree.get_optional<std::string>("train.variant")) c.variant = parse_variant(*v);
  if (auto v = tree.get_optional<std::string>("reward.grad_form")) c.rewards.grad_form = parse_grad_form(*v);

  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ConfigError("key outside a section: " + section);
    for (const auto& [key, value] : body) {
      if (!known.contains(section + "." + key)) throw ConfigError("unknown config key " + section + "." + key);
    }
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path, Profile base) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), base);
}

std::string dump_config(const RunConfig& cfg) {
  RunConfig c = cfg;
  pt::ptree tree;
  tree.put("run.profile", std::string(to_string(c.profile)));
  visit(c, [&](const std::string& key, auto& field) { tree.put(key, format_value(field)); });
  tree.put("agent.hidden", join(c.agent.hidden));
  tree.put("train.variant", std::string(to_string(c.variant)));
  tree.put("reward.grad_form", grad_form_name(c.rewards.grad_form));
  tree.put("eval.snapshot_times", join(c.snapshot_times));
  tree.put("eval.spectrum_k", join(c.spectrum_k));
  std::ostringstream os;
  pt::write_ini(os, tree);
  return os.str();
}

}  // namespace efrl
