#include "efrl/experiment.hpp"

#include "efrl/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>

namespace efrl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void emit(const LogFn& log, const std::string& msg) {
  if (log) log(msg);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path.string());
  os.precision(17);
  return os;
}

void write_text(const fs::path& path, const std::string& text) {
  auto os = open_out(path);
  os << text;
}

std::string fmt_time(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", t);
  return buf;
}

}  // namespace

InitialConditions make_initial_conditions(const RunConfig& cfg) {
  InitialConditions ic;
  ic.fine = init_decaying_turbulence(cfg.fine_grid(), peaked_spectrum(cfg.k_peak), cfg.initial_energy,
                                     cfg.init_seed);
  ic.coarse = filtered_dns_project(ic.fine, cfg.coarse_grid());
  return ic;
}

void run_dns(const RunConfig& cfg, const VelocityField& fine_initial, int coarse_steps,
             const std::function<void(int, const VelocityField&)>& on_step, const LogFn& log) {
  const FluidParams fp = cfg.fine_fluid();
  const int ratio = cfg.fine_n / cfg.coarse_n;
  const GridSpec coarse = cfg.coarse_grid();
  const double e0 = kinetic_energy(fine_initial);
  VelocityField u = fine_initial;
  for (int k = 1; k <= coarse_steps; ++k) {
    for (int sub = 0; sub < ratio; ++sub) {
      const int fine_step = (k - 1) * ratio + sub + 1;
      bool bad = false;
      try {
        u = dns_step(u, fp);
        bad = is_blown_up(u, e0);
      } catch (const BlowUpError&) {
        bad = true;
      }
      if (bad) {
        throw BlowUpError("DNS blew up at fine step " + std::to_string(fine_step) + " (t = " +
                          std::to_string(fine_step * fp.dt) + ")");
      }
    }
    on_step(k, filtered_dns_project(u, coarse));
    if (k % 100 == 0 || k == coarse_steps) {
      emit(log, "dns: coarse step " + std::to_string(k) + "/" + std::to_string(coarse_steps) +
                    " energy " + std::to_string(kinetic_energy(u)));
    }
  }
}

ReferenceStore build_reference(const RunConfig& cfg, int coarse_steps, const LogFn& log) {
  const InitialConditions ic = make_initial_conditions(cfg);
  ReferenceStore store(cfg.coarse_grid(), cfg.dt);
  run_dns(cfg, ic.fine, coarse_steps, [&](int, const VelocityField& u) { store.push(u); }, log);
  return store;
}

fs::path cmd_gen_dns(const RunConfig& cfg, const LogFn& log) {
  cfg.validate();
  const int count = std::max(cfg.reference_steps(cfg.variant), cfg.n_train());
  const fs::path dir = fs::path(cfg.out_dir) / "reference";
  emit(log, "gen-dns: " + std::to_string(cfg.fine_n) + "^2 DNS for " + std::to_string(count) +
                " coarse steps into " + dir.string());
  const ReferenceStore store = build_reference(cfg, count, log);
  store.save(dir);
  fs::create_directories(cfg.out_dir);
  write_text(fs::path(cfg.out_dir) / "config.ini", dump_config(cfg));
  return dir;
}

TrainResult train_agent(const RunConfig& cfg, const ReferenceStore* refs, const fs::path& out_dir,
                        const LogFn& log) {
  cfg.validate();
  const AgentConfig agent = cfg.resolved_agent();
  const InitialConditions ic = make_initial_conditions(cfg);
  const EnvContext ctx = make_env_context(ic.coarse, cfg.fluid(), cfg.rewards, cfg.episode(),
                                          needs_reference(cfg.variant) ? refs : nullptr);
  const std::int64_t start_window = cfg.n_train();

  const int obs_dim = static_cast<int>(2 * cfg.coarse_grid().size());
  std::vector<int> sizes{obs_dim};
  sizes.insert(sizes.end(), agent.hidden.begin(), agent.hidden.end());
  sizes.push_back(kNumActions);

  // Separate streams so that changing one consumer does not shift the others.
  std::mt19937_64 init_rng(agent.seed ^ 0x1badb002u);
  std::mt19937_64 act_rng(agent.seed ^ 0x5eed0001u);
  std::mt19937_64 replay_rng(agent.seed ^ 0x5eed0002u);
  std::mt19937_64 env_rng(agent.seed ^ 0x5eed0003u);

  TrainResult result;
  result.params = MlpParams::random(sizes, init_rng);
  result.adam = AdamState::for_params(result.params);
  MlpParams target = result.params;
  ReplayBuffer buffer(agent.replay_capacity, static_cast<std::size_t>(obs_dim));
  const std::size_t min_fill = std::max<std::size_t>(static_cast<std::size_t>(agent.batch), agent.learning_starts);
  const std::int64_t budget = static_cast<std::int64_t>(cfg.episodes) * ctx.episode.n_train;

  std::ofstream ep_log, step_log;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    ep_log = open_out(out_dir / "train_log.csv");
    ep_log << "episode,start_step,steps,reward_sum,discounted_return,mean_loss,epsilon,blown_up\n";
    step_log = open_out(out_dir / "train_steps.csv");
    step_log << "episode,step,t,action,delta,reward,res,grad_norm,energy,enstrophy\n";
  }

  std::int64_t global_step = 0;
  for (int ep = 1; ep <= cfg.episodes; ++ep) {
    ResetResult reset = env_reset(ctx, env_rng, start_window);
    EpisodeState state = std::move(reset.state);
    Observation obs = std::move(reset.obs);
    std::vector<double> rewards;
    double loss_sum = 0.0;
    int loss_count = 0;
    double eps = 0.0;
    while (!state.done) {
      eps = epsilon_at(agent, global_step, budget);
      const int action = select_action(result.params, obs, eps, act_rng);
      StepInfo info;
      Transition tr = env_step(ctx, state, action, &info);
      buffer.push(tr);
      ++global_step;
      rewards.push_back(tr.reward);
      if (buffer.size() >= min_fill && global_step % agent.train_freq == 0) {
        loss_sum += train_step(result.params, result.adam, buffer, target, agent, replay_rng);
        ++loss_count;
      }
      target_sync(result.params, target, global_step, agent.target_update_interval);
      if (step_log.is_open()) {
        step_log << ep << ',' << state.solver.step_index << ',' << state.solver.t << ',' << action << ','
                 << info.delta << ',' << tr.reward << ',' << info.res << ',' << info.grad_norm << ','
                 << info.energy << ',' << info.enstrophy << '\n';
      }
      obs = std::move(tr.next_obs);
    }
    const Return ret = cumulative_return(rewards, agent.gamma);
    EpisodeRecord rec;
    rec.episode = ep;
    rec.start_step = state.start_step;
    rec.steps = state.steps_taken;
    rec.reward_sum = ret.plain;
    rec.discounted = ret.discounted;
    rec.mean_loss = loss_count > 0 ? loss_sum / loss_count : 0.0;
    rec.epsilon = eps;
    rec.blown_up = state.solver.blown_up;
    result.episodes.push_back(rec);
    if (ep_log.is_open()) {
      ep_log << rec.episode << ',' << rec.start_step << ',' << rec.steps << ',' << rec.reward_sum << ','
             << rec.discounted << ',' << rec.mean_loss << ',' << rec.epsilon << ',' << (rec.blown_up ? 1 : 0)
             << '\n';
      ep_log.flush();
    }
    emit(log, "train: episode " + std::to_string(ep) + "/" + std::to_string(cfg.episodes) + " steps " +
                  std::to_string(rec.steps) + " reward " + std::to_string(rec.reward_sum) + " loss " +
                  std::to_string(rec.mean_loss) + " eps " + std::to_string(eps) +
                  (rec.blown_up ? " (blow-up)" : ""));
    if (!out_dir.empty() && ep % cfg.checkpoint_every == 0 && ep != cfg.episodes) {
      char name[48];
      std::snprintf(name, sizeof name, "checkpoint_ep%04d.efdq", ep);
      save_checkpoint(out_dir / name, result.params, result.adam,
                      {{"seed", std::to_string(agent.seed)},
                       {"episodes", std::to_string(ep)},
                       {"total_steps", std::to_string(global_step)},
                       {"variant", std::string(to_string(cfg.variant))}});
    }
  }
  result.total_steps = global_step;
  return result;
}

TrainResult cmd_train(const RunConfig& cfg, const LogFn& log) {
  cfg.validate();
  const fs::path out(cfg.out_dir);
  std::optional<ReferenceStore> refs;
  if (needs_reference(cfg.variant)) {
    const fs::path dir = out / "reference";
    if (!fs::exists(dir / "index")) {
      throw ConfigError("variant " + std::string(to_string(cfg.variant)) + " needs " + dir.string() +
                        "; run gen-dns first");
    }
    refs = ReferenceStore::load(dir);
    const int needed = cfg.reference_steps(cfg.variant);
    if (refs->count() < needed) {
      throw ConfigError("reference store has " + std::to_string(refs->count()) + " steps, " +
                        std::to_string(needed) + " needed");
    }
  }
  fs::create_directories(out);
  write_text(out / "config.ini", dump_config(cfg));
  TrainResult r = train_agent(cfg, refs ? &*refs : nullptr, out, log);
  save_checkpoint(out / "agent.efdq", r.params, r.adam,
                  {{"seed", std::to_string(cfg.agent.seed)},
                   {"episodes", std::to_string(cfg.episodes)},
                   {"total_steps", std::to_string(r.total_steps)},
                   {"variant", std::string(to_string(cfg.variant))}});
  return r;
}

const MethodSummary& EvalResult::find(const std::string& name) const {
  for (const auto& s : summary) {
    if (s.name == name) return s;
  }
  throw std::out_of_range("no method named " + name);
}

namespace {

void record(MethodTrace& m, const VelocityField& u, double t, double delta, int action) {
  m.time.push_back(t);
  m.energy.push_back(kinetic_energy(u));
  m.enstrophy.push_back(enstrophy(u));
  m.grad_norm.push_back(grad_norm(u));
  m.delta.push_back(delta);
  m.actions.push_back(action);
  m.spectra.push_back(energy_spectrum(u, t));
}

MethodSummary score(const MethodTrace& m, const MethodTrace& ref, const std::vector<int>& ks) {
  MethodSummary s;
  s.name = m.name;
  s.blown_up = m.blown_up;
  // Index 0 is the shared initial condition; score steps 1..completed.
  const std::size_t n = std::min(m.energy.size(), ref.energy.size());
  s.steps_completed = static_cast<std::int64_t>(n) - 1;
  if (n <= 1) {
    s.err_energy = std::numeric_limits<double>::infinity();
    return s;
  }
  s.err_energy = err_energy(std::span(m.energy).subspan(1, n - 1), std::span(ref.energy).subspan(1, n - 1));
  for (int k : ks) {
    s.err_spectrum[k] =
        err_spectrum_detail(std::span(m.spectra).subspan(1, n - 1), std::span(ref.spectra).subspan(1, n - 1), k);
  }
  return s;
}

}  // namespace

EvalResult evaluate(const RunConfig& cfg, const MlpParams* policy, const LogFn& log) {
  cfg.validate();
  const int N = cfg.total_steps();
  const InitialConditions ic = make_initial_conditions(cfg);
  const FluidParams fp = cfg.fluid();

  EvalResult res;
  res.reference.name = "dns";
  record(res.reference, ic.coarse, 0.0, 0.0, -1);
  ReferenceStore refs(cfg.coarse_grid(), cfg.dt);
  run_dns(cfg, ic.fine, N, [&](int k, const VelocityField& u) {
    record(res.reference, u, k * cfg.dt, 0.0, -1);
    if (policy != nullptr && needs_reference(cfg.variant)) refs.push(u);
  }, log);

  if (policy != nullptr) {
    if (policy->input_dim() != static_cast<int>(2 * cfg.coarse_grid().size())) {
      throw ShapeError("checkpoint input width does not match the coarse grid");
    }
    EpisodeConfig ep = cfg.episode();
    ep.n_train = N;
    ep.random_start = false;
    const EnvContext ctx = make_env_context(ic.coarse, fp, cfg.rewards, ep,
                                            needs_reference(cfg.variant) ? &refs : nullptr);
    MethodTrace m;
    m.name = "rl-ef";
    std::mt19937_64 unused;
    ResetResult r = env_reset(ctx, unused);
    record(m, r.state.solver.u, 0.0, 0.0, -1);
    Observation obs = std::move(r.obs);
    while (!r.state.done) {
      const int a = greedy_action(q_forward(*policy, obs));
      Transition tr = env_step(ctx, r.state, a);
      if (r.state.solver.blown_up) {
        m.blown_up = true;
        m.blowup_step = r.state.solver.step_index;
        break;
      }
      record(m, r.state.solver.u, r.state.solver.t, ctx.actions.decode(a), a);
      obs = std::move(tr.next_obs);
    }
    emit(log, std::string("eval: rl-ef ") + (m.blown_up ? "blew up" : "completed"));
    res.methods.push_back(std::move(m));
  }

  auto baseline = [&](const std::string& name, std::optional<double> delta) {
    MethodTrace m;
    m.name = name;
    SolverState s = SolverState::initial(ic.coarse);
    record(m, s.u, 0.0, 0.0, -1);
    for (int k = 1; k <= N; ++k) {
      s = delta ? ef_step(s, *delta, fp) : noef_step(s, fp);
      if (s.blown_up) {
        m.blown_up = true;
        m.blowup_step = s.step_index;
        break;
      }
      record(m, s.u, s.t, delta.value_or(0.0), -1);
    }
    emit(log, "eval: " + name + (m.blown_up ? " blew up at step " + std::to_string(m.blowup_step) : " completed"));
    res.methods.push_back(std::move(m));
  };
  baseline("noef", std::nullopt);
  baseline("ef-eta", kolmogorov_scale(fp));

  for (const auto& m : res.methods) res.summary.push_back(score(m, res.reference, cfg.spectrum_k));
  return res;
}

void write_eval_outputs(const RunConfig& cfg, const EvalResult& result, const fs::path& dir) {
  fs::create_directories(dir);
  std::vector<const MethodTrace*> all{&result.reference};
  for (const auto& m : result.methods) all.push_back(&m);

  for (const MethodTrace* m : all) {
    auto os = open_out(dir / ("timeseries_" + m->name + ".csv"));
    os << "t,energy,enstrophy,grad_norm,delta\n";
    for (std::size_t i = 0; i < m->time.size(); ++i) {
      os << m->time[i] << ',' << m->energy[i] << ',' << m->enstrophy[i] << ',' << m->grad_norm[i] << ','
         << m->delta[i] << '\n';
    }
    for (double t : cfg.snapshot_times) {
      const auto idx = static_cast<std::size_t>(std::llround(t / cfg.dt));
      if (idx >= m->spectra.size()) continue;  // blown up before this time
      auto sp = open_out(dir / ("spectrum_" + m->name + "_t" + fmt_time(t) + ".csv"));
      sp << "k,energy\n";
      const SpectrumStats& s = m->spectra[idx];
      for (int k = 1; k <= s.resolved_shells(); ++k) sp << k << ',' << s.at(k) << '\n';
    }
  }

  for (const auto& m : result.methods) {
    if (m.name != "rl-ef") continue;
    auto os = open_out(dir / "actions.csv");
    os << "step,t,action,delta\n";
    std::vector<int> hist(kNumActions, 0);
    for (std::size_t i = 1; i < m.time.size(); ++i) {
      os << i << ',' << m.time[i] << ',' << m.actions[i] << ',' << m.delta[i] << '\n';
      ++hist[static_cast<std::size_t>(m.actions[i])];
    }
    const ActionSpace space = build_action_space();
    auto hs = open_out(dir / "action_histogram.csv");
    hs << "action,delta,count,frequency\n";
    const double total = std::max<double>(1.0, static_cast<double>(m.time.size() - 1));
    for (int a = 0; a < kNumActions; ++a) {
      hs << a << ',' << space.decode(a) << ',' << hist[static_cast<std::size_t>(a)] << ','
         << hist[static_cast<std::size_t>(a)] / total << '\n';
    }
  }

  json j;
  j["coarse_n"] = cfg.coarse_n;
  j["fine_n"] = cfg.fine_n;
  j["dt"] = cfg.dt;
  j["steps"] = cfg.total_steps();
  j["variant"] = std::string(to_string(cfg.variant));
  j["methods"] = json::array();
  for (const auto& s : result.summary) {
    json m;
    m["name"] = s.name;
    m["blown_up"] = s.blown_up;
    m["steps_completed"] = s.steps_completed;
    m["err_energy"] = std::isfinite(s.err_energy) ? json(s.err_energy) : json(nullptr);
    for (const auto& [k, e] : s.err_spectrum) {
      m["err_spectrum"][std::to_string(k)] = {
          {"signed", e.signed_value}, {"absolute", e.absolute_value}, {"excluded", e.excluded}};
    }
    j["methods"].push_back(m);
  }
  write_text(dir / "summary.json", j.dump(2) + "\n");
}

EvalResult cmd_eval(const RunConfig& cfg, const fs::path& checkpoint, const LogFn& log) {
  cfg.validate();
  const int obs_dim = static_cast<int>(2 * cfg.coarse_grid().size());
  const Checkpoint cp = load_checkpoint(checkpoint, obs_dim);
  EvalResult r = evaluate(cfg, &cp.params, log);
  const fs::path dir = fs::path(cfg.out_dir) / "eval";
  write_eval_outputs(cfg, r, dir);
  write_text(dir / "config.ini", dump_config(cfg));
  return r;
}

std::string cmd_compare(const std::vector<fs::path>& runs, const fs::path& out) {
  if (runs.empty()) throw ConfigError("compare needs at least one run directory");
  std::ostringstream csv;
  csv.precision(10);
  json table = json::array();
  std::set<int> ks;
  std::vector<std::pair<std::string, json>> loaded;
  json first;
  for (const auto& run : runs) {
    fs::path p = run / "eval" / "summary.json";
    if (!fs::exists(p)) p = run / "summary.json";
    std::ifstream is(p);
    if (!is) throw ConfigError("no summary.json under " + run.string());
    json j;
    try {
      is >> j;
    } catch (const json::exception& e) {
      throw FormatError("malformed " + p.string() + ": " + e.what());
    }
    if (first.is_null()) {
      first = j;
    } else if (j.at("coarse_n") != first.at("coarse_n") || j.at("steps") != first.at("steps") ||
               j.at("dt") != first.at("dt")) {
      throw ConfigError("run " + run.string() + " uses a different grid or time window");
    }
    for (const auto& m : j.at("methods")) {
      if (m.contains("err_spectrum")) {
        for (const auto& [k, v] : m.at("err_spectrum").items()) ks.insert(std::stoi(k));
      }
    }
    loaded.emplace_back(run.string(), j);
  }

  csv << "run,method,blown_up,steps_completed,err_energy";
  for (int k : ks) csv << ",err_spectrum_K" << k << ",err_spectrum_abs_K" << k;
  csv << '\n';
  for (const auto& [run, j] : loaded) {
    for (const auto& m : j.at("methods")) {
      csv << run << ',' << m.at("name").get<std::string>() << ',' << (m.at("blown_up").get<bool>() ? 1 : 0) << ','
          << m.at("steps_completed").get<long long>() << ',';
      if (m.at("err_energy").is_null()) {
        csv << "inf";
      } else {
        csv << m.at("err_energy").get<double>();
      }
      json row = {{"run", run}, {"method", m.at("name")}, {"blown_up", m.at("blown_up")},
                  {"steps_completed", m.at("steps_completed")}, {"err_energy", m.at("err_energy")}};
      for (int k : ks) {
        const std::string key = std::to_string(k);
        if (m.contains("err_spectrum") && m.at("err_spectrum").contains(key)) {
          const auto& e = m.at("err_spectrum").at(key);
          csv << ',' << e.at("signed").get<double>() << ',' << e.at("absolute").get<double>();
          row["err_spectrum"][key] = e;
        } else {
          csv << ",,";
        }
      }
      csv << '\n';
      table.push_back(row);
    }
  }
  if (!out.empty()) {
    fs::create_directories(out);
    write_text(out / "compare.csv", csv.str());
    write_text(out / "compare.json", table.dump(2) + "\n");
  }
  return csv.str();
}

}  // namespace efrl
