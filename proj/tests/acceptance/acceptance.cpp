// Acceptance suite: one [PASS]/[FAIL] line per criterion. Tolerances are fixed
// here and not configurable. --expect-fail lists criteria known to fail; the
// line is still printed as [FAIL] but the exit status treats it as expected,
// and an unexpected pass of such a criterion is an error.

#include "efrl/config.hpp"
#include "efrl/dqn.hpp"
#include "efrl/env.hpp"
#include "efrl/experiment.hpp"
#include "efrl/metrics.hpp"
#include "efrl/rewards.hpp"
#include "efrl/solver.hpp"

#include "oracles.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace efrl;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool verbose = false;

void note(const std::string& s) {
  if (verbose) std::cerr << "  " << s << '\n';
}

// ---------------------------------------------------------------------------

Outcome filter_transfer() {
  constexpr double tol = 1e-12;
  const GridSpec g(64);
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> pick(-g.n / 2 + 1, g.n / 2 - 1);
  std::uniform_real_distribution<double> amp(0.1, 2.0), phase(0.0, 2 * std::numbers::pi);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    int mx = 0, my = 0;
    while (mx == 0 && my == 0) {
      mx = pick(rng);
      my = pick(rng);
    }
    const VelocityField u = oracle::single_mode(g, mx, my, amp(rng), phase(rng));
    const double a0 = oracle::mode_amplitude(u, mx, my);
    const double k2 = 4 * std::numbers::pi * std::numbers::pi * (mx * mx + my * my);
    for (double delta : {0.0, 1e-7, 1e-5, 1e-3}) {
      const double ratio = oracle::mode_amplitude(differential_filter(u, delta), mx, my) / a0;
      worst = std::max(worst, std::abs(ratio - 1.0 / (1.0 + 2 * delta * delta * k2)));
    }
  }
  return {worst <= tol, fmt("max |ratio - 1/(1+2 delta^2 k^2)| = %.3e over 20 modes x 4 radii (tol %.0e)", worst, tol)};
}

Outcome divergence_preservation() {
  constexpr double tol = 1e-10;
  const RunConfig cfg = RunConfig::for_profile(Profile::Ci);
  const FluidParams p = cfg.fluid();
  const double eta = kolmogorov_scale(p);
  SolverState s = SolverState::initial(make_initial_conditions(cfg).coarse);
  double worst = max_divergence(s.u);
  int steps = 0;
  for (; steps < 500; ++steps) {
    s = ef_step(s, eta, p);
    if (s.blown_up) break;
    worst = std::max(worst, max_divergence(s.u));
  }
  const bool ok = !s.blown_up && worst <= tol;
  return {ok, fmt("%d/500 EF(eta) steps on %dx%d, max divergence %.3e (tol %.0e)%s", steps, cfg.coarse_n,
                  cfg.coarse_n, worst, tol, s.blown_up ? ", blew up" : "")};
}

Outcome evolve_accuracy() {
  const GridSpec g(16);
  VelocityField u0(g);
  for (int iy = 0; iy < g.n; ++iy) {
    for (int ix = 0; ix < g.n; ++ix) {
      const double x = ix * g.dx(), y = iy * g.dx();
      u0.ux(ix, iy) = std::sin(2 * std::numbers::pi * x) * std::cos(2 * std::numbers::pi * y);
      u0.uy(ix, iy) = -std::cos(2 * std::numbers::pi * x) * std::sin(2 * std::numbers::pi * y);
    }
  }
  auto error_at = [&](double dt) {
    const FluidParams p = FluidParams::from_reynolds(100.0, dt);
    VelocityField u = u0;
    const int steps = static_cast<int>(std::lround(0.1 / dt));
    for (int k = 0; k < steps; ++k) u = evolve_step(u, p);
    const double decay = std::exp(-p.nu * 8 * std::numbers::pi * std::numbers::pi * 0.1);
    return std::abs(oracle::mode_amplitude(u, 1, 1) - decay * oracle::mode_amplitude(u0, 1, 1));
  };
  const double e1 = error_at(1e-2), e2 = error_at(5e-3);
  const double ratio = e1 / e2;
  return {ratio >= 1.8 && ratio <= 2.2,
          fmt("Taylor-Green amplitude error %.3e (dt) / %.3e (dt/2) = %.4f (want [1.8, 2.2])", e1, e2, ratio)};
}

Outcome reward_algebra() {
  constexpr double tol = 1e-12;
  const RewardParams rp;
  double worst = 0.0;
  auto track = [&](double got, double want) { worst = std::max(worst, std::abs(got - want)); };
  track(reward_map(0.0, rp.alpha), 1.0);
  track(reward_map(rp.alpha * std::log(2.0), rp.alpha), 0.0);
  track(reward_map(0.5 * std::log(2.0), 0.5), 0.0);

  StepDiagnostics d;
  d.grad_prev = d.grad_now = 3.0;
  track(reward_df(d, rp), 0.0);
  d.grad_now = 3.0 + 1e300;
  track(reward_df(d, rp), 1.0);

  d.energy_prev = 1.0;
  d.energy_now = 0.95;
  d.enstrophy_prev = 2.0;
  d.enstrophy_now = 1.5;
  track(reward_sp(d, rp, 0.25), 0.25);
  track(growth_penalty(1.1, 1.0, 0.1), std::exp(-1.0) - 1.0);
  d.energy_now = 1.1;
  track(reward_sp(d, rp, 0.25), 0.25 + std::exp(-1.0) - 1.0);
  d.enstrophy_now = 2.2;
  track(reward_sp(d, rp, 0.25), 0.25 + 2 * (std::exp(-1.0) - 1.0));
  return {worst <= tol, fmt("max deviation from closed forms %.3e over 9 identities (tol %.0e)", worst, tol)};
}

Outcome metric_oracles() {
  constexpr double parseval_tol = 1e-10, brute_tol = 1e-12;
  std::mt19937_64 rng(55);
  double parseval = 0.0;
  for (int i = 0; i < 100; ++i) {
    const VelocityField u = oracle::random_velocity(GridSpec(i % 2 == 0 ? 32 : 16, 1.0 + 0.01 * i), rng);
    const double e = kinetic_energy(u);
    parseval = std::max(parseval, std::abs(energy_spectrum(u).total() - e) / e);
  }

  std::uniform_real_distribution<double> pos(0.1, 10.0);
  double brute_e = 0.0, brute_s = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 50 + 10 * static_cast<std::size_t>(trial);
    std::vector<double> a(n), r(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = pos(rng);
      r[i] = pos(rng);
    }
    const double got = err_energy(a, r), want = oracle::err_energy(a, r);
    brute_e = std::max(brute_e, std::abs(got - want) / std::max(1.0, std::abs(want)));

    const int K = 4 + trial % 8;
    std::vector<SpectrumStats> sa, sr;
    std::vector<std::vector<double>> ra, rr;
    for (int t = 0; t < 5; ++t) {
      SpectrumStats x, y;
      for (int k = 0; k <= K + 2; ++k) {
        x.energy.push_back(pos(rng));
        y.energy.push_back(pos(rng));
      }
      x.resolved = y.resolved = K + 2;
      ra.push_back(x.energy);
      rr.push_back(y.energy);
      sa.push_back(std::move(x));
      sr.push_back(std::move(y));
    }
    const double gs = err_spectrum(sa, sr, K), ws = oracle::err_spectrum(ra, rr, K);
    brute_s = std::max(brute_s, std::abs(gs - ws) / std::max(1.0, std::abs(ws)));
  }
  const bool ok = parseval <= parseval_tol && brute_e <= brute_tol && brute_s <= brute_tol;
  return {ok, fmt("Parseval rel %.3e on 100 fields (tol %.0e); err_energy %.3e, err_spectrum %.3e vs brute force "
                  "(tol %.0e)",
                  parseval, parseval_tol, brute_e, brute_s, brute_tol)};
}

bool bit_equal(const MlpParams& a, const MlpParams& b) {
  const auto fa = a.flatten(), fb = b.flatten();
  return a.sizes == b.sizes && fa.size() == fb.size() &&
         std::memcmp(fa.data(), fb.data(), fa.size() * sizeof(double)) == 0;
}

Outcome dqn_correctness() {
  // (a) gradients against central differences.
  constexpr double grad_tol = 1e-5;
  std::mt19937_64 rng(31);
  double grad_err = 0.0;
  const std::vector<std::vector<int>> nets{{3, 5, 2}, {4, 8, 8, 3}, {6, 16, 16, 50}};
  for (const auto& sizes : nets) {
    const MlpParams p = MlpParams::random(sizes, rng);
    const int B = 7;
    std::normal_distribution<double> nd(0.0, 1.0);
    std::uniform_int_distribution<int> act(0, sizes.back() - 1);
    Eigen::MatrixXd obs(sizes.front(), B);
    for (Eigen::Index i = 0; i < obs.size(); ++i) obs.data()[i] = nd(rng);
    std::vector<int> actions(B);
    std::vector<double> y(B);
    for (int j = 0; j < B; ++j) {
      actions[static_cast<std::size_t>(j)] = act(rng);
      y[static_cast<std::size_t>(j)] = nd(rng);
    }
    MlpParams grad;
    td_loss_and_gradient(p, obs, actions, y, grad);
    const auto g = grad.flatten();
    auto flat = p.flatten();
    MlpParams probe = p, scratch;
    double diff2 = 0.0, gn2 = 0.0, fn2 = 0.0;
    const double h = 1e-6;
    for (std::size_t i = 0; i < flat.size(); ++i) {
      const double keep = flat[i];
      flat[i] = keep + h;
      probe.unflatten(flat);
      const double lp = td_loss_and_gradient(probe, obs, actions, y, scratch);
      flat[i] = keep - h;
      probe.unflatten(flat);
      const double lm = td_loss_and_gradient(probe, obs, actions, y, scratch);
      flat[i] = keep;
      const double fd = (lp - lm) / (2 * h);
      diff2 += (fd - g[i]) * (fd - g[i]);
      gn2 += g[i] * g[i];
      fn2 += fd * fd;
    }
    grad_err = std::max(grad_err, std::sqrt(diff2 / std::max(gn2, fn2)));
  }

  // (b) two-state, two-action deterministic MDP: action a moves to state a.
  constexpr double q_tol = 0.05;
  const std::vector<std::vector<int>> next{{0, 1}, {0, 1}};
  const std::vector<std::vector<double>> reward{{0.0, 1.0}, {0.5, -0.2}};
  AgentConfig cfg;
  cfg.gamma = 0.9;
  cfg.lr = 1e-3;
  cfg.batch = 32;
  cfg.replay_capacity = 10000;
  const auto qstar = oracle::value_iteration(next, reward, cfg.gamma);
  std::mt19937_64 mdp_rng(7);
  MlpParams online = MlpParams::random({2, 32, 2}, mdp_rng);
  MlpParams target = online;
  AdamState adam = AdamState::for_params(online);
  ReplayBuffer buffer(cfg.replay_capacity, 2);
  auto one_hot = [](int s) { return Observation{s == 0 ? 1.0 : 0.0, s == 1 ? 1.0 : 0.0}; };
  const std::int64_t max_steps = 50000, sync = 250;
  int state = 0;
  double qerr = 0.0, qscale = 0.0;
  for (const auto& row : qstar) {
    for (double v : row) qscale = std::max(qscale, std::abs(v));
  }
  auto sup_error = [&] {
    double e = 0.0;
    for (int s = 0; s < 2; ++s) {
      const Eigen::VectorXd q = q_forward(online, one_hot(s));
      for (int a = 0; a < 2; ++a) e = std::max(e, std::abs(q(a) - qstar[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)]));
    }
    return e / qscale;
  };
  for (std::int64_t step = 1; step <= max_steps; ++step) {
    const int a = select_action(online, one_hot(state), 1.0, mdp_rng);
    const int s2 = next[static_cast<std::size_t>(state)][static_cast<std::size_t>(a)];
    buffer.push({one_hot(state), a, reward[static_cast<std::size_t>(state)][static_cast<std::size_t>(a)], one_hot(s2), false});
    state = s2;
    if (buffer.size() >= static_cast<std::size_t>(cfg.batch)) train_step(online, adam, buffer, target, cfg, mdp_rng);
    target_sync(online, target, step, sync);
    if (step % 10000 == 0) note(fmt("mdp step %lld: sup error %.4f", static_cast<long long>(step), sup_error()));
  }
  qerr = sup_error();

  // (c) target sync and checkpoint round trip.
  MlpParams copy = MlpParams::zeros(online.sizes);
  const bool synced = target_sync(online, copy, sync, sync) && bit_equal(copy, online);
  const auto path = std::filesystem::temp_directory_path() / "efrl_acceptance.efdq";
  save_checkpoint(path, online, adam, {{"purpose", "acceptance"}});
  const Checkpoint ck = load_checkpoint(path, 2);
  std::filesystem::remove(path);
  const bool roundtrip = bit_equal(ck.params, online) && bit_equal(ck.adam.m, adam.m) && bit_equal(ck.adam.v, adam.v) &&
                         ck.adam.step == adam.step && ck.metadata.at("purpose") == "acceptance";

  const bool ok = grad_err <= grad_tol && qerr <= q_tol && synced && roundtrip;
  return {ok, fmt("(a) grad rel err %.3e (tol %.0e); (b) sup |Q - Q*| / |Q*| = %.4f after %lld steps (tol %.2f); "
                  "(c) sync %s, checkpoint %s",
                  grad_err, grad_tol, qerr, static_cast<long long>(max_steps), q_tol, synced ? "exact" : "MISMATCH",
                  roundtrip ? "exact" : "MISMATCH")};
}

Outcome dichotomy() {
  constexpr double rel_tol = 1e-10;
  const RunConfig cfg = RunConfig::for_profile(Profile::Paper);
  const FluidParams p = cfg.fluid();
  const int N = cfg.total_steps();
  const VelocityField u0 = make_initial_conditions(cfg).coarse;

  SolverState s = SolverState::initial(u0);
  int noef_blowup = -1;
  for (int k = 1; k <= N; ++k) {
    s = noef_step(s, p);
    if (s.blown_up) {
      noef_blowup = k;
      break;
    }
  }

  const double eta = kolmogorov_scale(p);
  s = SolverState::initial(u0);
  double e_prev = kinetic_energy(s.u), worst_rise = 0.0;
  int increases = 0, first_increase = -1, ef_blowup = -1, completed = 0;
  for (int k = 1; k <= N; ++k) {
    s = ef_step(s, eta, p);
    if (s.blown_up) {
      ef_blowup = k;
      break;
    }
    completed = k;
    const double e = kinetic_energy(s.u);
    const double rise = (e - e_prev) / e_prev;
    if (rise > rel_tol) {
      ++increases;
      if (first_increase < 0) first_increase = k;
      worst_rise = std::max(worst_rise, rise);
    }
    e_prev = e;
  }
  const bool ok = noef_blowup > 0 && ef_blowup < 0 && increases == 0;
  std::string ef = ef_blowup > 0 ? fmt("blew up at step %d", ef_blowup) : fmt("completed %d steps", completed);
  return {ok, fmt("noEF %s; EF(eta=%.3e) %s, %d energy increases > %.0e (first at step %d, largest %.3e)",
                  noef_blowup > 0 ? fmt("blew up at step %d", noef_blowup).c_str() : "did not blow up", eta, ef.c_str(),
                  increases, rel_tol, first_increase, worst_rise)};
}

Outcome learned_policy(bool full) {
  const std::vector<std::uint64_t> seeds{0, 1, 2};
  RunConfig cfg = RunConfig::for_profile(full ? Profile::Paper : Profile::Ci);
  cfg.variant = Variant::DF;
  const LogFn log = verbose ? LogFn([](const std::string& s) { std::cerr << "  " << s << '\n'; }) : LogFn();
  std::ostringstream detail;
  int good = 0, better = 0;
  bool any_blowup = false;
  for (std::uint64_t seed : seeds) {
    cfg.agent.seed = seed;
    const TrainResult tr = train_agent(cfg, nullptr, {}, log);
    const EvalResult ev = evaluate(cfg, &tr.params, log);
    const MethodSummary& rl = ev.find("rl-ef");
    const MethodSummary& eta = ev.find("ef-eta");
    any_blowup = any_blowup || rl.blown_up;
    if (full) {
      const bool wins = !rl.blown_up && rl.err_energy < eta.err_energy;
      better += wins ? 1 : 0;
      detail << fmt(" seed %llu: rl-ef %s err_energy %.4f vs ef-eta %.4f%s;", static_cast<unsigned long long>(seed),
                    rl.blown_up ? "BLOW-UP" : "ok", rl.err_energy, eta.err_energy, eta.blown_up ? " (blew up)" : "");
    } else {
      const std::size_t tail = 3;
      double mean = 0.0;
      for (std::size_t i = tr.episodes.size() - tail; i < tr.episodes.size(); ++i) mean += tr.episodes[i].reward_sum;
      mean /= tail;
      const double need = 0.8 * cfg.n_train();
      good += (!rl.blown_up && mean >= need) ? 1 : 0;
      detail << fmt(" seed %llu: greedy rollout %s, last-3 mean plain reward %.2f (need >= %.1f);",
                    static_cast<unsigned long long>(seed), rl.blown_up ? "BLOW-UP" : "no blow-up", mean, need);
    }
  }
  std::string text = detail.str();
  if (!text.empty() && text.back() == ';') text.pop_back();
  if (full) return {!any_blowup && better >= 2, fmt("full, %d episodes x 3 seeds:%s", cfg.episodes, text.c_str())};
  return {good == static_cast<int>(seeds.size()), fmt("CI, %d episodes x 3 seeds:%s", cfg.episodes, text.c_str())};
}

Outcome episode_accounting() {
  const RunConfig cfg = RunConfig::for_profile(Profile::Paper);
  const FluidParams p = cfg.fluid();
  const VelocityField u0 = make_initial_conditions(cfg).coarse;
  const ReferenceStore refs = build_reference(cfg, cfg.reference_steps(Variant::DD_RAND));
  const ActionSpace actions = build_action_space();
  // A constant mid-range radius that keeps every episode stable.
  const int action = 41;

  std::ostringstream detail;
  detail << fmt("constant delta %.2e:", actions.decode(action));
  bool ok = true;
  std::mt19937_64 rng(3);
  for (Variant v : {Variant::DD, Variant::DD_RAND, Variant::DF, Variant::SP_DF}) {
    const EpisodeConfig ep = EpisodeConfig::for_variant(v, cfg.total_steps(), cfg.agent.gamma);
    const int cap = v == Variant::DD_RAND ? 200 : 500;
    const EnvContext ctx = make_env_context(u0, p, cfg.rewards, ep, needs_reference(v) ? &refs : nullptr);
    ResetResult r = env_reset(ctx, rng, cfg.n_train());
    std::vector<double> rewards;
    while (!r.state.done) rewards.push_back(env_step(ctx, r.state, action).reward);
    const Return ret = cumulative_return(rewards, ep.gamma);
    const bool bounded = ret.plain <= static_cast<double>(r.state.steps_taken) &&
                         ret.plain >= -static_cast<double>(r.state.steps_taken);
    const bool this_ok = ep.n_train == cap && r.state.steps_taken == cap && !r.state.solver.blown_up && bounded;
    ok = ok && this_ok;
    detail << fmt(" %s %d steps (cap %d) sum %.2f%s;", std::string(to_string(v)).c_str(), r.state.steps_taken, cap,
                  ret.plain, r.state.solver.blown_up ? " BLOW-UP" : "");
  }
  std::string text = detail.str();
  text.pop_back();
  return {ok, text};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only;
  std::vector<int> expect_fail;
  bool full = false;
  app.add_option("--criterion", only, "Run only these criteria (1-9)")->delimiter(',');
  app.add_option("--expect-fail", expect_fail, "Criteria known to fail")->delimiter(',');
  app.add_flag("--full", full, "Run criterion 8 at full scale (hours)");
  app.add_flag("-v,--verbose", verbose, "Progress on stderr");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all{
      {1, "filter transfer function", filter_transfer},
      {2, "divergence preservation", divergence_preservation},
      {3, "evolve-step accuracy", evolve_accuracy},
      {4, "reward algebra", reward_algebra},
      {5, "metric oracles", metric_oracles},
      {6, "DQN correctness", dqn_correctness},
      {7, "blow-up/over-dissipation dichotomy", dichotomy},
      {8, "learned-policy improvement", [full] { return learned_policy(full); }},
      {9, "episode accounting", episode_accounting},
  };
  const std::set<int> selected(only.begin(), only.end());
  const std::set<int> expected(expect_fail.begin(), expect_fail.end());

  int status = 0;
  for (const Criterion& c : all) {
    if (!selected.empty() && !selected.contains(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool xfail = expected.contains(c.id);
    std::string tag;
    if (o.pass && xfail) tag = " (unexpected pass)";
    if (!o.pass && xfail) tag = " (expected failure)";
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << "C" << c.id << " " << c.name << ": " << o.detail
              << fmt(" [%.1f s]", secs) << tag << std::endl;
    if (o.pass == xfail) status = 1;
  }
  return status;
}
