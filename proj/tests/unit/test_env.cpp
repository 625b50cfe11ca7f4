#include "efrl/env.hpp"
#include "efrl/errors.hpp"
#include "efrl/metrics.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

using namespace efrl;

namespace {

VelocityField turbulence(int n, std::uint64_t seed = 5) {
  return init_decaying_turbulence(GridSpec(n), peaked_spectrum(4.0), 0.5, seed);
}

}  // namespace

TEST_CASE("action space") {
  const ActionSpace a = build_action_space();
  CHECK(a.decode(0) == doctest::Approx(1e-10).epsilon(1e-12));
  CHECK(a.decode(3) == doctest::Approx(1e-7).epsilon(1e-12));
  CHECK(a.decode(4) == doctest::Approx(1e-6).epsilon(1e-12));
  CHECK(a.decode(5) == doctest::Approx(1.1659e-6).epsilon(1e-4));
  CHECK(a.decode(49) == doctest::Approx(1e-3).epsilon(1e-12));
  for (int i = 1; i < kNumActions; ++i) CHECK(a.decode(i) > a.decode(i - 1));
  for (int i = 0; i < kNumActions; ++i) CHECK(a.index_of(a.decode(i)) == i);
  CHECK_THROWS_AS((void)a.decode(-1), std::out_of_range);
  CHECK_THROWS_AS((void)a.decode(50), std::out_of_range);
  CHECK_THROWS((void)a.index_of(2e-4));
}

TEST_CASE("variant names") {
  for (Variant v : {Variant::DD, Variant::DD_RAND, Variant::DF, Variant::SP_DF}) {
    CHECK(parse_variant(to_string(v)) == v);
  }
  CHECK_THROWS_AS(parse_variant("ddrand"), ConfigError);
  CHECK(needs_reference(Variant::DD));
  CHECK_FALSE(needs_reference(Variant::SP_DF));
  CHECK(EpisodeConfig::for_variant(Variant::DD_RAND, 2000).n_train == 200);
  CHECK(EpisodeConfig::for_variant(Variant::DD_RAND, 2000).random_start);
  CHECK(EpisodeConfig::for_variant(Variant::DF, 2000).n_train == 500);
}

TEST_CASE("observation encoding") {
  std::mt19937_64 rng(3);
  const GridSpec g(8);
  CHECK(encode_observation(VelocityField(g), 1.0) == Observation(128, 0.0));
  const VelocityField a = oracle::random_velocity(g, rng);
  const VelocityField b = oracle::random_velocity(g, rng);
  const Observation oa = encode_observation(a, 2.0), ob = encode_observation(b, 2.0);
  const Observation oab = encode_observation(a + 3.0 * b, 2.0);
  REQUIRE(oab.size() == 128);
  for (std::size_t i = 0; i < oab.size(); ++i) CHECK(oab[i] == doctest::Approx(oa[i] + 3.0 * ob[i]).epsilon(1e-14));
  CHECK(oa[0] == 2.0 * a.ux.values[0]);
  CHECK(oa[64] == 2.0 * a.uy.values[0]);
}

TEST_CASE("reset") {
  const FluidParams fluid = FluidParams::from_reynolds(4e4, 1e-3);
  const VelocityField u0 = turbulence(16);
  std::mt19937_64 rng(1);
  SUBCASE("data-free resets to t = 0") {
    const EnvContext ctx = make_env_context(u0, fluid, {}, EpisodeConfig::for_variant(Variant::DF, 40), nullptr);
    const ResetResult r = env_reset(ctx, rng);
    CHECK(r.state.solver.t == 0.0);
    CHECK(r.state.solver.step_index == 0);
    CHECK(r.obs == encode_observation(u0, ctx.obs_scale));
    CHECK(ctx.obs_scale == doctest::Approx(1.0 / rms_velocity(u0)));
  }
  SUBCASE("reference variants require snapshots") {
    CHECK_THROWS_AS(make_env_context(u0, fluid, {}, EpisodeConfig::for_variant(Variant::DD_RAND, 40), nullptr),
                    ConfigError);
    CHECK_THROWS_AS(make_env_context(u0, fluid, {}, EpisodeConfig::for_variant(Variant::DD, 40), nullptr),
                    ConfigError);
  }
  SUBCASE("random starts are reproducible and cover the window") {
    ReferenceStore refs(u0.grid, fluid.dt);
    for (int k = 1; k <= 14; ++k) refs.push(turbulence(16, 100 + k));
    const EpisodeConfig ep = EpisodeConfig::for_variant(Variant::DD_RAND, 40);
    const EnvContext ctx = make_env_context(u0, fluid, {}, ep, &refs);
    std::mt19937_64 r1(77), r2(77);
    for (int i = 0; i < 20; ++i) {
      const ResetResult a = env_reset(ctx, r1, 10);
      const ResetResult b = env_reset(ctx, r2, 10);
      CHECK(a.state.start_step == b.state.start_step);
      CHECK(a.state.solver.t == doctest::Approx(a.state.start_step * fluid.dt));
      CHECK(a.state.solver.u.ux.values == refs.at(a.state.start_step).ux.values);
    }
    ReferenceStore shortrefs(u0.grid, fluid.dt);
    for (int k = 1; k <= 4; ++k) shortrefs.push(turbulence(16, 200 + k));
    const EnvContext short_ctx = make_env_context(u0, fluid, {}, ep, &shortrefs);
    CHECK_THROWS_AS(env_reset(short_ctx, r1, 10), ConfigError);
  }
}

TEST_CASE("random start indices are uniform") {
  std::mt19937_64 rng(2024);
  const int n = 10, draws = 1000;
  std::vector<int> count(n + 1, 0);
  for (int i = 0; i < draws; ++i) {
    const auto s = sample_start_step(n, rng);
    REQUIRE(s >= 1);
    REQUIRE(s <= n);
    ++count[static_cast<std::size_t>(s)];
  }
  double chi2 = 0.0;
  const double expected = static_cast<double>(draws) / n;
  for (int k = 1; k <= n; ++k) chi2 += (count[static_cast<std::size_t>(k)] - expected) * (count[static_cast<std::size_t>(k)] - expected) / expected;
  // 9 degrees of freedom, p = 0.001.
  CHECK(chi2 < 27.88);
}

TEST_CASE("step dynamics and rewards") {
  const FluidParams fluid = FluidParams::from_reynolds(4e4, 1e-3);
  const VelocityField u0 = turbulence(32);
  std::mt19937_64 rng(1);

  SUBCASE("the largest radius damps most") {
    const EnvContext ctx = make_env_context(u0, fluid, {}, EpisodeConfig::for_variant(Variant::DF, 40), nullptr);
    ResetResult a = env_reset(ctx, rng), b = env_reset(ctx, rng);
    StepInfo ia, ib;
    const Transition ta = env_step(ctx, a.state, 0, &ia);
    env_step(ctx, b.state, 49, &ib);
    CHECK(ib.energy < ia.energy);
    CHECK(ib.enstrophy < ia.enstrophy);
    CHECK(ta.reward <= 1.0);
    CHECK(ta.reward >= -1.0);
    CHECK(ia.delta == ctx.actions.decode(0));
    CHECK(ia.res > 0.0);
    CHECK(ta.next_obs == encode_observation(a.state.solver.u, ctx.obs_scale));
    CHECK_THROWS_AS(env_step(ctx, a.state, 50), std::out_of_range);
  }
  SUBCASE("episodes end after n_train steps") {
    EpisodeConfig ep = EpisodeConfig::for_variant(Variant::SP_DF, 40);
    ep.n_train = 3;
    const EnvContext ctx = make_env_context(u0, fluid, {}, ep, nullptr);
    ResetResult r = env_reset(ctx, rng);
    CHECK_FALSE(env_step(ctx, r.state, 41).done);
    CHECK_FALSE(env_step(ctx, r.state, 41).done);
    CHECK(env_step(ctx, r.state, 41).done);
    CHECK_THROWS_AS(env_step(ctx, r.state, 41), std::logic_error);
  }
  SUBCASE("blow-up ends the episode with reward -1") {
    const EnvContext ctx = make_env_context(u0, fluid, {}, EpisodeConfig::for_variant(Variant::DF, 40), nullptr);
    ResetResult r = env_reset(ctx, rng);
    r.state.solver.u.ux.values[3] = INFINITY;
    StepInfo info;
    const Transition t = env_step(ctx, r.state, 10, &info);
    CHECK(t.done);
    CHECK(t.reward == -1.0);
    CHECK(info.blown_up);
    CHECK(r.state.done);
  }
  SUBCASE("matching the reference earns the full reward") {
    ReferenceStore refs(u0.grid, fluid.dt);
    SolverState s = SolverState::initial(u0);
    const double delta = build_action_space().decode(30);
    for (int k = 0; k < 3; ++k) {
      s = ef_step(s, delta, fluid);
      refs.push(s.u);
    }
    const EnvContext ctx = make_env_context(u0, fluid, {}, EpisodeConfig::for_variant(Variant::DD, 12), &refs);
    ResetResult r = env_reset(ctx, rng);
    for (int k = 0; k < 3; ++k) CHECK(env_step(ctx, r.state, 30).reward == 1.0);
    ResetResult other = env_reset(ctx, rng);
    CHECK(env_step(ctx, other.state, 49).reward < 1.0);
  }
}

TEST_CASE("reference store persistence") {
  const GridSpec g(16);
  ReferenceStore refs(g, 1e-3);
  CHECK_THROWS_AS((void)refs.at(1), ConfigError);
  refs.push(turbulence(16, 1));
  refs.push(turbulence(16, 2));
  CHECK(refs.count() == 2);
  CHECK(refs.covers(2));
  CHECK_FALSE(refs.covers(0));
  CHECK_FALSE(refs.covers(3));
  const auto dir = std::filesystem::temp_directory_path() / "efrl_test_refs";
  std::filesystem::remove_all(dir);
  refs.save(dir);
  const ReferenceStore back = ReferenceStore::load(dir);
  CHECK(back.count() == 2);
  CHECK(back.grid() == g);
  CHECK(back.dt() == 1e-3);
  CHECK(back.at(2).uy.values == refs.at(2).uy.values);
  std::filesystem::remove_all(dir);
  CHECK_THROWS(ReferenceStore::load(dir));
}
