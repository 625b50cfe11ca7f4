// efrl: DNS generation, agent training, evaluation and comparison.

#include "efrl/config.hpp"
#include "efrl/errors.hpp"
#include "efrl/experiment.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfigError = 2, kBlowUp = 3 };

struct CommonOptions {
  std::string config;
  std::string profile = "paper";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> variant;
  std::optional<int> episodes;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "INI config file")->check(CLI::ExistingFile);
  cmd->add_option("--profile", o.profile, "Default set: paper or ci")->check(CLI::IsMember({"paper", "ci"}));
  cmd->add_option("--seed", o.seed, "Agent seed");
  cmd->add_option("--variant", o.variant, "dd, dd-rand, df or sp-df")
      ->check(CLI::IsMember({"dd", "dd-rand", "df", "sp-df"}));
  cmd->add_option("--episodes", o.episodes, "Training episode budget");
  cmd->add_option("--out", o.out, "Run directory");
}

efrl::RunConfig resolve(const CommonOptions& o) {
  const efrl::Profile base = efrl::parse_profile(o.profile);
  efrl::RunConfig cfg = o.config.empty() ? efrl::RunConfig::for_profile(base) : efrl::load_config(o.config, base);
  if (o.seed) cfg.agent.seed = *o.seed;
  if (o.variant) cfg.variant = efrl::parse_variant(*o.variant);
  if (o.episodes) cfg.episodes = *o.episodes;
  if (o.out) cfg.out_dir = *o.out;
  cfg.validate();
  return cfg;
}

void log_line(const std::string& msg) {
  using clock = std::chrono::steady_clock;
  static const auto start = clock::now();
  const double s = std::chrono::duration<double>(clock::now() - start).count();
  std::cerr << "[" << std::fixed;
  std::cerr.precision(1);
  std::cerr << s << "s] " << msg << '\n';
  std::cerr.unsetf(std::ios::floatfield);
}

void print_summary(const efrl::EvalResult& r) {
  for (const auto& s : r.summary) {
    std::cout << s.name << ": " << (s.blown_up ? "blew up" : "stable") << ", steps " << s.steps_completed
              << ", err_energy " << s.err_energy;
    for (const auto& [k, e] : s.err_spectrum) {
      std::cout << ", err_spectrum(K=" << k << ") " << e.signed_value << " (abs " << e.absolute_value << ")";
    }
    std::cout << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evolve-filter turbulence simulation with a learned filter radius"};
  app.require_subcommand(1);

  CommonOptions gen_opts, train_opts, eval_opts, dump_opts;
  auto* gen = app.add_subcommand("gen-dns", "Run the fine-grid DNS and store filtered reference snapshots");
  add_common(gen, gen_opts);

  auto* train = app.add_subcommand("train", "Train a DQN agent for the chosen variant");
  add_common(train, train_opts);

  auto* eval = app.add_subcommand("eval", "Greedy rollout over the full window against noEF and EF(eta)");
  add_common(eval, eval_opts);
  std::string checkpoint;
  eval->add_option("--checkpoint", checkpoint, "Agent checkpoint (default <out>/agent.efdq)");

  auto* compare = app.add_subcommand("compare", "Tabulate errors across evaluated runs");
  std::vector<std::string> runs;
  std::string compare_out;
  compare->add_option("runs", runs, "Run directories")->required();
  compare->add_option("--out", compare_out, "Directory for compare.csv and compare.json");

  auto* dump = app.add_subcommand("config-dump", "Print the resolved configuration");
  add_common(dump, dump_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*gen) {
      const auto cfg = resolve(gen_opts);
      try {
        const auto dir = efrl::cmd_gen_dns(cfg, log_line);
        std::cout << "reference written to " << dir.string() << '\n';
      } catch (const efrl::BlowUpError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kBlowUp;
      }
    } else if (*train) {
      const auto cfg = resolve(train_opts);
      const auto r = efrl::cmd_train(cfg, log_line);
      const auto& last = r.episodes.back();
      std::cout << "trained " << r.episodes.size() << " episodes (" << r.total_steps
                << " steps); last episode reward " << last.reward_sum << "\n";
    } else if (*eval) {
      const auto cfg = resolve(eval_opts);
      const std::string cp = checkpoint.empty() ? cfg.out_dir + "/agent.efdq" : checkpoint;
      print_summary(efrl::cmd_eval(cfg, cp, log_line));
    } else if (*compare) {
      std::vector<std::filesystem::path> dirs(runs.begin(), runs.end());
      std::cout << efrl::cmd_compare(dirs, compare_out);
    } else if (*dump) {
      std::cout << efrl::dump_config(resolve(dump_opts));
    }
  } catch (const efrl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const efrl::ShapeError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}
