// edsim: command-line driver.
//
//   edsim evolve       --config run.ini [--out DIR] [--seed N]
//   edsim trajectories --config run.ini [--out DIR] [--seed N]
//   edsim measure      --config run.ini [--out DIR] [--seed N]
//   edsim amplify      --config run.ini [--out DIR] [--seed N]
//   edsim validate     [--filter NAME] [--inject-dt DT] [--out DIR] [--seed N]
//
// Exit codes are listed in README.md; failures print a JSON record on stderr.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "edsim/acceptance.hpp"
#include "edsim/commands.hpp"
#include "edsim/config.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::string filter;
  std::optional<double> inject_dt;
};

edsim::RunConfig resolve(const Flags& f) {
  edsim::RunConfig c = f.config.empty() ? edsim::RunConfig{} : edsim::load_config(f.config);
  edsim::apply_overrides(c, f.out, f.seed);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entropic-dynamics simulator: wavefunction evolution, particle ensembles, measurement and "
               "amplification"};
  app.require_subcommand(1);
  Flags flags;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", flags.out, "Output directory (overrides EDSIM_OUT_DIR and the config)");
    sub->add_option("--seed", flags.seed, "Top-level RNG seed (overrides [run] seed)");
  };

  using Command = int (*)(const edsim::RunConfig&);
  const std::pair<const char*, Command> pipelines[] = {
      {"evolve", edsim::cmd_evolve},
      {"trajectories", edsim::cmd_trajectories},
      {"measure", edsim::cmd_measure},
      {"amplify", edsim::cmd_amplify},
  };
  const char* help[] = {
      "Evolve the initial state; write trace NDJSON and diagnostics CSV",
      "Advance a particle ensemble over a trace; write ensemble CSV and KS JSON",
      "Simulate device measurements; write outcome CSV, chi-square and Born JSON",
      "Run detection plus pointer inference; write experiment NDJSON and summary",
  };

  int status = edsim::kExitOk;
  for (std::size_t i = 0; i < std::size(pipelines); ++i) {
    auto* sub = app.add_subcommand(pipelines[i].first, help[i]);
    sub->add_option("--config", flags.config, "Run configuration (INI)")->required();
    add_common(sub);
    const Command cmd = pipelines[i].second;
    sub->callback([&flags, &status, cmd] {
      status = edsim::run_command([&] { return cmd(resolve(flags)); });
    });
  }

  auto* validate = app.add_subcommand("validate", "Run the acceptance suite and print a pass/fail table");
  validate->add_option("--filter", flags.filter, "Comma-separated criterion ids or name fragments");
  validate->add_option("--inject-dt", flags.inject_dt, "Time step forced onto the engine-equivalence run");
  add_common(validate);
  validate->callback([&] {
    status = edsim::run_command([&] {
      edsim::acceptance::Options opts;
      opts.filter = flags.filter;
      opts.inject_dt = flags.inject_dt;
      if (flags.seed) opts.seed = *flags.seed;
      std::string out_dir;
      if (const char* env = std::getenv(edsim::kOutDirEnv); env && *env) out_dir = env;
      if (flags.out) out_dir = *flags.out;
      if (!out_dir.empty()) opts.work_dir = std::filesystem::path(out_dir) / "reproducibility";
      return edsim::acceptance::cmd_validate(opts, std::cout, out_dir);
    });
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : edsim::kExitConfig;
  }
  return status;
}
