#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "ascent/cli.hpp"

using namespace ascent;

namespace {

struct Flags {
  std::string config;
  std::optional<std::string> out_dir;
  std::optional<double> splash_lat;
  bool unconstrained = false;
  std::optional<int> max_iters;
  std::optional<double> tol;
  bool quiet = false;
};

void add_common(CLI::App& cmd, Flags& f) {
  cmd.add_option("--config", f.config, "JSON run configuration (defaults when omitted)");
  cmd.add_option("--out-dir", f.out_dir, "Directory for all artifacts");
  cmd.add_option("--splash-lat", f.splash_lat, "Constrain the stage-3 splash-down latitude [deg]");
  cmd.add_flag("--unconstrained", f.unconstrained, "Leave the splash-down latitude free");
  cmd.add_option("--max-iters", f.max_iters, "SCvx iteration limit");
  cmd.add_option("--tol", f.tol, "SCvx convergence tolerance (scaled state change)");
  cmd.add_flag("--quiet", f.quiet, "Only print errors");
}

cli::RunConfig resolve(const Flags& f) {
  cli::RunConfig c = f.config.empty() ? cli::RunConfig{} : cli::load_config(f.config);
  if (f.out_dir) c.output_dir = *f.out_dir;
  if (f.splash_lat) {
    c.mission.splash_constrained = true;
    c.mission.splash_latitude_deg = *f.splash_lat;
  }
  if (f.unconstrained) c.mission.splash_constrained = false;
  if (f.max_iters) c.scvx.max_iters = *f.max_iters;
  if (f.tol) c.scvx.tol = *f.tol;
  c.check();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multistage launch-vehicle ascent optimization by successive convexification"};
  app.require_subcommand(1);
  Flags flags;
  std::string solution;

  CLI::App* solve = app.add_subcommand("solve", "Optimize the ascent and validate it by propagation");
  CLI::App* sweep = app.add_subcommand("sweep", "Solve over a list of splash-down latitudes");
  CLI::App* guess = app.add_subcommand("guess", "Generate and check the initial-guess trajectory");
  CLI::App* simulate = app.add_subcommand("simulate", "Propagate a solution trajectory file");
  simulate->add_option("solution", solution, "trajectory.csv written by solve")->required();
  for (CLI::App* cmd : {solve, sweep, guess, simulate}) add_common(*cmd, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitConfigError;
  }

  cli::RunConfig config;
  try {
    config = resolve(flags);
  } catch (const std::exception& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return cli::kExitConfigError;
  }

  const cli::CommandOptions opts{flags.quiet};
  try {
    if (*solve) return cli::cmd_solve(config, opts, std::cout, std::cerr);
    if (*sweep) return cli::cmd_sweep(config, opts, std::cout, std::cerr);
    if (*guess) return cli::cmd_guess(config, opts, std::cout, std::cerr);
    return cli::cmd_simulate(config, solution, opts, std::cout, std::cerr);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return cli::kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kExitFailure;
  }
}
