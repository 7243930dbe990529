#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "obetc/cli.hpp"

namespace {

using namespace obetc;

struct Common {
  std::optional<std::string> out;
  std::size_t trace_every = 0;

  cli::OutputOptions options() const { return {cli::default_output_dir(out), trace_every}; }
};

struct OverrideFlags {
  std::optional<double> sigma, epsilon, delay, horizon, step;
  std::optional<std::string> policy;

  cli::Overrides resolve() const {
    cli::Overrides o;
    o.sigma = sigma;
    o.epsilon = epsilon;
    o.delay = delay;
    o.horizon = horizon;
    o.step = step;
    if (policy) o.policy = sim::parse_policy(*policy);
    return o;
  }
};

void add_overrides(CLI::App* app, OverrideFlags& f) {
  app->add_option("--sigma", f.sigma, "Relative threshold in (0, 1]");
  app->add_option("--epsilon", f.epsilon, "Absolute floor (>= 0)");
  app->add_option("--policy", f.policy,
                  "event-floor | event | periodic");
  app->add_option("--delay", f.delay, "Transmission delay in seconds (multiple of --step)");
  app->add_option("--horizon", f.horizon, "Simulated time in seconds");
  app->add_option("--step", f.step, "Euler step in seconds");
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("--out", c.out, "Output directory (default $OBETC_OUT_DIR or ./obetc-out)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Observer-based event-triggered control: design, simulation, identification"};
  app.require_subcommand(1);

  Common common;
  OverrideFlags flags;
  std::string scenario;
  std::vector<double> sigmas, epsilons;
  std::string dataset;
  era::EraConfig era_config;
  std::size_t order = 6;
  std::uint64_t seed = 1;

  auto* design = app.add_subcommand("design", "Compute K, L and the trigger matrices");
  design->add_option("scenario", scenario, "Bundled name or YAML path")->required();
  add_common(design, common);

  auto* simulate = app.add_subcommand("simulate", "Run the event-triggered loop");
  simulate->add_option("scenario", scenario, "Bundled name or YAML path")->required();
  add_overrides(simulate, flags);
  add_common(simulate, common);
  simulate->add_option("--trace-every", common.trace_every,
                       "Keep every k-th trace row (0 = automatic)");

  auto* sweep = app.add_subcommand("sweep", "Simulate a sigma x epsilon grid");
  sweep->add_option("scenario", scenario, "Bundled name or YAML path")->required();
  sweep->add_option("--sigmas", sigmas, "Sigma values")->delimiter(',');
  sweep->add_option("--epsilons", epsilons, "Epsilon values")->delimiter(',');
  add_overrides(sweep, flags);
  add_common(sweep, common);

  auto* identify = app.add_subcommand("identify", "Eigensystem realization from a t,u,y CSV");
  identify->add_option("dataset", dataset, "CSV with header t,u,y")->required();
  identify->add_option("--hankel-blocks", era_config.hankel_blocks, "Hankel block count N");
  identify->add_option("--energy", era_config.energy_threshold,
                       "Singular value mass kept when choosing the order");
  add_common(identify, common);

  auto* gen = app.add_subcommand("gen-dataset", "Chirp response of a random stable system");
  gen->add_option("--order", order, "Model order (1..12)");
  gen->add_option("--seed", seed, "Random seed");
  add_common(gen, common);

  app.add_subcommand("scenarios", "List bundled scenarios");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*design) {
      cli::cmd_design(cli::load_scenario(scenario), common.options(), std::cout);
    } else if (*simulate) {
      cli::cmd_simulate(cli::load_scenario(scenario), flags.resolve(), common.options(),
                        std::cout);
    } else if (*sweep) {
      cli::cmd_sweep(cli::load_scenario(scenario), sigmas, epsilons, flags.resolve(),
                     common.options(), std::cout);
    } else if (*identify) {
      cli::cmd_identify(dataset, era_config, common.options(), std::cout);
    } else if (*gen) {
      cli::cmd_gen_dataset(order, seed, common.options(), std::cout);
    } else {
      cli::cmd_list_scenarios(std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::exit_code(e);
  }
  return 0;
}
