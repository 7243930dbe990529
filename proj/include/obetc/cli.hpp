#pragma once

// Scenario loading and the subcommands behind the `obetc` executable.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "obetc/design.hpp"
#include "obetc/sim.hpp"
#include "obetc/sysid.hpp"

namespace obetc::cli {

namespace fs = std::filesystem;

/// Model given as a dataset to identify instead of literal matrices.
struct IdentifyDirective {
  fs::path dataset;
  era::EraConfig era;
};

struct Scenario {
  std::string name;
  fs::path source;  // file the scenario came from; empty for bundled ones
  LtiModel model;   // continuous
  std::optional<IdentifyDirective> identify;
  std::optional<era::IdentifiedModel> identified;  // set when `identify` ran
  design::DesignWeights weights;
  double sigma = 0.95;
  double epsilon = 0.01;
  Matrix Q_tilde;  // empty means identity
  sim::SimConfig sim;
};

/// Parses scenario YAML. Relative CSV and dataset paths resolve against
/// `base_dir`. An identify directive runs ERA here and stores the
/// continuous (Tustin) model. Errors are kConfig and name the offending
/// field and line.
Scenario parse_scenario(std::string_view yaml, const std::string& origin,
                        const fs::path& base_dir);

/// A bundled scenario name or a path to a YAML file.
Scenario load_scenario(const std::string& name_or_path);

std::vector<std::string> bundled_scenario_names();
/// Empty view when `name` is not bundled.
std::string_view bundled_scenario_text(std::string_view name);

/// Scenario YAML for `scenario`; parse_scenario(to_yaml(s)) reproduces s.
std::string to_yaml(const Scenario& scenario);

struct Overrides {
  std::optional<double> sigma;
  std::optional<double> epsilon;
  std::optional<sim::TriggerPolicy> policy;
  std::optional<double> delay;
  std::optional<double> horizon;
  std::optional<double> step;
};

void apply(const Overrides& overrides, Scenario& scenario);

struct OutputOptions {
  fs::path dir;                // created on demand
  std::size_t trace_every = 0;  // 0 picks a stride that keeps about 20k rows
};

/// --out, then $OBETC_OUT_DIR, then ./obetc-out.
fs::path default_output_dir(const std::optional<std::string>& flag);

struct RunReport {
  std::string scenario;
  std::optional<design::GainSet> gains;
  std::optional<sim::MetricsReport> metrics;
  std::vector<fs::path> artifacts;
  double wall_seconds = 0.0;
};

RunReport cmd_design(Scenario scenario, const OutputOptions& out, std::ostream& log);
RunReport cmd_simulate(Scenario scenario, const Overrides& overrides, const OutputOptions& out,
                       std::ostream& log);

/// Grid of sigma x epsilon; an empty list falls back to the scenario value.
RunReport cmd_sweep(Scenario scenario, std::vector<double> sigmas, std::vector<double> epsilons,
                    const Overrides& overrides, const OutputOptions& out, std::ostream& log);

RunReport cmd_identify(const fs::path& dataset, const era::EraConfig& config,
                       const OutputOptions& out, std::ostream& log);

/// Writes a chirp-excited dataset from a random stable SISO system of the
/// given order (seeded). The true discrete poles go to a sidecar file.
RunReport cmd_gen_dataset(std::size_t order, std::uint64_t seed, const OutputOptions& out,
                          std::ostream& log);

void cmd_list_scenarios(std::ostream& log);

/// 0 success, 2 configuration or parse error, 3 numerical failure.
int exit_code(const std::exception& error);

// Output writers, exposed for testing.
void write_trace_csv(const sim::SimTrace& trace, const fs::path& path, std::size_t every);
void write_events_csv(const sim::EventLog& events, const fs::path& path);
std::string format_row(const Matrix& row, int precision = 4);

}  // namespace obetc::cli
