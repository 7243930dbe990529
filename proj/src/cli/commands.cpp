#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include <yaml-cpp/exceptions.h>

#include "obetc/cli.hpp"
#include "report.hpp"

namespace obetc::cli {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

fs::path scenario_dir(const OutputOptions& out, const std::string& name) {
  const auto dir = out.dir / name;
  fs::create_directories(dir);
  return dir;
}

std::string format_spectrum(const numerics::Spectrum& s) {
  std::ostringstream os;
  for (std::size_t i = 0; i < s.eigenvalues.size(); ++i) {
    const auto& ev = s.eigenvalues[i];
    char buf[64];
    if (ev.imag() == 0.0) {
      std::snprintf(buf, sizeof buf, "%.4f", ev.real());
    } else {
      std::snprintf(buf, sizeof buf, "%.4f%+.4fi", ev.real(), ev.imag());
    }
    os << (i ? ", " : "") << buf;
  }
  return os.str();
}

struct Designed {
  design::GainSet gains;
  design::TriggerDesign trigger;
};

Designed design_all(const Scenario& s) {
  Designed d;
  d.gains = design::design_gains(s.model, s.weights);
  d.trigger = design::build_trigger_design(s.model, d.gains, s.Q_tilde, s.sigma, s.epsilon);
  return d;
}

std::size_t trace_stride(const OutputOptions& out, std::size_t grid_points) {
  if (out.trace_every) return out.trace_every;
  return std::max<std::size_t>(1, grid_points / 20000);
}

}  // namespace

fs::path default_output_dir(const std::optional<std::string>& flag) {
  if (flag && !flag->empty()) return *flag;
  if (const char* env = std::getenv("OBETC_OUT_DIR"); env && *env) return env;
  return "obetc-out";
}

int exit_code(const std::exception& error) {
  if (const auto* e = dynamic_cast<const Error*>(&error)) return e->is_config() ? 2 : 3;
  if (dynamic_cast<const YAML::Exception*>(&error)) return 2;
  if (dynamic_cast<const fs::filesystem_error*>(&error)) return 2;
  return 1;
}

void cmd_list_scenarios(std::ostream& log) {
  for (const auto& name : bundled_scenario_names()) {
    const auto s = parse_scenario(bundled_scenario_text(name), name, fs::current_path());
    log << name << "  n=" << s.model.n() << " m=" << s.model.m() << " q=" << s.model.q()
        << "  sigma=" << s.sigma << " epsilon=" << s.epsilon << "  T=" << s.sim.step
        << " horizon=" << s.sim.horizon << '\n';
  }
}

RunReport cmd_design(Scenario s, const OutputOptions& out, std::ostream& log) {
  const auto start = Clock::now();
  RunReport report;
  report.scenario = s.name;

  const bool ctrb = design::check_controllability(s.model.A, s.model.B);
  const bool obsv = design::check_observability(s.model.A, s.model.C);
  const auto d = design_all(s);
  const auto& g = d.gains;
  const auto ctrl_spec = numerics::eigenvalues(s.model.A - s.model.B * g.K);
  const auto obs_spec = numerics::eigenvalues(s.model.A - g.L * s.model.C);
  const auto joint_spec = numerics::eigenvalues(d.trigger.A_tilde);
  const double care_res =
      numerics::care_residual(s.model.A, s.model.B, s.weights.Q, s.weights.R, g.P_ctrl);
  const double filter_res = numerics::care_residual(
      s.model.A.transpose(), s.model.C.transpose(), s.weights.W, s.weights.V, g.S_obs);
  const double lyap_res =
      numerics::lyapunov_residual(d.trigger.A_tilde, d.trigger.P_tilde, d.trigger.Q_tilde);

  log << "scenario " << s.name << '\n';
  log << "  controllable: " << (ctrb ? "yes" : "no") << "  observable: " << (obsv ? "yes" : "no")
      << '\n';
  log << "  K = " << format_row(g.K) << '\n';
  log << "  L = " << format_row(g.L.transpose()) << "^T\n";
  log << "  eig(A - BK) = " << format_spectrum(ctrl_spec) << '\n';
  log << "  eig(A - LC) = " << format_spectrum(obs_spec) << '\n';
  log << "  closed loop (" << joint_spec.size() << " eigenvalues, max real part "
      << joint_spec.max_real_part() << ")\n";
  log << "  residuals: control Riccati " << care_res << ", filter Riccati " << filter_res
      << ", Lyapunov " << lyap_res << '\n';
  log << "  ultimate bound " << d.trigger.ultimate_bound() << '\n';
  for (const auto& w : g.warnings) log << "  warning: " << w << '\n';

  const auto dir = scenario_dir(out, s.name);
  nlohmann::json j;
  j["scenario"] = detail::scenario_json(s);
  j["K"] = detail::to_json(g.K);
  j["L"] = detail::to_json(g.L);
  j["K_display"] = format_row(g.K);
  j["L_display"] = format_row(g.L.transpose());
  j["P_ctrl"] = detail::to_json(g.P_ctrl);
  j["S_obs"] = detail::to_json(g.S_obs);
  j["P_tilde"] = detail::to_json(d.trigger.P_tilde);
  j["controllable"] = ctrb;
  j["observable"] = obsv;
  j["eig_controller"] = detail::to_json(ctrl_spec);
  j["eig_observer"] = detail::to_json(obs_spec);
  j["eig_closed_loop"] = detail::to_json(joint_spec);
  j["residuals"] = {{"care", care_res}, {"filter", filter_res}, {"lyapunov", lyap_res}};
  j["ultimate_bound"] = d.trigger.ultimate_bound();
  j["warnings"] = g.warnings;
  detail::write_json(dir / "gains.json", j);

  std::ostringstream txt;
  txt << "K = " << format_row(g.K) << "\nL = " << format_row(g.L.transpose()) << "^T\n";
  detail::write_text(dir / "gains.txt", txt.str());

  report.artifacts = {dir / "gains.json", dir / "gains.txt"};
  report.gains = g;
  report.wall_seconds = seconds_since(start);
  return report;
}

RunReport cmd_simulate(Scenario s, const Overrides& overrides, const OutputOptions& out,
                       std::ostream& log) {
  const auto start = Clock::now();
  apply(overrides, s);
  RunReport report;
  report.scenario = s.name;

  const auto d = design_all(s);
  s.sim.cost_Q = s.weights.Q;
  s.sim.cost_R = s.weights.R;
  const auto trace = sim::simulate(s.model, d.gains, d.trigger, s.sim);
  const auto m = sim::metrics(trace);

  const auto dir = scenario_dir(out, s.name);
  write_trace_csv(trace, dir / "trace.csv", trace_stride(out, trace.grid_points));
  write_events_csv(trace.events, dir / "events.csv");

  std::ostringstream txt;
  txt << "# scenario " << s.name << '\n' << detail::metrics_text(m) << "\n# effective scenario\n";
  std::istringstream yaml(to_yaml(s));
  for (std::string line; std::getline(yaml, line);) txt << "# " << line << '\n';
  detail::write_text(dir / "metrics.txt", txt.str());

  nlohmann::json j;
  j["scenario"] = detail::scenario_json(s);
  j["metrics"] = detail::metrics_json(m);
  j["K"] = detail::to_json(d.gains.K);
  j["L"] = detail::to_json(d.gains.L);
  j["final_u"] = detail::to_json(Vector(trace.final_state.u_held));
  detail::write_json(dir / "metrics.json", j);
  detail::write_text(dir / "scenario.yaml", to_yaml(s));

  log << "scenario " << s.name << " (" << sim::to_string(s.sim.policy) << ", sigma "
      << s.sigma << ", epsilon " << s.epsilon << ", T " << s.sim.step << ", delay "
      << s.sim.delay << ")\n";
  log << "  packets " << m.n_s << " of " << m.baseline_steps << " grid points, reduction "
      << m.reduction_pct << "% (transient window " << m.transient_reduction_pct << "%)\n";
  log << "  min interval " << m.min_interval << " s, analytic tau " << m.analytic_tau << " s\n";
  log << "  J_X " << m.J_X << ", terminal ||X|| " << m.terminal_norm_X << ", ultimate bound "
      << m.ultimate_bound << '\n';

  report.artifacts = {dir / "trace.csv", dir / "events.csv", dir / "metrics.txt",
                      dir / "metrics.json", dir / "scenario.yaml"};
  report.gains = d.gains;
  report.metrics = m;
  report.wall_seconds = seconds_since(start);
  return report;
}

RunReport cmd_sweep(Scenario s, std::vector<double> sigmas, std::vector<double> epsilons,
                    const Overrides& overrides, const OutputOptions& out, std::ostream& log) {
  const auto start = Clock::now();
  apply(overrides, s);
  if (sigmas.empty()) sigmas.push_back(s.sigma);
  if (epsilons.empty()) epsilons.push_back(s.epsilon);
  std::vector<std::pair<double, double>> points;
  for (double e : epsilons) {
    for (double sg : sigmas) {
      if (!(sg > 0.0 && sg <= 1.0)) throw Error(ErrorCode::kConfig, "sweep sigma outside (0, 1]");
      if (!(e >= 0.0)) throw Error(ErrorCode::kConfig, "sweep epsilon must be non-negative");
      points.emplace_back(sg, e);
    }
  }

  const auto gains = design::design_gains(s.model, s.weights);
  const auto results = sim::sweep(s.model, gains, points, s.Q_tilde, s.sim);

  const auto dir = scenario_dir(out, s.name);
  detail::write_sweep_csv(results, dir / "sweep.csv");
  nlohmann::json j;
  j["scenario"] = detail::scenario_json(s);
  j["points"] = nlohmann::json::array();
  for (const auto& p : results) {
    j["points"].push_back({{"sigma", p.sigma},
                           {"epsilon", p.epsilon},
                           {"n_s", p.n_s},
                           {"J_X", p.J_X},
                           {"min_interval", std::isfinite(p.min_interval)
                                                ? nlohmann::json(p.min_interval)
                                                : nlohmann::json(nullptr)}});
  }
  detail::write_json(dir / "sweep.json", j);

  log << "sigma\tepsilon\tn_s\tJ_X\tmin_interval\n";
  for (const auto& p : results) {
    log << p.sigma << '\t' << p.epsilon << '\t' << p.n_s << '\t' << p.J_X << '\t'
        << p.min_interval << '\n';
  }
  RunReport report;
  report.scenario = s.name;
  report.gains = gains;
  report.artifacts = {dir / "sweep.csv", dir / "sweep.json"};
  report.wall_seconds = seconds_since(start);
  return report;
}

RunReport cmd_identify(const fs::path& dataset, const era::EraConfig& config,
                       const OutputOptions& out, std::ostream& log) {
  const auto start = Clock::now();
  const auto data = era::read_dataset_csv(dataset);
  const auto id = era::identify(data, config);

  Scenario s;
  s.name = dataset.stem().string() + "-identified";
  s.model = discrete_to_continuous(id.model);
  const auto n = s.model.n();
  s.weights = {Matrix::Identity(n, n), Matrix::Identity(1, 1), Matrix::Identity(n, n),
               Matrix::Identity(1, 1)};
  // Euler needs T well inside 2 / |lambda| of the fastest mode; the horizon
  // covers ten time constants of the slowest one.
  const auto poles = numerics::eigenvalues(s.model.A);
  double fastest = 0.0, slowest = std::numeric_limits<double>::infinity();
  for (const auto& p : poles.eigenvalues) {
    fastest = std::max(fastest, std::abs(p));
    slowest = std::min(slowest, std::abs(p.real()));
  }
  s.sim.step = std::min(1.0 / data.sample_rate,
                        std::pow(10.0, std::floor(std::log10(0.2 / std::max(fastest, 1e-12)))));
  s.sim.horizon = std::ceil(10.0 / std::max(slowest, 1e-3) / s.sim.step) * s.sim.step;
  s.sim.x0 = Vector::Ones(n);
  s.sim.xhat0 = Vector::Zero(n);

  const auto dir = scenario_dir(out, s.name);
  detail::write_text(dir / "identified.yaml",
                     "# Continuous model identified from " + dataset.filename().string() +
                         "; weights and initial conditions are placeholders.\n" + to_yaml(s));

  std::ostringstream sv;
  sv << "index,sigma,cumulative\n";
  double total = 0.0, running = 0.0;
  for (double v : id.singular_values) total += v;
  for (std::size_t i = 0; i < id.singular_values.size(); ++i) {
    running += id.singular_values[i];
    sv << i + 1 << ',' << id.singular_values[i] << ',' << running / total << '\n';
  }
  detail::write_text(dir / "singular_values.csv", sv.str());

  std::ostringstream imp;
  imp << "k,h\n";
  for (std::size_t k = 0; k < id.impulse.size(); ++k) imp << k << ',' << id.impulse[k] << '\n';
  detail::write_text(dir / "impulse.csv", imp.str());

  nlohmann::json j;
  j["dataset"] = dataset.string();
  j["sample_rate"] = data.sample_rate;
  j["order"] = id.order;
  j["energy_captured"] = id.energy_captured;
  j["fit"] = id.fit;
  j["hankel_blocks"] = config.hankel_blocks;
  j["energy_threshold"] = config.energy_threshold;
  j["discrete"] = {{"A", detail::to_json(id.model.A)},
                   {"B", detail::to_json(id.model.B)},
                   {"C", detail::to_json(id.model.C)},
                   {"D", detail::to_json(id.model.D)},
                   {"sample_time", id.model.sample_time},
                   {"poles", detail::to_json(numerics::eigenvalues(id.model.A))}};
  j["continuous_poles"] = detail::to_json(numerics::eigenvalues(s.model.A));
  detail::write_json(dir / "identify.json", j);

  log << "identified order " << id.order << " (energy " << id.energy_captured << "), fit "
      << id.fit << '\n';
  log << "  discrete poles " << format_spectrum(numerics::eigenvalues(id.model.A)) << '\n';

  RunReport report;
  report.scenario = s.name;
  report.artifacts = {dir / "identified.yaml", dir / "singular_values.csv", dir / "impulse.csv",
                      dir / "identify.json"};
  report.wall_seconds = seconds_since(start);
  return report;
}

RunReport cmd_gen_dataset(std::size_t order, std::uint64_t seed, const OutputOptions& out,
                          std::ostream& log) {
  if (order < 1 || order > 12) throw Error(ErrorCode::kConfig, "--order must be in 1..12");
  const auto start = Clock::now();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  // Modal form with poles inside |z| < 0.9. Draws whose weakest mode holds
  // under 2% of the Hankel singular value mass are redrawn so that the order
  // is recoverable from the data.
  const auto n = static_cast<Eigen::Index>(order);
  const std::size_t blocks = era::EraConfig{}.hankel_blocks;
  LtiModel sys;
  for (;;) {
    Matrix A = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n;) {
      if (n - i >= 2 && unit(rng) < 0.5) {
        const double mag = uniform(0.6, 0.9), ang = uniform(0.2, 2.0);
        A(i, i) = A(i + 1, i + 1) = mag * std::cos(ang);
        A(i, i + 1) = mag * std::sin(ang);
        A(i + 1, i) = -mag * std::sin(ang);
        i += 2;
      } else {
        A(i, i) = (unit(rng) < 0.5 ? -1.0 : 1.0) * uniform(0.5, 0.9);
        i += 1;
      }
    }
    Matrix B(n, 1), C(1, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      B(i, 0) = uniform(0.5, 1.5);
      C(0, i) = (unit(rng) < 0.5 ? -1.0 : 1.0) * uniform(0.5, 1.5);
    }

    std::vector<double> h(2 * blocks + 3, 0.0);
    Vector state = B.col(0);
    for (std::size_t k = 1; k < h.size(); ++k) {
      h[k] = (C * state)(0, 0);
      state = A * state;
    }
    const Vector sv = numerics::svd(era::build_hankel(h, blocks, 1)).sigma;
    if (sv(n - 1) / sv.sum() < 0.02) continue;

    // Hide the modal structure behind a well-conditioned similarity.
    Matrix T = Matrix::Identity(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) T(i, j) += uniform(-0.3, 0.3);
    const Vector tsv = numerics::svd(T).sigma;
    if (tsv(n - 1) < 0.1 * tsv(0)) continue;
    const Matrix Tinv = T.inverse();
    sys.A = T * A * Tinv;
    sys.B = T * B;
    sys.C = C * Tinv;
    break;
  }
  sys.D = Matrix::Zero(1, 1);
  sys.discrete = true;
  sys.sample_time = 1e-3;

  era::ChirpSpec chirp{1.0, 1.0, 450.0, 4096, 1000.0};
  era::EraDataset data;
  data.u = era::gen_chirp(chirp);
  data.u.resize(data.u.size() + 1024, 0.0);
  data.y = era::simulate_discrete(sys, data.u);
  data.sample_rate = chirp.sample_rate;

  fs::create_directories(out.dir);
  const auto csv = out.dir / ("dataset-" + std::to_string(order) + "-" + std::to_string(seed) +
                              ".csv");
  era::write_dataset_csv(data, csv);
  nlohmann::json j;
  j["seed"] = seed;
  j["order"] = order;
  j["A"] = detail::to_json(sys.A);
  j["B"] = detail::to_json(sys.B);
  j["C"] = detail::to_json(sys.C);
  j["poles"] = detail::to_json(numerics::eigenvalues(sys.A));
  auto truth = csv;
  truth.replace_extension(".json");
  detail::write_json(truth, j);
  log << "wrote " << csv.string() << " (" << data.u.size() << " samples)\n";

  RunReport report;
  report.scenario = csv.stem().string();
  report.artifacts = {csv, truth};
  report.wall_seconds = seconds_since(start);
  return report;
}

}  // namespace obetc::cli
