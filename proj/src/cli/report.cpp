#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "obetc/cli.hpp"
#include "report.hpp"

namespace obetc::cli {
namespace {

std::ofstream open_for_write(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kConfig, "cannot write " + path.string());
  return out;
}

// 10 significant digits.
void put(std::ostream& os, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  os << buf;
}

}  // namespace

std::string format_row(const Matrix& row, int precision) {
  std::ostringstream os;
  os << '[';
  for (Eigen::Index i = 0; i < row.size(); ++i) {
    char buf[48];
    const double v = row.data()[i];
    if (v != 0.0 && std::abs(v) < 0.5 * std::pow(10.0, -precision)) {
      std::snprintf(buf, sizeof buf, "%.*e", precision - 1, v);
    } else {
      std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    }
    os << (i ? ", " : "") << buf;
  }
  os << ']';
  return os.str();
}

void write_trace_csv(const sim::SimTrace& trace, const fs::path& path, std::size_t every) {
  const auto& r = trace.records;
  if (r.size() == 0) throw Error(ErrorCode::kBadSpec, "trace has no records to write");
  if (every == 0) every = 1;
  auto out = open_for_write(path);
  out << 't';
  for (Eigen::Index i = 1; i <= r.n; ++i) out << ",x" << i;
  for (Eigen::Index i = 1; i <= r.n; ++i) out << ",xh" << i;
  for (Eigen::Index i = 1; i <= r.m; ++i) out << ",u" << i;
  out << ",normX,quadform,event\n";
  for (std::size_t j = 0; j < r.size(); ++j) {
    // Event rows and the final row survive decimation.
    if (j % every != 0 && !r.event[j] && j + 1 != r.size()) continue;
    put(out, r.t[j]);
    for (Eigen::Index i = 0; i < r.n; ++i) out << ',', put(out, r.x_at(j)(i));
    for (Eigen::Index i = 0; i < r.n; ++i) out << ',', put(out, r.xhat_at(j)(i));
    for (Eigen::Index i = 0; i < r.m; ++i) out << ',', put(out, r.u_at(j)(i));
    out << ',';
    put(out, r.norm_X[j]);
    out << ',';
    put(out, r.quad[j]);
    out << ',' << int(r.event[j]) << '\n';
  }
}

void write_events_csv(const sim::EventLog& events, const fs::path& path) {
  auto out = open_for_write(path);
  out << "k,t_k,interval\n";
  for (std::size_t k = 0; k < events.times.size(); ++k) {
    out << k + 1 << ',';
    put(out, events.times[k]);
    out << ',';
    if (k > 0) put(out, events.times[k] - events.times[k - 1]);
    out << '\n';
  }
}

namespace detail {

nlohmann::json to_json(const Matrix& m) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json to_json(const Vector& v) {
  auto arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

nlohmann::json to_json(const numerics::Spectrum& s) {
  auto arr = nlohmann::json::array();
  for (const auto& ev : s.eigenvalues) arr.push_back({ev.real(), ev.imag()});
  return arr;
}

nlohmann::json scenario_json(const Scenario& s) {
  nlohmann::json j;
  j["name"] = s.name;
  j["model"] = {{"A", to_json(s.model.A)},
                {"B", to_json(s.model.B)},
                {"C", to_json(s.model.C)},
                {"D", to_json(s.model.D)}};
  if (s.identify) {
    j["model"]["identified_from"] = s.identify->dataset.string();
  }
  j["weights"] = {{"Q", to_json(s.weights.Q)},
                  {"R", to_json(s.weights.R)},
                  {"W", to_json(s.weights.W)},
                  {"V", to_json(s.weights.V)}};
  j["trigger"] = {{"sigma", s.sigma}, {"epsilon", s.epsilon}};
  j["trigger"]["Q_tilde"] = s.Q_tilde.size() ? to_json(s.Q_tilde) : nlohmann::json("identity");
  j["simulation"] = {{"step", s.sim.step},
                     {"horizon", s.sim.horizon},
                     {"x0", to_json(s.sim.x0)},
                     {"xhat0", to_json(s.sim.xhat0)},
                     {"policy", std::string(sim::to_string(s.sim.policy))},
                     {"delay", s.sim.delay}};
  return j;
}

nlohmann::json metrics_json(const sim::MetricsReport& m) {
  auto finite_or_null = [](double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
  };
  return {{"n_s", m.n_s},
          {"baseline_steps", m.baseline_steps},
          {"reduction_pct", m.reduction_pct},
          {"transient_steps", m.transient_steps},
          {"transient_reduction_pct", m.transient_reduction_pct},
          {"min_interval", finite_or_null(m.min_interval)},
          {"J_X", m.J_X},
          {"lqr_cost", m.lqr_cost},
          {"ultimate_bound", m.ultimate_bound},
          {"analytic_tau", m.analytic_tau},
          {"beta_hat", m.beta_hat},
          {"terminal_norm_X", m.terminal_norm_X},
          {"tail_sup_norm_X", m.tail_sup_norm_X}};
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_for_write(path);
  out << text;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  auto out = open_for_write(path);
  out << j.dump(2) << '\n';
}

std::string metrics_text(const sim::MetricsReport& m) {
  std::ostringstream os;
  auto line = [&](const char* key, double v) {
    os << key << " = ";
    put(os, v);
    os << '\n';
  };
  os << "n_s = " << m.n_s << '\n';
  os << "baseline_steps = " << m.baseline_steps << '\n';
  line("reduction_pct", m.reduction_pct);
  os << "transient_steps = " << m.transient_steps << '\n';
  line("transient_reduction_pct", m.transient_reduction_pct);
  line("min_interval", m.min_interval);
  line("J_X", m.J_X);
  line("lqr_cost", m.lqr_cost);
  line("ultimate_bound", m.ultimate_bound);
  line("analytic_tau", m.analytic_tau);
  line("beta_hat", m.beta_hat);
  line("terminal_norm_X", m.terminal_norm_X);
  line("tail_sup_norm_X", m.tail_sup_norm_X);
  return os.str();
}

void write_sweep_csv(const std::vector<sim::SweepPoint>& points, const fs::path& path) {
  auto out = open_for_write(path);
  out << "sigma,epsilon,n_s,J_X,min_interval\n";
  for (const auto& p : points) {
    put(out, p.sigma);
    out << ',';
    put(out, p.epsilon);
    out << ',' << p.n_s << ',';
    put(out, p.J_X);
    out << ',';
    put(out, p.min_interval);
    out << '\n';
  }
}

}  // namespace detail
}  // namespace obetc::cli
