#include <cmath>
#include <deque>
#include <future>
#include <limits>
#include <sstream>
#include <thread>

#include "obetc/sim.hpp"

namespace obetc::sim {
namespace {

constexpr double kDivergenceLimit = 1e9;

std::size_t grid_count(double span, double step) {
  return static_cast<std::size_t>(std::llround(span / step));
}

// Explicit Euler on plant and observer. Both derivatives are evaluated at the
// current point before either state is updated.
void advance(SimState& s, const LtiModel& model, const Matrix& LC, double T, Vector& dx,
             Vector& dxhat) {
  dx.noalias() = model.A * s.x;
  dx.noalias() += model.B * s.u_held;
  dxhat.noalias() = model.A * s.xhat;
  dxhat.noalias() += model.B * s.u_held;
  dxhat.noalias() += LC * (s.x_k - s.xhat);
  s.x += T * dx;
  s.xhat += T * dxhat;
  s.t += T;
  if (!(s.x.norm() <= kDivergenceLimit)) {
    std::ostringstream os;
    os << "plant state norm exceeded " << kDivergenceLimit << " at t = " << s.t;
    throw Error(ErrorCode::kDiverged, os.str());
  }
}

struct Packet {
  std::size_t due = 0;
  Vector x;
  Vector xhat;
};

}  // namespace

std::size_t SimConfig::steps() const { return grid_count(horizon, step); }

std::size_t SimConfig::delay_steps() const { return grid_count(delay, step); }

void SimConfig::validate(const LtiModel& model) const {
  std::ostringstream os;
  if (!(step > 0.0)) {
    os << "step must be positive";
  } else if (!(horizon >= step)) {
    os << "horizon must be at least one step";
  } else if (std::abs(horizon / step - static_cast<double>(steps())) > 1e-6) {
    os << "horizon " << horizon << " is not a whole number of steps " << step;
  } else if (x0.size() != model.n() || xhat0.size() != model.n()) {
    os << "initial conditions must have " << model.n() << " entries";
  } else if (!(delay >= 0.0)) {
    os << "delay must be non-negative";
  } else if (std::abs(delay / step - static_cast<double>(delay_steps())) > 1e-6) {
    os << "delay " << delay << " is not a multiple of the step " << step;
  } else if (cost_Q.size() != 0 && (cost_Q.rows() != model.n() || cost_Q.cols() != model.n())) {
    os << "cost_Q must be " << model.n() << "x" << model.n();
  } else if (cost_R.size() != 0 && (cost_R.rows() != model.m() || cost_R.cols() != model.m())) {
    os << "cost_R must be " << model.m() << "x" << model.m();
  }
  if (!os.str().empty()) throw Error(ErrorCode::kBadSpec, os.str());
}

SimState step(const SimState& state, const LtiModel& model, const GainSet& gains, double T) {
  SimState next = state;
  Vector dx(model.n()), dxhat(model.n());
  advance(next, model, gains.L * model.C, T, dx, dxhat);
  return next;
}

SimTrace simulate(const LtiModel& model, const GainSet& gains, const TriggerDesign& trigger,
                  const SimConfig& config) {
  model.validate();
  config.validate(model);
  const Eigen::Index n = model.n();
  const Eigen::Index m = model.m();
  if (trigger.Phi.rows() != 4 * n) {
    throw Error(ErrorCode::kDimensionMismatch, "trigger design does not match the model");
  }

  const double T = config.step;
  const std::size_t N = config.steps();
  const std::size_t D = config.delay_steps();
  const Matrix cost_Q = config.cost_Q.size() ? config.cost_Q : Matrix(Matrix::Identity(n, n));
  const Matrix cost_R = config.cost_R.size() ? config.cost_R : Matrix(Matrix::Identity(m, m));
  const Matrix LC = gains.L * model.C;

  SimTrace trace;
  trace.grid_points = N + 1;
  trace.step = T;
  trace.horizon = config.horizon;
  trace.sigma = trigger.sigma;
  trace.epsilon = trigger.epsilon;
  trace.ultimate_bound = trigger.ultimate_bound();
  trace.jx_from = config.horizon >= 10.0 ? 5.0 : 0.5 * config.horizon;
  trace.jx_to = config.horizon >= 10.0 ? 10.0 : config.horizon;

  Records& rec = trace.records;
  rec.n = n;
  rec.m = m;
  if (config.keep_records) {
    rec.t.reserve(N + 1);
    rec.x.reserve((N + 1) * n);
    rec.xhat.reserve((N + 1) * n);
    rec.u.reserve((N + 1) * m);
    rec.norm_X.reserve(N + 1);
    rec.quad.reserve(N + 1);
    rec.event.reserve(N + 1);
  }

  // Observers and actuator share the initial estimate, so until the first
  // packet lands they act on xhat(0).
  SimState s;
  s.x = config.x0;
  s.xhat = config.xhat0;
  s.x_k = config.xhat0;
  s.xhat_k = config.xhat0;
  s.u_held = -gains.K * config.xhat0;

  // Reference the detector compares against: the last *transmitted* snapshot.
  Vector sent_x = s.x_k;
  Vector sent_xhat = s.xhat_k;
  std::deque<Packet> in_flight;

  Vector X(2 * n), psi(2 * n), psi_prev(2 * n), z(4 * n), dx(n), dxhat(n);
  psi_prev.setZero();
  const Matrix BK = model.B * gains.K;

  const std::size_t jx_first = static_cast<std::size_t>(std::ceil(trace.jx_from / T - 1e-9));
  const std::size_t jx_last = static_cast<std::size_t>(std::floor(trace.jx_to / T + 1e-9));
  const std::size_t tail_first = static_cast<std::size_t>(std::ceil(0.9 * N - 1e-9));
  double prev_xhat_norm = 0.0;
  double prev_cost = 0.0;
  double min_gap = std::numeric_limits<double>::infinity();

  for (std::size_t j = 0; j <= N; ++j) {
    s.t = static_cast<double>(j) * T;
    X.head(n) = s.x;
    X.tail(n) = s.x - s.xhat;
    psi.head(n).noalias() = BK * (s.xhat - sent_xhat);
    psi.tail(n).noalias() = LC * (s.x - sent_x);
    const double norm_X = X.norm();
    z << X, psi;
    const double quad = z.dot(trigger.Phi * z);

    // psi is continuous between events, so the finite difference against the
    // post-event value of the previous point stays within one interval.
    if (j > 0) {
      trace.events.beta_hat = std::max(trace.events.beta_hat, (psi - psi_prev).norm() / T);
    }

    const bool fire = j == 0 || should_trigger(quad, norm_X, trigger.epsilon, config.policy);
    if (fire) {
      if (!trace.events.times.empty()) min_gap = std::min(min_gap, s.t - trace.events.times.back());
      trace.events.times.push_back(s.t);
      sent_x = s.x;
      sent_xhat = s.xhat;
      in_flight.push_back({j + D, s.x, s.xhat});
      psi_prev.setZero();
    } else {
      psi_prev = psi;
    }
    while (!in_flight.empty() && in_flight.front().due <= j) {
      s.x_k = std::move(in_flight.front().x);
      s.xhat_k = std::move(in_flight.front().xhat);
      s.u_held = -gains.K * s.xhat_k;
      in_flight.pop_front();
    }

    if (config.keep_records) {
      rec.t.push_back(s.t);
      rec.x.insert(rec.x.end(), s.x.data(), s.x.data() + n);
      rec.xhat.insert(rec.xhat.end(), s.xhat.data(), s.xhat.data() + n);
      rec.u.insert(rec.u.end(), s.u_held.data(), s.u_held.data() + m);
      rec.norm_X.push_back(norm_X);
      rec.quad.push_back(quad);
      rec.event.push_back(fire ? 1 : 0);
    }

    const double xhat_norm = s.xhat.norm();
    if (j > jx_first && j <= jx_last) trace.jx_integral += 0.5 * T * (prev_xhat_norm + xhat_norm);
    prev_xhat_norm = xhat_norm;
    const double cost = 0.5 * (s.x.dot(cost_Q * s.x) + s.u_held.dot(cost_R * s.u_held));
    if (j > 0) trace.lqr_cost += 0.5 * T * (prev_cost + cost);
    prev_cost = cost;
    if (j >= tail_first) trace.tail_sup_norm_X = std::max(trace.tail_sup_norm_X, norm_X);

    if (j == N) {
      trace.final_norm_X = norm_X;
      break;
    }
    advance(s, model, LC, T, dx, dxhat);
  }
  trace.final_state = s;

  EventLog& log = trace.events;
  log.packet_count = log.times.size();
  log.min_interval = min_gap;
  log.analytic_tau = analytic_tau(trigger.A_tilde, trigger.P_tilde, trigger.Q_tilde,
                                  trigger.sigma, trigger.epsilon, log.beta_hat)
                         .tau;
  return trace;
}

SimTrace inject_delay(const LtiModel& model, const GainSet& gains, const TriggerDesign& trigger,
                      SimConfig config, double delay) {
  config.delay = delay;
  return simulate(model, gains, trigger, config);
}

std::vector<SweepPoint> sweep(const LtiModel& model, const GainSet& gains,
                              const std::vector<std::pair<double, double>>& points,
                              const Matrix& Q_tilde, const SimConfig& config, unsigned threads) {
  SimConfig light = config;
  light.keep_records = false;

  auto run_one = [&](std::pair<double, double> p) {
    const auto td = design::build_trigger_design(model, gains, Q_tilde, p.first, p.second);
    const auto trace = simulate(model, gains, td, light);
    const auto rep = metrics(trace);
    return SweepPoint{p.first, p.second, rep.n_s, rep.J_X, rep.min_interval};
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  std::vector<SweepPoint> out(points.size());
  for (std::size_t begin = 0; begin < points.size(); begin += threads) {
    const std::size_t end = std::min(points.size(), begin + threads);
    std::vector<std::future<SweepPoint>> jobs;
    for (std::size_t i = begin; i < end; ++i) {
      jobs.push_back(std::async(std::launch::async, run_one, points[i]));
    }
    for (std::size_t i = begin; i < end; ++i) out[i] = jobs[i - begin].get();
  }
  return out;
}

std::vector<SweepPoint> sigma_sweep(const LtiModel& model, const GainSet& gains,
                                    const std::vector<double>& sigmas, double epsilon,
                                    const Matrix& Q_tilde, const SimConfig& config) {
  std::vector<std::pair<double, double>> points;
  for (double s : sigmas) points.emplace_back(s, epsilon);
  return sweep(model, gains, points, Q_tilde, config);
}

}  // namespace obetc::sim
