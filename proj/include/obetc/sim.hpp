#pragma once

// Fixed-step simulation of the observer-based event-triggered loop.
//
// The plant and the (identical) local and remote observers are integrated
// with explicit Euler on a uniform grid. The event detector is evaluated at
// grid points only; t = 0 always fires. At an event the plant output y(t_k),
// the estimate snapshot and the held control u = -K xhat(t_k) are refreshed
// (after `delay` seconds when a transmission delay is configured).

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "obetc/design.hpp"

namespace obetc::sim {

using design::GainSet;
using design::TriggerDesign;

enum class TriggerPolicy {
  kQuadraticOnly,      // quadratic form >= 0
  kQuadraticAndFloor,  // quadratic form >= 0 and ||X|| > epsilon
  kPeriodic,           // every grid point
};

/// CLI spellings: "event", "event-floor", "periodic".
std::string_view to_string(TriggerPolicy policy);
TriggerPolicy parse_policy(std::string_view name);

struct SimConfig {
  double step = 1e-4;
  double horizon = 10.0;
  Vector x0;
  Vector xhat0;
  TriggerPolicy policy = TriggerPolicy::kQuadraticAndFloor;
  double delay = 0.0;  // integer multiple of step
  bool keep_records = true;
  // Weights for the accumulated quadratic cost; identity when empty.
  Matrix cost_Q;
  Matrix cost_R;

  std::size_t steps() const;        // horizon / step
  std::size_t delay_steps() const;  // delay / step
  void validate(const LtiModel& model) const;
};

struct SimState {
  double t = 0.0;
  Vector x;
  Vector xhat;
  Vector x_k;     // plant state whose output y(t_k) = C x_k was last delivered
  Vector xhat_k;  // estimate snapshot of the last delivered event
  Vector u_held;  // -K xhat_k
};

/// Column-oriented per-step storage (one entry per grid point).
struct Records {
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  std::vector<double> t;
  std::vector<double> x;     // n per step
  std::vector<double> xhat;  // n per step
  std::vector<double> u;     // m per step
  std::vector<double> norm_X;
  std::vector<double> quad;
  std::vector<std::uint8_t> event;

  std::size_t size() const { return t.size(); }
  Eigen::Map<const Vector> x_at(std::size_t i) const { return {x.data() + i * n, n}; }
  Eigen::Map<const Vector> xhat_at(std::size_t i) const { return {xhat.data() + i * n, n}; }
  Eigen::Map<const Vector> u_at(std::size_t i) const { return {u.data() + i * m, m}; }
};

struct EventLog {
  std::vector<double> times;
  std::size_t packet_count = 0;
  double min_interval = 0.0;  // +inf with fewer than two events
  double analytic_tau = 0.0;
  double beta_hat = 0.0;      // max ||d psi / dt|| observed between events
};

struct SimTrace {
  Records records;
  EventLog events;
  std::size_t grid_points = 0;  // horizon / step + 1
  double step = 0.0;
  double horizon = 0.0;
  double sigma = 1.0;
  double epsilon = 0.0;
  double ultimate_bound = 0.0;
  // Accumulated online so they are available without records.
  double jx_integral = 0.0;
  double jx_from = 0.0;
  double jx_to = 0.0;
  double lqr_cost = 0.0;
  double tail_sup_norm_X = 0.0;  // sup ||X|| over t >= 0.9 horizon
  SimState final_state;
  double final_norm_X = 0.0;
};

struct MetricsReport {
  std::size_t n_s = 0;
  std::size_t baseline_steps = 0;
  double reduction_pct = 0.0;
  // Same ratio with the baseline cut at the last event (the transient window).
  std::size_t transient_steps = 0;
  double transient_reduction_pct = 0.0;
  double min_interval = 0.0;
  double J_X = 0.0;
  double lqr_cost = 0.0;
  double ultimate_bound = 0.0;
  double analytic_tau = 0.0;
  double beta_hat = 0.0;
  double terminal_norm_X = 0.0;
  double tail_sup_norm_X = 0.0;
};

/// [B K (xhat - xhat_k); L (y - y_k)]
Vector compute_psi(const Matrix& B, const Matrix& K, const Matrix& L, const Vector& xhat,
                   const Vector& xhat_k, const Vector& y, const Vector& y_k);

/// [X; psi]^T Phi [X; psi]
double trigger_quadratic(const Vector& X, const Vector& psi, const Matrix& Phi);

bool should_trigger(double quadratic, double norm_X, double epsilon, TriggerPolicy policy);
bool should_trigger(const Vector& X, const Vector& psi, const Matrix& Phi, double epsilon,
                    TriggerPolicy policy);

/// One explicit-Euler step of plant and observer with the held snapshot.
/// Throws Diverged once ||x|| exceeds 1e9.
SimState step(const SimState& state, const LtiModel& model, const GainSet& gains, double T);

SimTrace simulate(const LtiModel& model, const GainSet& gains, const TriggerDesign& trigger,
                  const SimConfig& config);

/// simulate() with the transmission delay set to `delay` seconds.
SimTrace inject_delay(const LtiModel& model, const GainSet& gains, const TriggerDesign& trigger,
                      SimConfig config, double delay);

/// baseline_steps = 0 uses the trace's own grid size.
MetricsReport metrics(const SimTrace& trace, std::size_t baseline_steps = 0);

struct TauBound {
  double tau = 0.0;
  double alpha = 0.0;
  double gamma = 0.0;
  double theta_min = 0.0;
  bool degenerate = false;  // sigma == 1 or epsilon == 0
};

/// Lower bound on inter-event times from the Zeno-exclusion argument.
TauBound analytic_tau(const Matrix& A_tilde, const Matrix& P_tilde, const Matrix& Q_tilde,
                      double sigma, double epsilon, double beta_hat);

struct SweepPoint {
  double sigma = 0.0;
  double epsilon = 0.0;
  std::size_t n_s = 0;
  double J_X = 0.0;
  double min_interval = 0.0;
};

/// One simulation per (sigma, epsilon) pair, run on up to `threads` workers.
/// Results are returned in input order and do not depend on scheduling.
std::vector<SweepPoint> sweep(const LtiModel& model, const GainSet& gains,
                              const std::vector<std::pair<double, double>>& points,
                              const Matrix& Q_tilde, const SimConfig& config,
                              unsigned threads = 0);

std::vector<SweepPoint> sigma_sweep(const LtiModel& model, const GainSet& gains,
                                    const std::vector<double>& sigmas, double epsilon,
                                    const Matrix& Q_tilde, const SimConfig& config);

}  // namespace obetc::sim
