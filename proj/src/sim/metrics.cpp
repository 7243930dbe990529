#include <algorithm>
#include <cmath>

#include "obetc/sim.hpp"

namespace obetc::sim {

MetricsReport metrics(const SimTrace& trace, std::size_t baseline_steps) {
  MetricsReport r;
  r.n_s = trace.events.packet_count;
  r.baseline_steps = baseline_steps ? baseline_steps : trace.grid_points;
  r.reduction_pct = std::clamp(
      100.0 * (1.0 - static_cast<double>(r.n_s) / static_cast<double>(r.baseline_steps)), 0.0,
      100.0);
  const double last = trace.events.times.empty() ? 0.0 : trace.events.times.back();
  r.transient_steps = static_cast<std::size_t>(std::llround(last / trace.step)) + 1;
  r.transient_reduction_pct = std::clamp(
      100.0 * (1.0 - static_cast<double>(r.n_s) / static_cast<double>(r.transient_steps)), 0.0,
      100.0);
  r.min_interval = trace.events.min_interval;
  r.J_X = trace.jx_integral;
  r.lqr_cost = trace.lqr_cost;
  r.ultimate_bound = trace.ultimate_bound;
  r.analytic_tau = trace.events.analytic_tau;
  r.beta_hat = trace.events.beta_hat;
  r.terminal_norm_X = trace.final_norm_X;
  r.tail_sup_norm_X = trace.tail_sup_norm_X;
  return r;
}

}  // namespace obetc::sim
