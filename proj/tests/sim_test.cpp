#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "obetc/sim.hpp"
#include "test_support.hpp"

namespace obetc::sim {
namespace {

struct Plant {
  LtiModel model;
  GainSet gains;
};

Plant maglev() {
  Plant p{testing::maglev_model(), {}};
  p.gains = design::design_gains(p.model, {Matrix::Identity(2, 2), Matrix::Ones(1, 1),
                                           100.0 * Matrix::Identity(2, 2),
                                           0.1 * Matrix::Ones(1, 1)});
  return p;
}

Plant mass_spring() {
  Plant p{testing::mass_spring_model(), {}};
  p.gains = design::design_gains(p.model, {Matrix::Identity(4, 4), Matrix::Ones(1, 1),
                                           Matrix::Identity(4, 4), Matrix::Ones(1, 1)});
  return p;
}

SimConfig maglev_config() {
  SimConfig c;
  c.step = 1e-4;
  c.horizon = 10.0;
  c.x0 = (Vector(2) << -1, 0).finished();
  c.xhat0 = Vector::Zero(2);
  return c;
}

SimConfig mass_spring_config() {
  SimConfig c;
  c.step = 1e-5;
  c.horizon = 10.0;
  c.x0 = (Vector(4) << 2, 1, -1, -1).finished();
  c.xhat0 = (Vector(4) << 2, 0, 0, 0).finished();
  return c;
}

TEST(Psi, Examples) {
  const auto p = maglev();
  const Vector xh = (Vector(2) << 0.3, -0.2).finished();
  const Vector y = (Vector(1) << 0.7).finished();
  EXPECT_TRUE(compute_psi(p.model.B, p.gains.K, p.gains.L, xh, xh, y, y).isZero(0.0));

  const Vector y_k = (Vector(1) << 0.1).finished();
  const Matrix zero_L = Matrix::Zero(2, 1);
  EXPECT_TRUE(compute_psi(p.model.B, p.gains.K, zero_L, xh, xh, y, y_k).tail(2).isZero(0.0));

  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const Vector a = testing::random_matrix(rng, 2, 1);
    const Vector b = testing::random_matrix(rng, 2, 1);
    const Vector ya = testing::random_matrix(rng, 1, 1);
    const Vector yb = testing::random_matrix(rng, 1, 1);
    const Vector psi = compute_psi(p.model.B, p.gains.K, p.gains.L, a, b, ya, yb);
    // Entrywise re-evaluation: B = [0, 1]', so only the second entry of the
    // upper block is non-zero.
    const double ku = p.gains.K(0, 0) * (a(0) - b(0)) + p.gains.K(0, 1) * (a(1) - b(1));
    EXPECT_NEAR(psi(0), 0.0, 1e-15);
    EXPECT_NEAR(psi(1), ku, 1e-12);
    EXPECT_NEAR(psi(2), p.gains.L(0, 0) * (ya(0) - yb(0)), 1e-12);
    EXPECT_NEAR(psi(3), p.gains.L(1, 0) * (ya(0) - yb(0)), 1e-12);
  }
}

TEST(Quadratic, SignExamples) {
  const auto p = maglev();
  const auto td = design::build_trigger_design(p.model, p.gains, {}, 0.75, 0.01);
  const Vector X = (Vector(4) << 1, -2, 0.5, 0.1).finished();
  const Vector zero = Vector::Zero(4);
  EXPECT_LT(trigger_quadratic(X, zero, td.Phi), 0.0);
  const auto td1 = design::build_trigger_design(p.model, p.gains, {}, 1.0, 0.01);
  EXPECT_EQ(trigger_quadratic(X, zero, td1.Phi), 0.0);
}

TEST(ShouldTrigger, PolicyTable) {
  using P = TriggerPolicy;
  EXPECT_FALSE(should_trigger(5.0, 0.01, 0.01, P::kQuadraticAndFloor));
  EXPECT_TRUE(should_trigger(5.0, 0.01, 0.01, P::kQuadraticOnly));
  EXPECT_FALSE(should_trigger(-1e-12, 1.0, 0.01, P::kQuadraticAndFloor));
  EXPECT_FALSE(should_trigger(-1e-12, 1.0, 0.01, P::kQuadraticOnly));
  EXPECT_TRUE(should_trigger(0.0, 1.0, 0.01, P::kQuadraticAndFloor));
  EXPECT_TRUE(should_trigger(0.0, 1.0, 0.01, P::kQuadraticOnly));
  EXPECT_TRUE(should_trigger(-10.0, 0.0, 0.01, P::kPeriodic));
}

TEST(ShouldTrigger, PolicyNames) {
  for (auto p : {TriggerPolicy::kQuadraticOnly, TriggerPolicy::kQuadraticAndFloor,
                 TriggerPolicy::kPeriodic}) {
    EXPECT_EQ(parse_policy(to_string(p)), p);
  }
  EXPECT_THROW(parse_policy("sometimes"), Error);
}

TEST(Step, EquilibriumStays) {
  const auto p = maglev();
  SimState s{0.0, Vector::Zero(2), Vector::Zero(2), Vector::Zero(2), Vector::Zero(2),
             Vector::Zero(1)};
  for (int i = 0; i < 10; ++i) s = step(s, p.model, p.gains, 1e-3);
  EXPECT_TRUE(s.x.isZero(0.0));
  EXPECT_TRUE(s.xhat.isZero(0.0));
  EXPECT_NEAR(s.t, 1e-2, 1e-15);
}

TEST(Step, FirstMaglevStepByHand) {
  const auto p = maglev();
  const double T = 1e-4;
  const auto td = design::build_trigger_design(p.model, p.gains, {}, 0.75, 0.01);
  SimConfig c = maglev_config();
  c.horizon = 10 * T;
  const auto trace = simulate(p.model, p.gains, td, c);
  // Event at t = 0: x_k = [-1, 0], xhat_k = 0, u = 0.
  // x1 = x0 + T (A x0) = [-1, -4T]; xhat1 = T L (C x_k - C xhat0) = -T L.
  const auto& r = trace.records;
  EXPECT_EQ(r.event[0], 1);
  EXPECT_NEAR(r.x_at(1)(0), -1.0, 1e-15);
  EXPECT_NEAR(r.x_at(1)(1), -4.0 * T, 1e-15);
  EXPECT_NEAR(r.xhat_at(1)(0), -T * p.gains.L(0, 0), 1e-15);
  EXPECT_NEAR(r.xhat_at(1)(1), -T * p.gains.L(1, 0), 1e-15);

  SimState s{0.0, c.x0, c.xhat0, c.x0, c.xhat0, Vector::Zero(1)};
  const auto next = step(s, p.model, p.gains, T);
  EXPECT_EQ(next.x, Vector(r.x_at(1)));
  EXPECT_EQ(next.xhat, Vector(r.xhat_at(1)));
}

TEST(Step, DivergenceIsReported) {
  auto p = maglev();
  p.gains.K.setZero();
  p.gains.L.setZero();
  SimState s{0.0, Vector::Constant(2, 1e8), Vector::Zero(2), Vector::Zero(2), Vector::Zero(2),
             Vector::Zero(1)};
  try {
    for (int i = 0; i < 1000; ++i) s = step(s, p.model, p.gains, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDiverged);
  }
}

// Continuous observer-based loop integrated with classical RK4 at a fine step.
Vector rk4_closed_loop(const Plant& p, const Vector& x0, const Vector& xhat0, double t_end) {
  const Eigen::Index n = p.model.n();
  Matrix F(2 * n, 2 * n);
  F << p.model.A, -p.model.B * p.gains.K, p.gains.L * p.model.C,
      p.model.A - p.model.B * p.gains.K - p.gains.L * p.model.C;
  Vector z(2 * n);
  z << x0, xhat0;
  const double h = 1e-5;
  const auto steps = static_cast<int>(std::llround(t_end / h));
  for (int i = 0; i < steps; ++i) {
    const Vector k1 = F * z;
    const Vector k2 = F * (z + 0.5 * h * k1);
    const Vector k3 = F * (z + 0.5 * h * k2);
    const Vector k4 = F * (z + h * k3);
    z += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return z;
}

TEST(Simulate, PeriodicConvergesToContinuousLoop) {
  const auto p = maglev();
  const auto td = design::build_trigger_design(p.model, p.gains, {}, 0.75, 0.01);
  SimConfig c = maglev_config();
  c.horizon = 1.0;
  c.policy = TriggerPolicy::kPeriodic;
  const Vector ref = rk4_closed_loop(p, c.x0, c.xhat0, 1.0);

  std::vector<double> err;
  for (double T : {4e-4, 2e-4, 1e-4}) {
    c.step = T;
    const auto tr = simulate(p.model, p.gains, td, c);
    Vector z(4);
    z << tr.final_state.x, tr.final_state.xhat;
    err.push_back((z - ref).norm());
  }
  EXPECT_LT(err[2], 1e-2);
  for (std::size_t i = 1; i < err.size(); ++i) {
    const double ratio = err[i - 1] / err[i];
    EXPECT_GT(ratio, 1.6) << i;
    EXPECT_LT(ratio, 2.6) << i;
  }
}

TEST(Simulate, MaglevEventCount) {
  const auto p = maglev();
  const auto td = design::build_trigger_design(p.model, p.gains, {}, 0.75, 0.01);
  const auto tr = simulate(p.model, p.gains, td, maglev_config());
  const auto rep = metrics(tr);
  EXPECT_EQ(tr.records.size(), 100001u);
  EXPECT_GE(rep.n_s, 72u);  // 84 +/- 15%
  EXPECT_LE(rep.n_s, 96u);
  EXPECT_GE(rep.min_interval, 0.005);
  EXPECT_GE(rep.min_interval, std::max(tr.step, rep.analytic_tau));
  EXPECT_GT(rep.analytic_tau, 0.0);
  EXPECT_EQ(tr.events.times.front(), 0.0);
  for (std::size_t k = 1; k < tr.events.times.size(); ++k) {
    EXPECT_GT(tr.events.times[k], tr.events.times[k - 1]);
  }
  EXPECT_GT(rep.reduction_pct, 99.0);
  EXPECT_LE(rep.reduction_pct, 100.0);
  EXPECT_GE(rep.transient_reduction_pct, 0.0);
  EXPECT_LE(rep.transient_steps, tr.grid_points);
}

TEST(Simulate, MassSpringEventCountAndQuietTail) {
  const auto p = mass_spring();
  const auto td = design::build_trigger_design(p.model, p.gains, {}, 0.95, 0.01);
  SimConfig c = mass_spring_config();
  c.keep_records = false;
  const auto tr = simulate(p.model, p.gains, td, c);
  const auto rep = metrics(tr);
  EXPECT_GE(rep.n_s, 24u);  // 30 +/- 20%
  EXPECT_LE(rep.n_s, 36u);
  EXPECT_GE(rep.min_interval, rep.analytic_tau);
  EXPECT_LE(rep.tail_sup_norm_X, 1.1 * rep.ultimate_bound);
  // The last packet goes out well before the horizon.
  EXPECT_LT(tr.events.times.back(), 0.9 * c.horizon);
}

TEST(Simulate, HugeFloorSendsOnlyTheFirstPacket) {
  const auto p = maglev();
  const auto td = design::build_trigger_design(p.model, p.gains, {}, 0.75, 1e6);
  // The open-loop plant grows like exp(2t); keep ||X|| below the floor.
  SimConfig c = maglev_config();
  c.horizon = 2.0;
  const auto tr = simulate(p.model, p.gains, td, c);
  EXPECT_EQ(tr.events.packet_count, 1u);
  EXPECT_EQ(tr.events.min_interval, std::numeric_limits<double>::infinity());
}

TEST(Simulate, PeriodicHasNoReduction) {
  const auto p = maglev();
  const auto td = design::build_trigger_design(p.model, p.gains, {}, 0.75, 0.01);
  SimConfig c = maglev_config();
  c.horizon = 1.0;
  c.policy = TriggerPolicy::kPeriodic;
  const auto rep = metrics(simulate(p.model, p.gains, td, c));
  EXPECT_EQ(rep.n_s, 10001u);
  EXPECT_EQ(rep.reduction_pct, 0.0);
}

TEST(Simulate, EventRuleAndHold) {
  const auto p = maglev();
  const auto td = design::build_trigger_design(p.model, p.gains, {}, 0.5, 0.01);
  const auto tr = simulate(p.model, p.gains, td, maglev_config());
  const auto& r = tr.records;
  for (std::size_t j = 0; j < r.size(); ++j) {
    const bool rule = r.quad[j] >= 0.0 && r.norm_X[j] > td.epsilon;
    if (j == 0) {
      ASSERT_EQ(r.event[j], 1);
      continue;
    }
    ASSERT_EQ(r.event[j] == 1, rule) << "j=" << j;
    if (r.event[j]) {
      // Zero delay: the control is refreshed from the estimate at the event.
      ASSERT_NEAR(r.u_at(j)(0), -(p.gains.K * r.xhat_at(j))(0), 1e-12);
    } else {
      ASSERT_EQ(r.u_at(j)(0), r.u_at(j - 1)(0)) << "j=" << j;
    }
  }
}

TEST(Simulate, QuadraticMatchesTwoTermFormulaAlongTrace) {
  const auto p = maglev();
  const auto td = design::build_trigger_design(p.model, p.gains, {}, 0.75, 0.01);
  SimConfig c = maglev_config();
  c.horizon = 2.0;
  const auto tr = simulate(p.model, p.gains, td, c);
  const auto& r = tr.records;
  std::size_t last_event = 0;
  for (std::size_t j = 1; j < r.size(); ++j) {
    // The quadratic at j is evaluated against the last event strictly before j.
    const Vector sent_x = r.x_at(last_event);
    const Vector sent_xhat = r.xhat_at(last_event);
    if (r.event[j]) last_event = j;
    if (j % 7) continue;
    Vector X(4), psi(4);
    X << r.x_at(j), r.x_at(j) - r.xhat_at(j);
    psi << p.model.B * p.gains.K * (r.xhat_at(j) - sent_xhat),
        p.gains.L * p.model.C * (r.x_at(j) - sent_x);
    const double direct =
        (td.sigma - 1.0) * X.dot(td.Q_tilde * X) + 2.0 * X.dot(td.P_tilde * psi);
    ASSERT_NEAR(r.quad[j], direct, 1e-10 * std::max(1.0, std::abs(direct))) << j;
  }
}

TEST(Simulate, Deterministic) {
  const auto p = maglev();
  const auto td = design::build_trigger_design(p.model, p.gains, {}, 0.5, 0.05);
  const auto a = simulate(p.model, p.gains, td, maglev_config());
  const auto b = simulate(p.model, p.gains, td, maglev_config());
  EXPECT_EQ(a.records.x, b.records.x);
  EXPECT_EQ(a.records.xhat, b.records.xhat);
  EXPECT_EQ(a.records.quad, b.records.quad);
  EXPECT_EQ(a.events.times, b.events.times);
}

TEST(Simulate, ConfigValidation) {
  const auto p = maglev();
  const auto td = design::build_trigger_design(p.model, p.gains, {}, 0.5, 0.05);
  SimConfig c = maglev_config();
  c.delay = 1.5e-4;
  EXPECT_THROW(simulate(p.model, p.gains, td, c), Error);
  c = maglev_config();
  c.x0 = Vector::Zero(3);
  EXPECT_THROW(simulate(p.model, p.gains, td, c), Error);
  c = maglev_config();
  c.step = 0.0;
  EXPECT_THROW(simulate(p.model, p.gains, td, c), Error);
}

TEST(Delay, ZeroDelayIsIdentical) {
  const auto p = maglev();
  const auto td = design::build_trigger_design(p.model, p.gains, {}, 0.75, 0.01);
  const auto a = simulate(p.model, p.gains, td, maglev_config());
  const auto b = inject_delay(p.model, p.gains, td, maglev_config(), 0.0);
  EXPECT_EQ(a.records.x, b.records.x);
  EXPECT_EQ(a.records.u, b.records.u);
  EXPECT_EQ(a.records.event, b.records.event);
}

TEST(Delay, PacketsLandLate) {
  const auto p = maglev();
  const auto td = design::build_trigger_design(p.model, p.gains, {}, 0.75, 0.01);
  SimConfig c = maglev_config();
  c.horizon = 1.0;
  const auto tr = inject_delay(p.model, p.gains, td, c, 0.01);  // 100 steps
  const auto& r = tr.records;
  // xhat0 = 0, so the actuator is idle until the t = 0 packet arrives.
  for (std::size_t j = 0; j < 100; ++j) ASSERT_EQ(r.u_at(j)(0), 0.0) << j;
  EXPECT_NEAR(r.u_at(100)(0), -(p.gains.K * r.xhat_at(0))(0), 1e-15);
}

TEST(Delay, MassSpringStillConverges) {
  const auto p = mass_spring();
  const auto td = design::build_trigger_design(p.model, p.gains, {}, 0.95, 0.01);
  SimConfig c = mass_spring_config();
  c.keep_records = false;
  for (double d : {0.01, 0.1}) {
    const auto tr = inject_delay(p.model, p.gains, td, c, d);
    EXPECT_LE(tr.final_state.x.norm(), 2.0 * tr.ultimate_bound) << d;
  }
}

TEST(Metrics, JXMatchesRecords) {
  const auto p = maglev();
  const auto td = design::build_trigger_design(p.model, p.gains, {}, 0.5, 0.05);
  const auto tr = simulate(p.model, p.gains, td, maglev_config());
  const auto& r = tr.records;
  double integral = 0.0;
  for (std::size_t j = 1; j < r.size(); ++j) {
    if (r.t[j - 1] < 5.0 - 1e-9 || r.t[j] > 10.0 + 1e-9) continue;
    integral += 0.5 * (r.t[j] - r.t[j - 1]) * (r.xhat_at(j - 1).norm() + r.xhat_at(j).norm());
  }
  EXPECT_NEAR(metrics(tr).J_X, integral, 1e-9 * std::max(1.0, integral));
  EXPECT_EQ(tr.jx_from, 5.0);
  EXPECT_EQ(tr.jx_to, 10.0);
}

TEST(Metrics, ShortHorizonUsesFinalHalf) {
  const auto p = maglev();
  const auto td = design::build_trigger_design(p.model, p.gains, {}, 0.5, 0.05);
  SimConfig c = maglev_config();
  c.horizon = 4.0;
  const auto tr = simulate(p.model, p.gains, td, c);
  EXPECT_EQ(tr.jx_from, 2.0);
  EXPECT_EQ(tr.jx_to, 4.0);
}

TEST(Metrics, ExplicitBaseline) {
  SimTrace tr;
  tr.step = 1e-3;
  tr.grid_points = 1001;
  tr.events.packet_count = 600;
  tr.events.times = {0.0, 0.5};
  EXPECT_NEAR(metrics(tr, 1000).reduction_pct, 40.0, 1e-12);
  EXPECT_EQ(metrics(tr, 100).reduction_pct, 0.0);  // clamped
}

TEST(Tau, DegenerateAndLimits) {
  const auto p = maglev();
  const auto td1 = design::build_trigger_design(p.model, p.gains, {}, 1.0, 0.01);
  const auto b1 = analytic_tau(td1.A_tilde, td1.P_tilde, td1.Q_tilde, 1.0, 0.01, 3.0);
  EXPECT_TRUE(b1.degenerate);
  EXPECT_EQ(b1.tau, 0.0);

  const auto td = design::build_trigger_design(p.model, p.gains, {}, 0.75, 0.01);
  const auto b0 = analytic_tau(td.A_tilde, td.P_tilde, td.Q_tilde, 0.75, 0.01, 0.0);
  const auto bs = analytic_tau(td.A_tilde, td.P_tilde, td.Q_tilde, 0.75, 0.01, 1e-15);
  EXPECT_FALSE(b0.degenerate);
  EXPECT_NEAR(b0.tau, bs.tau, 1e-9 * b0.tau);
  // tau shrinks as the psi rate grows.
  const auto big = analytic_tau(td.A_tilde, td.P_tilde, td.Q_tilde, 0.75, 0.01, 1e3);
  EXPECT_LT(big.tau, b0.tau);
  EXPECT_GT(big.tau, 0.0);
}

TEST(Tau, MatchesQuadratureOfTheComparisonOde) {
  // tau is the time the comparison ODE theta' = alpha (1 + theta)^2 + gamma
  // needs to climb from 0 to theta_min; integrate d theta / f(theta) with
  // Simpson's rule.
  const auto p = mass_spring();
  const auto td = design::build_trigger_design(p.model, p.gains, {}, 0.95, 0.01);
  const double beta = 40.0;
  const auto b = analytic_tau(td.A_tilde, td.P_tilde, td.Q_tilde, 0.95, 0.01, beta);
  auto f = [&](double th) { return b.alpha * (1.0 + th) * (1.0 + th) + b.gamma; };
  const int n = 20000;
  const double h = b.theta_min / n;
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += w / f(i * h);
  }
  EXPECT_NEAR(b.tau, acc * h / 3.0, 1e-9 * b.tau);
}

TEST(Sweep, MatchesDirectRunsAndTrends) {
  const auto p = maglev();
  SimConfig c = maglev_config();
  const std::vector<std::pair<double, double>> pts{{0.75, 0.01}, {0.5, 0.01}, {0.25, 0.01},
                                                   {0.75, 0.05}, {0.5, 0.05}, {0.25, 0.05}};
  const auto res = sweep(p.model, p.gains, pts, {}, c, 3);
  ASSERT_EQ(res.size(), pts.size());

  const auto td = design::build_trigger_design(p.model, p.gains, {}, 0.5, 0.05);
  const auto direct = metrics(simulate(p.model, p.gains, td, c));
  EXPECT_EQ(res[4].n_s, direct.n_s);
  EXPECT_EQ(res[4].J_X, direct.J_X);

  for (int row : {0, 3}) {
    EXPECT_GE(res[row].n_s, res[row + 1].n_s);
    EXPECT_GE(res[row + 1].n_s, res[row + 2].n_s);
  }
  for (int col = 0; col < 3; ++col) EXPECT_GE(res[col].n_s, res[col + 3].n_s);

  const auto single = sigma_sweep(p.model, p.gains, {0.5}, 0.05, {}, c);
  ASSERT_EQ(single.size(), 1u);
  EXPECT_EQ(single[0].n_s, direct.n_s);
}

}  // namespace
}  // namespace obetc::sim
