#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "obetc/sysid.hpp"
#include "test_support.hpp"

namespace obetc::era {
namespace {

using numerics::Complex;

double rel_l2(const std::vector<double>& got, const std::vector<double>& want, std::size_t n) {
  double err = 0.0, ref = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    err += (got[k] - want[k]) * (got[k] - want[k]);
    ref += want[k] * want[k];
  }
  return std::sqrt(err / ref);
}

// Broadband excitation followed by a quiet tail so the response decays
// inside the record.
std::vector<double> padded_chirp(std::size_t tail = 1024) {
  ChirpSpec spec;
  spec.amplitude = 1.0;
  spec.f_start = 1.0;
  spec.f_end = 450.0;
  spec.samples = 4096;
  spec.sample_rate = 1000.0;
  auto u = gen_chirp(spec);
  u.resize(u.size() + tail, 0.0);
  return u;
}

TEST(Chirp, StartsAtZero) {
  for (double a : {0.05, 1.0, 3.0}) {
    ChirpSpec spec;
    spec.amplitude = a;
    EXPECT_EQ(gen_chirp(spec).front(), 0.0);
  }
}

TEST(Chirp, MatchesFormulaPointwise) {
  ChirpSpec spec{1.0, 1.0, 2.0, 100, 1.0};
  const auto u = gen_chirp(spec);
  ASSERT_EQ(u.size(), 100u);
  const double r = std::pow(2.0, 1.0 / 100.0);
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double ref =
        std::sin(2.0 * std::numbers::pi * (std::pow(r, double(k)) - 1.0) / std::log(r));
    EXPECT_NEAR(u[k], ref, 1e-10) << k;
  }
}

TEST(Chirp, LinearInAmplitude) {
  ChirpSpec one;
  one.amplitude = 1.0;
  ChirpSpec two = one;
  two.amplitude = 2.0;
  const auto a = gen_chirp(one);
  const auto b = gen_chirp(two);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(b[k], 2.0 * a[k]);
}

TEST(Chirp, RejectsBadSpecs) {
  ChirpSpec s;
  s.amplitude = 0.0;
  EXPECT_THROW(gen_chirp(s), Error);
  s = {};
  s.f_end = s.f_start;
  EXPECT_THROW(gen_chirp(s), Error);
  s = {};
  s.samples = 1;
  EXPECT_THROW(gen_chirp(s), Error);
  s = {};
  s.f_start = -1.0;
  try {
    gen_chirp(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBadSpec);
  }
}

TEST(ImpulseResponse, IdentityChannel) {
  const auto u = padded_chirp(0);
  const auto h = impulse_response(u, u, 0.0);
  EXPECT_NEAR(h[0], 1.0, 1e-8);
  for (std::size_t k = 1; k < h.size(); ++k) ASSERT_NEAR(h[k], 0.0, 1e-8) << k;
}

TEST(ImpulseResponse, DelayShiftsTheImpulse) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  std::vector<double> u(256);
  for (auto& v : u) v = g(rng);
  const std::size_t d = 7;
  std::vector<double> y(u.size(), 0.0);
  // Circular delay, which is what spectral division inverts exactly.
  for (std::size_t k = 0; k < u.size(); ++k) y[(k + d) % u.size()] = u[k];
  const auto h = impulse_response(u, y, 0.0);
  for (std::size_t k = 0; k < h.size(); ++k) EXPECT_NEAR(h[k], k == d ? 1.0 : 0.0, 1e-8);
}

TEST(ImpulseResponse, RecoversEulerSystem) {
  // x' = [[0, 1], [-100, -10]] x + [0, 1]' u, y = [1, 0] x, Euler with T = 1e-3.
  const double T = 1e-3;
  testing::Matrix Ac(2, 2);
  Ac << 0, 1, -100, -10;
  LtiModel d;
  d.A = testing::Matrix::Identity(2, 2) + T * Ac;
  d.B = T * (testing::Matrix(2, 1) << 0, 1).finished();
  d.C = (testing::Matrix(1, 2) << 1, 0).finished();
  d.D = testing::Matrix::Zero(1, 1);

  const auto u = padded_chirp();
  const auto y = testing::run_discrete(d, u);
  std::vector<double> delta(u.size(), 0.0);
  delta[0] = 1.0;
  const auto h_ref = testing::run_discrete(d, delta);

  const auto h = impulse_response(u, y);
  EXPECT_LE(rel_l2(h, h_ref, 1024), 1e-3);
}

TEST(ImpulseResponse, LinearInOutput) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  const auto u = padded_chirp(0);
  std::vector<double> y1(u.size()), y2(u.size()), sum(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) {
    y1[k] = g(rng);
    y2[k] = g(rng);
    sum[k] = y1[k] + y2[k];
  }
  const auto h1 = impulse_response(u, y1);
  const auto h2 = impulse_response(u, y2);
  const auto hs = impulse_response(u, sum);
  for (std::size_t k = 0; k < u.size(); ++k) ASSERT_NEAR(hs[k], h1[k] + h2[k], 1e-10);
}

TEST(ImpulseResponse, Errors) {
  const std::vector<double> zeros(16, 0.0), ones(16, 1.0), short_u(4, 1.0);
  try {
    impulse_response(zeros, ones);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateInput);
  }
  EXPECT_THROW(impulse_response(short_u, short_u), Error);
  EXPECT_THROW(impulse_response(ones, std::vector<double>(15, 1.0)), Error);
}

TEST(Hankel, Examples) {
  const std::vector<double> h{1, 2, 3, 4, 5};
  const Matrix H = build_hankel(h, 1, 1);
  EXPECT_EQ(H, (Matrix(2, 2) << 2, 3, 3, 4).finished());
  try {
    build_hankel(h, 2, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTooShort);
  }
}

TEST(Hankel, SymmetricAndShifted) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  std::vector<double> h(64);
  for (auto& v : h) v = g(rng);
  const Matrix H0 = build_hankel(h, 10, 1);
  const Matrix H1 = build_hankel(h, 10, 2);
  EXPECT_EQ(H0, H0.transpose());
  EXPECT_EQ(H1.leftCols(10), H0.rightCols(10));
  EXPECT_EQ(H1.topRows(10), H0.bottomRows(10));
}

TEST(SelectOrder, Examples) {
  EXPECT_EQ(select_order(std::vector<double>{10, 1e-6, 1e-7}, 0.99), 1u);
  EXPECT_EQ(select_order(std::vector<double>{1, 1, 1, 1}, 0.99), 4u);
  EXPECT_EQ(select_order(std::vector<double>{1, 1, 1, 1}, 0.5), 2u);
  EXPECT_THROW(select_order(std::vector<double>{1}, 0.0), Error);
}

TEST(SelectOrder, MonotoneInThreshold) {
  std::mt19937_64 rng(5);
  std::exponential_distribution<double> e;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> s(12);
    for (auto& v : s) v = e(rng);
    std::sort(s.rbegin(), s.rend());
    std::size_t prev = 0;
    for (double th = 0.05; th <= 1.0; th += 0.05) {
      const auto r = select_order(s, th);
      EXPECT_GE(r, prev);
      prev = r;
    }
  }
}

TEST(SelectOrder, ExactHankelRankIsTheOrder) {
  std::mt19937_64 rng(6);
  const auto sys = testing::random_modal_system(rng, 6);
  std::vector<double> delta(64, 0.0);
  delta[0] = 1.0;
  const auto h = testing::run_discrete(sys.model, delta);
  const auto dec = numerics::svd(build_hankel(h, 20, 1));
  std::vector<double> s(dec.sigma.data(), dec.sigma.data() + dec.sigma.size());
  EXPECT_EQ(select_order(s, 0.99), 6u);
}

TEST(Realize, GeometricSequence) {
  std::vector<double> h(32);
  h[0] = 0.0;
  for (std::size_t k = 1; k < h.size(); ++k) h[k] = std::pow(0.5, double(k - 1));
  const Matrix H0 = build_hankel(h, 5, 1);
  EXPECT_EQ(numerics::rank(H0), 1);
  const auto m = realize(H0, build_hankel(h, 5, 2), 1, 0.0);
  EXPECT_NEAR(m.A(0, 0), 0.5, 1e-12);
  EXPECT_NEAR((m.C * m.B)(0, 0), 1.0, 1e-12);
  EXPECT_TRUE(m.discrete);
}

TEST(Realize, MarkovParametersAndPoles) {
  std::mt19937_64 rng(7);
  const auto sys = testing::random_modal_system(rng, 4);
  const std::size_t N = 20;
  std::vector<double> delta(2 * N + 8, 0.0);
  delta[0] = 1.0;
  const auto h = testing::run_discrete(sys.model, delta);
  const auto m = realize(build_hankel(h, N, 1), build_hankel(h, N, 2), 4, h[0]);

  Matrix power = Matrix::Identity(4, 4);
  for (std::size_t k = 1; k <= 2 * N + 1; ++k) {
    EXPECT_NEAR((m.C * power * m.B)(0, 0), h[k], 1e-6) << k;
    power = m.A * power;
  }
  EXPECT_LE(testing::max_relative_pole_error(numerics::eigenvalues(m.A).eigenvalues, sys.poles),
            1e-6);
}

TEST(Realize, RankDeficientOrder) {
  std::vector<double> h(32, 0.0);
  for (std::size_t k = 1; k < h.size(); ++k) h[k] = std::pow(0.5, double(k - 1));
  try {
    realize(build_hankel(h, 5, 1), build_hankel(h, 5, 2), 3, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kRankDeficient);
  }
}

TEST(ValidateModel, SelfConsistentAndZeroModel) {
  std::mt19937_64 rng(8);
  const auto sys = testing::random_modal_system(rng, 3);
  EraDataset data;
  data.u = padded_chirp();
  data.y = testing::run_discrete(sys.model, data.u);
  EXPECT_GE(validate_model(sys.model, data), 0.99);

  LtiModel zero = sys.model;
  zero.C.setZero();
  EXPECT_NEAR(validate_model(zero, data), 0.0, 1e-3);
}

TEST(Tustin, TransferFunctionIsPreserved) {
  std::mt19937_64 rng(9);
  const auto sys = testing::random_modal_system(rng, 4);
  LtiModel d = sys.model;
  d.D(0, 0) = 0.3;
  const double T = d.sample_time;
  const LtiModel c = discrete_to_continuous(d);
  EXPECT_FALSE(c.discrete);

  auto tf = [](const LtiModel& m, Complex s) {
    const Eigen::Index n = m.n();
    const Eigen::MatrixXcd M =
        s * Eigen::MatrixXcd::Identity(n, n) - m.A.cast<Complex>();
    return (m.C.cast<Complex>() * M.lu().solve(m.B.cast<Complex>()))(0, 0) + m.D(0, 0);
  };
  for (double w : {0.1, 10.0, 300.0, 1500.0}) {
    const Complex s(0.0, w);
    const Complex z = (1.0 + s * T / 2.0) / (1.0 - s * T / 2.0);
    EXPECT_LE(std::abs(tf(c, s) - tf(d, z)), 1e-9 * std::max(1.0, std::abs(tf(d, z)))) << w;
  }

  const LtiModel back = continuous_to_discrete(c, T);
  EXPECT_LE((back.A - d.A).norm(), 1e-10);
  EXPECT_LE(std::abs((back.C * back.B)(0, 0) - (d.C * d.B)(0, 0)), 1e-10);
  EXPECT_NEAR(back.D(0, 0), d.D(0, 0), 1e-10);
}

TEST(Identify, RoundTripSixStates) {
  std::mt19937_64 rng(10);
  const auto sys = testing::random_modal_system(rng, 6);
  EraDataset data;
  data.u = padded_chirp();
  data.y = testing::run_discrete(sys.model, data.u);
  EraConfig cfg;
  cfg.hankel_blocks = 20;
  const auto id = identify(data, cfg);
  EXPECT_EQ(id.order, 6u);
  EXPECT_GE(id.energy_captured, 0.99);
  EXPECT_GE(id.fit, 0.99);
  EXPECT_LE(testing::max_relative_pole_error(numerics::eigenvalues(id.model.A).eigenvalues,
                                             sys.poles),
            1e-3);
  EXPECT_NEAR(id.model.sample_time, 1e-3, 1e-15);
}

TEST(Identify, ZeroOutputIsDegenerate) {
  EraDataset data;
  data.u = padded_chirp(0);
  data.y.assign(data.u.size(), 0.0);
  try {
    identify(data);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateInput);
  }
}

TEST(Dataset, CsvRoundTripAndErrors) {
  const auto dir = std::filesystem::temp_directory_path() / "obetc_sysid_test";
  std::filesystem::create_directories(dir);
  EraDataset data;
  data.u = {0.0, 0.5, -0.25, 1.0};
  data.y = {0.1, 0.2, 0.3, 0.4};
  data.sample_rate = 100.0;
  write_dataset_csv(data, dir / "ok.csv");
  const auto back = read_dataset_csv(dir / "ok.csv");
  EXPECT_EQ(back.u, data.u);
  EXPECT_EQ(back.y, data.y);
  EXPECT_NEAR(back.sample_rate, 100.0, 1e-9);

  {
    std::ofstream bad(dir / "bad.csv");
    bad << "t,u,y\n0,1,2\n0.01,oops,3\n";
  }
  try {
    read_dataset_csv(dir / "bad.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
  {
    std::ofstream bad(dir / "header.csv");
    bad << "time,input,output\n0,1,2\n";
  }
  EXPECT_THROW(read_dataset_csv(dir / "header.csv"), Error);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace obetc::era
