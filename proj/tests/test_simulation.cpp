#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "raswe/model.hpp"
#include "raswe/simulation.hpp"

using namespace raswe;
using namespace raswe::sim;

TEST(Laws, Values) {
  const auto c0 = covariance_laws(0);
  EXPECT_NEAR(c0.Q(0, 0), 0.004 * 7.1, 1e-15);
  EXPECT_NEAR(c0.Q(0, 1), 0.004 * 0.2, 1e-15);
  EXPECT_NEAR(c0.Q(1, 3), 0.004 * 0.1, 1e-15);
  EXPECT_NEAR(c0.R(0, 0), 0.00075 * 9.1, 1e-15);
  EXPECT_NEAR(c0.R(3, 3), 0.00075 * 1.1, 1e-15);
  EXPECT_NEAR(c0.R(2, 3), 0.00075 * 0.2, 1e-15);
  EXPECT_TRUE(c0.Q.isApprox(c0.Q.transpose(), 0.0));

  const Mat3 mu = drag_law(100);
  EXPECT_NEAR(mu(0, 0), 1.03, 1e-12);
  EXPECT_NEAR(mu(1, 1), 1.0 + 0.03 * std::sin(std::numbers::pi * 100 / 250), 1e-12);
  EXPECT_DOUBLE_EQ(mu(0, 1), 0.0);

  EXPECT_TRUE(drag_law(0).isIdentity(0.0));
}

TEST(Laws, AccelerationTracksCircle) {
  const double dt = 0.04;
  const long k = 300;
  const double t = k * dt;
  const Vec3 target(-std::numbers::pi * std::sin(t / 12) / 2.4, std::numbers::pi * std::cos(t / 12) / 2.4,
                    0.05 * std::cos(t / 24));
  EXPECT_TRUE(accel_law(k, target, dt).isZero(1e-15));
  EXPECT_TRUE(accel_law(k, Vec3::Zero(), dt).isApprox(target));
}

TEST(Laws, PositiveDefiniteOverRun) {
  SimScenario s;
  EXPECT_NO_THROW(s.validate());
}

TEST(Simulation, DeterministicInSeed) {
  SimScenario s;
  s.steps = 100;
  const auto a = simulate_truth(s);
  const auto b = simulate_truth(s);
  ASSERT_EQ(a.x.size(), 121u);
  ASSERT_EQ(a.frames.size(), 120u);
  for (std::size_t k = 0; k < a.x.size(); ++k) EXPECT_TRUE(a.x[k] == b.x[k]);
  s.seed = 2;
  const auto c = simulate_truth(s);
  EXPECT_FALSE(a.x.back() == c.x.back());
}

TEST(Simulation, ConsistentWithModel) {
  SimScenario s;
  s.steps = 50;
  s.noise_scale = 0.0;
  const auto truth = simulate_truth(s);
  for (long k = 1; k <= s.total_steps(); ++k) {
    const Mat6 A = model::build_transition(s.dt, DragMatrix(truth.mu[k]));
    const Vec6 pred = A * truth.x[k - 1] + model::build_input(s.dt, truth.accel[k]);
    EXPECT_TRUE(truth.x[k].isApprox(pred, 1e-14));
    const auto& f = truth.frames[k - 1];
    EXPECT_NEAR(f.t, k * s.dt, 1e-12);
    EXPECT_NEAR(*f.uwb_range, truth.x[k].head<3>().norm(), 1e-12);
    EXPECT_TRUE((f.of_velocity->isApprox(truth.x[k].tail<3>())));
  }
}

TEST(Simulation, SampledNoiseMatchesLaws) {
  SimScenario s;
  s.steps = 6000;
  Mat6 Q = covariance_laws(0).Q;
  Mat4 R = covariance_laws(0).R;
  s.noise = [&](long) { return NoiseCovariances{Q, R}; };
  const auto truth = simulate_truth(s);

  Mat6 qs = Mat6::Zero();
  Mat4 rs = Mat4::Zero();
  const long n = s.total_steps();
  for (long k = 1; k <= n; ++k) {
    const Mat6 A = model::build_transition(s.dt, DragMatrix(truth.mu[k]));
    const Vec6 w = truth.x[k] - A * truth.x[k - 1] - model::build_input(s.dt, truth.accel[k]);
    const Vec4 v = truth.y[k] - truth.y_clean[k];
    qs += w * w.transpose() / n;
    rs += v * v.transpose() / n;
  }
  EXPECT_LT((qs - Q).norm() / Q.norm(), 0.15);
  EXPECT_LT((rs - R).norm() / R.norm(), 0.15);
}

TEST(Simulation, ProcessNoiseScale) {
  SimScenario s;
  s.steps = 50;
  s.process_noise_scale = 0.0;
  const auto truth = simulate_truth(s);
  for (long k = 1; k <= s.total_steps(); ++k) {
    const Mat6 A = model::build_transition(s.dt, DragMatrix(truth.mu[k]));
    EXPECT_TRUE(truth.x[k].isApprox(A * truth.x[k - 1] + model::build_input(s.dt, truth.accel[k]), 1e-14));
  }
}

TEST(Simulation, Outages) {
  SimScenario s;
  s.steps = 60;
  s.uwb_outages = {{10, 5}};
  s.of_outages = {{30, 30}};
  const auto truth = simulate_truth(s);
  for (long k = 1; k <= s.total_steps(); ++k) {
    const auto& f = truth.frames[k - 1];
    const bool uwb_out = k >= 10 && k < 15;
    const bool of_out = k >= 30 && k < 60;
    EXPECT_EQ(f.uwb_ok, !uwb_out) << k;
    EXPECT_EQ(f.uwb_range.has_value(), !uwb_out) << k;
    EXPECT_EQ(f.of_ok, !of_out) << k;
    EXPECT_EQ(f.of_velocity.has_value(), !of_out) << k;
  }
}

TEST(Simulation, TrajectoryStaysBounded) {
  SimScenario s;
  const auto truth = simulate_truth(s);
  for (const auto& x : truth.x) {
    ASSERT_TRUE(x.allFinite());
    ASSERT_LT(x.head<3>().norm(), 200.0);
    ASSERT_LT(x.tail<3>().norm(), 20.0);
  }
}

TEST(Simulation, ValidateRejects) {
  SimScenario s;
  s.noise = [](long) { return NoiseCovariances{-Mat6::Identity(), Mat4::Identity()}; };
  EXPECT_THROW(s.validate(), ConfigError);
  SimScenario t;
  t.dt = 0.0;
  EXPECT_THROW(t.validate(), ConfigError);
}

TEST(MonteCarlo, ThreadCountDoesNotChangeResults) {
  SimScenario s;
  s.steps = 80;
  const EstimatorConfig cfg;
  const auto a = run_monte_carlo(s, 3, cfg, false, 1);
  const auto b = run_monte_carlo(s, 3, cfg, false, 3);
  ASSERT_EQ(a.failed, 0);
  ASSERT_EQ(b.failed, 0);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(a.runs[i].seed, s.seed + i);
    EXPECT_EQ(a.runs[i].metrics.position_rmse, b.runs[i].metrics.position_rmse);
    EXPECT_EQ(a.runs[i].metrics.kld_q_full, b.runs[i].metrics.kld_q_full);
  }
  EXPECT_EQ(a.mean.drag_rel_rmse, b.mean.drag_rel_rmse);
}

TEST(MonteCarlo, FailuresCollected) {
  SimScenario s;
  s.steps = 10;
  s.noise = [](long) { return NoiseCovariances{-Mat6::Identity(), Mat4::Identity()}; };
  const auto batch = run_monte_carlo(s, 2, EstimatorConfig{}, false, 1);
  EXPECT_EQ(batch.failed, 2);
  EXPECT_FALSE(batch.runs[0].error.empty());
}

TEST(MonteCarlo, CallbackSeesSeries) {
  SimScenario s;
  s.steps = 30;
  int calls = 0;
  const auto batch = run_monte_carlo(s, 2, EstimatorConfig{}, false, 1,
                                     [&](int, const RunResult& r) {
                                       ++calls;
                                       EXPECT_EQ(r.series.steps.size(), 30u);
                                     });
  EXPECT_EQ(calls, 2);
  EXPECT_TRUE(batch.runs[0].series.steps.empty());
}
