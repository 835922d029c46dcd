#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "raswe/metrics.hpp"

using namespace raswe;
using namespace raswe::metrics;
using raswe::testing::gaussian_kld;

TEST(Rmse, Examples) {
  const std::vector<Vec3> a = {Vec3(0, 0, 0), Vec3(0.2, 0, 0)};
  const std::vector<Vec3> zero = {Vec3::Zero(), Vec3::Zero()};
  EXPECT_TRUE(rmse_per_axis(a, a).isZero(0.0));
  EXPECT_NEAR(rmse_per_axis(a, zero)(0), std::sqrt(0.02), 1e-15);
  EXPECT_NEAR(rmse_per_axis(a, zero)(1), 0.0, 0.0);

  const std::vector<Vec3> off = {Vec3(0.1, 0, 0), Vec3(0.1, 0, 0)};
  EXPECT_TRUE(rmse_per_axis(off, zero).isApprox(Vec3(0.1, 0, 0)));

  const std::vector<Vec3> diag = {Vec3(0.3, 0, 0), Vec3(0, 0.3, 0)};
  EXPECT_NEAR(rmse_euclidean(diag, zero), 0.3, 1e-15);
  EXPECT_DOUBLE_EQ(rmse_euclidean(a, zero), rmse_euclidean(zero, a));

  EXPECT_THROW(rmse_euclidean(a, std::vector<Vec3>{Vec3::Zero()}), InvalidArgument);
  EXPECT_THROW(rmse_per_axis(std::vector<Vec3>{}, std::vector<Vec3>{}), InvalidArgument);
}

TEST(ErrorStd, RemovesBias) {
  const std::vector<Vec3> est = {Vec3(1, 0, 0), Vec3(1, 0, 0), Vec3(1, 0, 0)};
  const std::vector<Vec3> ref(3, Vec3::Zero());
  EXPECT_TRUE(error_std_per_axis(est, ref).isZero(1e-15));
}

TEST(Softmax, Examples) {
  const auto u = softmax_weights(Eigen::MatrixXd::Constant(3, 3, 2.5), false);
  ASSERT_EQ(u.probs.size(), 9u);
  for (double p : u.probs) EXPECT_NEAR(p, 1.0 / 9.0, 1e-15);

  Eigen::Matrix2d m;
  m << 1, 5, 5, 0;
  const auto d = softmax_weights(m, true);
  ASSERT_EQ(d.probs.size(), 2u);
  const double e = std::exp(1.0);
  EXPECT_NEAR(d.probs[0], e / (e + 1), 1e-15);
  EXPECT_NEAR(d.probs[1], 1 / (e + 1), 1e-15);

  // no scale invariance
  const auto s1 = softmax_weights(m, false);
  const auto s2 = softmax_weights(2.0 * m, false);
  EXPECT_GT(std::abs(s1.probs[0] - s2.probs[0]), 1e-3);

  Eigen::Matrix2d big;
  big << 1000, 999, 0, 0;
  const auto b = softmax_weights(big, false);
  EXPECT_TRUE(std::all_of(b.probs.begin(), b.probs.end(), [](double p) { return std::isfinite(p); }));

  Eigen::Matrix2d bad = m;
  bad(0, 0) = std::nan("");
  EXPECT_THROW(softmax_weights(bad, false), InvalidArgument);
}

TEST(Softmax, SumsToOneAndPermutes) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const Eigen::MatrixXd m = raswe::testing::random_matrix(4, 4, rng);
    const auto w = softmax_weights(m, false);
    EXPECT_NEAR(std::accumulate(w.probs.begin(), w.probs.end(), 0.0), 1.0, 1e-12);
    for (double p : w.probs) EXPECT_GT(p, 0.0);

    Eigen::PermutationMatrix<4> perm;
    perm.setIdentity();
    std::shuffle(perm.indices().data(), perm.indices().data() + 4, rng);
    const Eigen::MatrixXd pm = perm * m * perm.transpose();
    auto a = softmax_weights(m, true).probs;
    auto b = softmax_weights(pm, true).probs;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(a[k], b[k], 1e-15);
  }
}

TEST(Kld, ZeroIffEqual) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    const auto p = softmax_weights(raswe::testing::random_matrix(3, 3, rng), false);
    const auto q = softmax_weights(raswe::testing::random_matrix(3, 3, rng), false);
    EXPECT_NEAR(kl_divergence(p, p), 0.0, 1e-15);
    EXPECT_GT(kl_divergence(p, q), 0.0);
  }
  WeightDistribution a{{0.5, 0.5}}, b{{1.0}};
  EXPECT_THROW(kl_divergence(a, b), InvalidArgument);
}

TEST(Kld, GaussianClosedFormOracle) {
  // Reference values for the scalar Gaussian pairs quoted for this metric.
  EXPECT_NEAR(gaussian_kld(0, 1, 0, 2), 0.3181, 0.00005);
  EXPECT_NEAR(gaussian_kld(0, 0.99, 0, 1.01), 3.947e-4, 0.0005e-4);
}

TEST(Kld, DiscretizedGaussianAgreesWithClosedForm) {
  // Densities sampled on a fine grid.
  const int n = 20001;
  const double lo = -20, hi = 20, h = (hi - lo) / (n - 1);
  WeightDistribution p, q;
  double sp = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    const double x = lo + i * h;
    p.probs.push_back(std::exp(-x * x / 2));
    q.probs.push_back(std::exp(-x * x / 8));
    sp += p.probs.back();
    sq += q.probs.back();
  }
  for (auto& v : p.probs) v /= sp;
  for (auto& v : q.probs) v /= sq;
  EXPECT_NEAR(kl_divergence(p, q), gaussian_kld(0, 1, 0, 2), 1e-6);
}

TEST(DragRmse, Examples) {
  const std::vector<Mat3> truth(5, Mat3(Vec3(1.0, 2.0, 0.5).asDiagonal()));
  EXPECT_DOUBLE_EQ(drag_relative_rmse(truth, truth), 0.0);
  std::vector<Mat3> est;
  for (const auto& m : truth) est.push_back(1.01 * m);
  EXPECT_NEAR(drag_relative_rmse(est, truth), 1.0, 1e-9);
  std::vector<Mat3> zero(5, Mat3::Zero());
  EXPECT_THROW(drag_relative_rmse(est, zero), InvalidArgument);
}

TEST(SavitzkyGolay, ReproducesCubics) {
  std::vector<Vec3> s;
  for (int i = 0; i < 40; ++i) {
    const double t = 0.1 * i;
    s.emplace_back(1 + 2 * t - t * t + 0.5 * t * t * t, 3.0, -t * t);
  }
  const auto out = savitzky_golay(s);
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_LT((out[i] - s[i]).norm(), 1e-10) << i;
  }
}

TEST(SavitzkyGolay, ReducesNoiseVariance) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<Vec3> s(2000);
  for (auto& v : s) v = Vec3(n(rng), n(rng), n(rng));
  const auto out = savitzky_golay(s);
  double vin = 0, vout = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    vin += s[i].squaredNorm();
    vout += out[i].squaredNorm();
  }
  EXPECT_LT(vout, 0.8 * vin);
}

TEST(SavitzkyGolay, Rejects) {
  std::vector<Vec3> s(5, Vec3::Zero());
  EXPECT_THROW(savitzky_golay(s), InvalidArgument);
  std::vector<Vec3> t(20, Vec3::Ones());
  EXPECT_THROW(savitzky_golay(t, 3, 8), InvalidArgument);
  EXPECT_THROW(savitzky_golay(t, 9, 9), InvalidArgument);
  for (const auto& v : savitzky_golay(t)) EXPECT_TRUE(v.isApprox(Vec3::Ones(), 1e-12));
}
