#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "raswe/window_filter.hpp"

using namespace raswe;
using raswe::testing::batch_map;
using raswe::testing::random_window;
using raswe::testing::rel_err;

TEST(Augment, Stacks) {
  StateBelief prior;
  prior.mean << 1, 2, 3, 4, 5, 6;
  prior.cov = 2.0 * Mat6::Identity();
  const Vec4 y(9, 8, 7, 6);
  const Mat46 C = Mat46::Ones();
  const Mat4 R = 3.0 * Mat4::Identity();

  const auto a = augment_step(y, C, R, prior, false);
  ASSERT_EQ(a.y.size(), 10);
  EXPECT_TRUE(a.y.head(4).isApprox(y));
  EXPECT_TRUE(a.y.tail(6).isApprox(prior.mean));
  EXPECT_TRUE(a.C.bottomRows(6).isIdentity(0.0));
  EXPECT_TRUE(a.R.topRightCorner(4, 6).isZero(0.0));
  EXPECT_TRUE(a.R.bottomRightCorner(6, 6).isApprox(prior.cov));

  const auto last = augment_step(y, C, R, prior, true);
  EXPECT_EQ(last.y.size(), 4);
  EXPECT_TRUE(last.R.isApprox(R));
}

TEST(WindowBuffer, Validate) {
  std::mt19937_64 rng(1);
  WindowBuffer b = random_window(3, rng);
  EXPECT_NO_THROW(b.validate());
  b.Q.pop_back();
  EXPECT_THROW(b.validate(), InvalidArgument);
  WindowBuffer empty;
  EXPECT_THROW(empty.validate(), InvalidArgument);
}

TEST(ForwardBackward, MatchesBatchMap) {
  std::mt19937_64 rng(42);
  const int lengths[] = {2, 3, 5};
  for (int trial = 0; trial < 150; ++trial) {
    const int kw = lengths[trial % 3];
    const WindowBuffer b = random_window(kw, rng, trial % 7 != 0);
    const ForwardPass fp = forward_filter(b, b.init());
    const SmoothedWindow sw = backward_smooth(fp, b);
    const auto oracle = batch_map(b);
    for (int j = 0; j <= kw; ++j) {
      ASSERT_LT(rel_err(sw.x[j], oracle.x[j]), 1e-8) << "trial " << trial << " step " << j;
      ASSERT_LT(rel_err(sw.P[j], oracle.P[j]), 1e-8) << "trial " << trial << " step " << j;
    }
  }
}

TEST(ForwardFilter, PosteriorSymmetricPsd) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const WindowBuffer b = random_window(5, rng);
    const ForwardPass fp = forward_filter(b, b.init());
    for (int j = 1; j <= 5; ++j) {
      EXPECT_TRUE(fp.P_post[j].isApprox(fp.P_post[j].transpose(), 0.0));
      Eigen::SelfAdjointEigenSolver<Mat6> es(fp.P_post[j]);
      EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
    }
  }
}

TEST(ForwardFilter, SingularInnovationThrows) {
  std::mt19937_64 rng(2);
  WindowBuffer b = random_window(2, rng, false);
  b.init_cov.setZero();
  b.Q[0].setZero();
  b.R[0].setZero();
  EXPECT_THROW(forward_filter(b, b.init()), InnovationNotPD);
}

TEST(ForwardFilter, ZeroGainWhenObservationsUseless) {
  // Huge R and no augmentation: the window is pure propagation.
  std::mt19937_64 rng(8);
  WindowBuffer b = random_window(4, rng, false);
  for (auto& R : b.R) R = 1e30 * Mat4::Identity();
  const ForwardPass fp = forward_filter(b, b.init());
  Vec6 x = b.init().mean;
  for (int j = 1; j <= 4; ++j) {
    x = b.A[j - 1] * x + b.u[j - 1];
    EXPECT_LT(rel_err(fp.x_post[j], x), 1e-9);
  }
}

TEST(ErrorPropagation, FinalStateLinearInInitialPerturbation) {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> n(0.0, 1.0);
  const int lengths[] = {2, 3, 5, 10};
  for (int trial = 0; trial < 120; ++trial) {
    const WindowBuffer b = random_window(lengths[trial % 4], rng, trial % 5 != 0);
    const int kw = b.length();
    const StateBelief init = b.init();
    const ForwardPass base = forward_filter(b, init);
    const ErrorPropagation ep = error_propagation(base, b);

    Vec6 dx;
    for (int i = 0; i < 6; ++i) dx(i) = n(rng);
    StateBelief shifted = init;
    shifted.mean += dx;
    const ForwardPass moved = forward_filter(b, shifted);
    const Vec6 delta = moved.x_post[kw] - base.x_post[kw];
    ASSERT_LT((delta - ep.E * dx).norm(), 1e-9 * std::max(1.0, delta.norm())) << "trial " << trial;
  }
}

TEST(ErrorPropagation, Summary) {
  Mat6 E = Mat6::Zero();
  E.diagonal() << 0.5, 0.5, 0.5, 0.5, 0.5, 0.5;
  const auto s = summarize_error_propagation(E);
  EXPECT_DOUBLE_EQ(s.avg_trace, 0.5);
  EXPECT_NEAR(s.reduced_det, 0.5, 1e-15);

  const auto id = summarize_error_propagation(Mat6::Identity());
  EXPECT_DOUBLE_EQ(id.avg_trace, 1.0);
  EXPECT_DOUBLE_EQ(id.reduced_det, 1.0);
}

TEST(ErrorPropagation, StrongObservationsContract) {
  // Augmentation with tight priors makes every factor small.
  std::mt19937_64 rng(9);
  WindowBuffer b = random_window(5, rng);
  for (auto& p : b.priors) p.cov = 1e-8 * Mat6::Identity();
  const ForwardPass fp = forward_filter(b, b.init());
  const ErrorPropagation ep = error_propagation(fp, b);
  EXPECT_LT(std::abs(ep.avg_trace), 1e-3);
  EXPECT_LT(ep.reduced_det, 1e-3);
}
