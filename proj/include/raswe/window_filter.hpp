#pragma once

#include <vector>

#include "raswe/types.hpp"

namespace raswe {

/// Everything one sliding window needs. Local index j runs 0..k_w; per-step
/// vectors hold entry j-1 for step j (A holds A_{j-1}, the transition into
/// step j).
struct WindowBuffer {
  // Previous window's outputs at local steps 0..k_w-1. priors[0].mean seeds
  // the forward pass; priors[1..k_w-1] feed the coherence augmentation.
  std::vector<StateBelief> priors;
  Mat6 init_cov = 0.1 * Mat6::Identity();

  std::vector<Mat6> A;
  std::vector<Vec6> u;
  std::vector<Vec4> y;
  std::vector<Mat46> C;
  std::vector<Mat6> Q;
  std::vector<Mat4> R;

  bool coherence = true;

  int length() const { return static_cast<int>(A.size()); }
  StateBelief init() const { return {priors.front().mean, init_cov}; }

  /// Throws InvalidArgument when the per-step vectors disagree in length.
  void validate() const;
};

struct AugmentedObservation {
  Eigen::VectorXd y;
  Eigen::MatrixXd C;
  Eigen::MatrixXd R;
};

/// Appends the previous window's belief as a direct state observation
/// [y; x], [C; I6], blockdiag(R, P). The newest step is left untouched.
AugmentedObservation augment_step(const Vec4& y, const Mat46& C, const Mat4& R,
                                  const StateBelief& prior, bool is_last);

struct ForwardPass {
  // Index 0 of the prior arrays is unused; posteriors[0] is the init.
  std::vector<Vec6> x_prior;
  std::vector<Mat6> P_prior;
  std::vector<Vec6> x_post;
  std::vector<Mat6> P_post;
  std::vector<Eigen::MatrixXd> K;      // K[j], 6 x dim(y~_j), index 0 unused
  std::vector<Eigen::MatrixXd> C_aug;  // C~[j], index 0 unused
};

struct SmoothedWindow {
  std::vector<Vec6> x;  // 0..k_w
  std::vector<Mat6> P;
  std::vector<Mat6> G;  // G[j], index 0 unused
};

struct ErrorPropagation {
  Mat6 E = Mat6::Identity();
  double avg_trace = 1.0;
  // |det E|^(1/6); the absolute value guards against det E rounding
  // negative when some factor is near singular.
  double reduced_det = 1.0;
};

/// Kalman forward pass over the window with coherence-augmented
/// observations on every step but the last.
ForwardPass forward_filter(const WindowBuffer& buffer, const StateBelief& init);

/// Rauch-Tung-Striebel backward pass seeded by the final forward posterior.
SmoothedWindow backward_smooth(const ForwardPass& fp, const WindowBuffer& buffer);

/// E = prod_j (I - K_j C~_j) A_{j-1}, newest factor on the left.
ErrorPropagation error_propagation(const ForwardPass& fp, const WindowBuffer& buffer);

ErrorPropagation summarize_error_propagation(const Mat6& E);

}  // namespace raswe
