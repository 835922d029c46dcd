#include "raswe/window_filter.hpp"

#include <cmath>
#include <string>

namespace raswe {

void WindowBuffer::validate() const {
  const auto n = A.size();
  if (n == 0) throw InvalidArgument("window has no steps");
  if (u.size() != n || y.size() != n || C.size() != n || Q.size() != n || R.size() != n) {
    throw InvalidArgument("window buffer vectors differ in length");
  }
  if (priors.size() != n) {
    throw InvalidArgument("window needs one prior per step 0..k_w-1");
  }
}

AugmentedObservation augment_step(const Vec4& y, const Mat46& C, const Mat4& R,
                                  const StateBelief& prior, bool is_last) {
  if (is_last) {
    return {y, C, R};
  }
  AugmentedObservation out;
  out.y.resize(kAugDim);
  out.y << y, prior.mean;
  out.C.resize(kAugDim, kStateDim);
  out.C << C, Mat6::Identity();
  out.R = Eigen::MatrixXd::Zero(kAugDim, kAugDim);
  out.R.topLeftCorner<kMeasDim, kMeasDim>() = R;
  out.R.bottomRightCorner<kStateDim, kStateDim>() = prior.cov;
  return out;
}

ForwardPass forward_filter(const WindowBuffer& buffer, const StateBelief& init) {
  buffer.validate();
  const int kw = buffer.length();

  ForwardPass fp;
  fp.x_prior.resize(kw + 1, Vec6::Zero());
  fp.P_prior.resize(kw + 1, Mat6::Zero());
  fp.x_post.resize(kw + 1);
  fp.P_post.resize(kw + 1);
  fp.K.resize(kw + 1);
  fp.C_aug.resize(kw + 1);

  fp.x_post[0] = init.mean;
  fp.P_post[0] = init.cov;

  for (int j = 1; j <= kw; ++j) {
    const Mat6& A = buffer.A[j - 1];
    const Mat6 P_prior = symmetrized(Mat6(A * fp.P_post[j - 1] * A.transpose() + buffer.Q[j - 1]));
    const Vec6 x_prior = A * fp.x_post[j - 1] + buffer.u[j - 1];

    const bool is_last = (j == kw) || !buffer.coherence;
    const AugmentedObservation obs =
        augment_step(buffer.y[j - 1], buffer.C[j - 1], buffer.R[j - 1], buffer.priors[j], is_last);

    const Eigen::MatrixXd S = obs.C * P_prior * obs.C.transpose() + obs.R;
    Eigen::LLT<Eigen::MatrixXd> llt(symmetrized(S));
    if (llt.info() != Eigen::Success) {
      throw InnovationNotPD("innovation covariance not positive definite at step " +
                            std::to_string(j));
    }
    // K = P C^T S^-1, computed as (S^-1 C P)^T.
    const Eigen::MatrixXd K = llt.solve(obs.C * P_prior).transpose();

    fp.x_prior[j] = x_prior;
    fp.P_prior[j] = P_prior;
    fp.x_post[j] = x_prior + K * (obs.y - obs.C * x_prior);
    fp.P_post[j] = symmetrized(Mat6((Mat6::Identity() - K * obs.C) * P_prior));
    fp.K[j] = K;
    fp.C_aug[j] = obs.C;
  }
  return fp;
}

SmoothedWindow backward_smooth(const ForwardPass& fp, const WindowBuffer& buffer) {
  const int kw = buffer.length();
  if (static_cast<int>(fp.x_post.size()) != kw + 1) {
    throw InvalidArgument("forward pass does not match window length");
  }

  SmoothedWindow sw;
  sw.x.resize(kw + 1);
  sw.P.resize(kw + 1);
  sw.G.resize(kw + 1, Mat6::Zero());
  sw.x[kw] = fp.x_post[kw];
  sw.P[kw] = fp.P_post[kw];

  for (int j = kw; j >= 1; --j) {
    const Mat6& A = buffer.A[j - 1];
    Eigen::LLT<Mat6> llt(fp.P_prior[j]);
    if (llt.info() != Eigen::Success) {
      throw InnovationNotPD("predicted covariance not positive definite at step " +
                            std::to_string(j));
    }
    // G = P_f,j-1 A^T Pcheck_j^-1 = (Pcheck_j^-1 A P_f,j-1)^T by symmetry.
    const Mat6 G = llt.solve(A * fp.P_post[j - 1]).transpose();
    sw.G[j] = G;
    sw.x[j - 1] = fp.x_post[j - 1] + G * (sw.x[j] - fp.x_prior[j]);
    sw.P[j - 1] =
        symmetrized(Mat6(fp.P_post[j - 1] + G * (sw.P[j] - fp.P_prior[j]) * G.transpose()));
  }
  return sw;
}

ErrorPropagation summarize_error_propagation(const Mat6& E) {
  ErrorPropagation ep;
  ep.E = E;
  ep.avg_trace = E.trace() / kStateDim;
  ep.reduced_det = std::pow(std::abs(E.determinant()), 1.0 / kStateDim);
  return ep;
}

ErrorPropagation error_propagation(const ForwardPass& fp, const WindowBuffer& buffer) {
  const int kw = buffer.length();
  Mat6 E = Mat6::Identity();
  for (int j = 1; j <= kw; ++j) {
    const Mat6 factor = (Mat6::Identity() - fp.K[j] * fp.C_aug[j]) * buffer.A[j - 1];
    E = factor * E;
  }
  return summarize_error_propagation(E);
}

}  // namespace raswe
