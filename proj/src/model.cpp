#include "raswe/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace raswe {

DragMatrix::DragMatrix(const Mat3& mu) : mu_(mu) {
  if (!mu.allFinite()) {
    throw InvalidArgument("drag matrix has non-finite entries");
  }
}

DragMatrix DragMatrix::diagonal(double x, double y, double z) {
  return DragMatrix(Vec3(x, y, z).asDiagonal().toDenseMatrix());
}

Vec4 MeasurementFrame::measurement() const {
  Vec4 y = Vec4::Zero();
  if (uwb_range) y(0) = *uwb_range;
  if (of_velocity) y.tail<3>() = *of_velocity;
  return y;
}

}  // namespace raswe

namespace raswe::model {

Mat6 build_transition(double dt, const DragMatrix& mu) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw InvalidArgument("transition requires dt > 0");
  }
  const Mat3 vel_block = Mat3::Identity() - dt * mu.matrix();
  if (vel_block.isZero(0.0)) {
    // dt * mu == I collapses the velocity channel entirely.
    throw InvalidArgument("dt * mu equals identity");
  }
  Mat6 A = Mat6::Identity();
  A.topRightCorner<3, 3>() = dt * Mat3::Identity();
  A.bottomRightCorner<3, 3>() = vel_block;
  return A;
}

Vec6 build_input(double dt, const Vec3& accel) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw InvalidArgument("input requires dt > 0");
  }
  if (!accel.allFinite()) {
    throw InvalidArgument("non-finite acceleration input");
  }
  Vec6 u;
  u.head<3>() = 0.5 * dt * dt * accel;
  u.tail<3>() = dt * accel;
  return u;
}

Vec3 approximate_position(const StateBelief& prev, const Mat6& A, const Vec6& u) {
  if (!prev.mean.allFinite() || !A.allFinite() || !u.allFinite()) {
    throw InvalidArgument("non-finite input to position prediction");
  }
  return (A * prev.mean + u).head<3>();
}

Row6 uwb_observation_row(const Vec3& p_tilde) {
  const double norm = p_tilde.norm();
  if (!std::isfinite(norm)) {
    throw InvalidArgument("non-finite linearization point");
  }
  if (norm <= kMinAnchorDistance) {
    throw DegeneratePosition("linearization point coincides with the anchor");
  }
  Row6 row = Row6::Zero();
  row.head<3>() = p_tilde.transpose() / norm;
  return row;
}

Mat46 build_observation(const Vec3& p_tilde) {
  Mat46 C = velocity_only_observation();
  C.row(0) = uwb_observation_row(p_tilde);
  return C;
}

Mat46 velocity_only_observation() {
  Mat46 C = Mat46::Zero();
  C.bottomRightCorner<3, 3>() = Mat3::Identity();
  return C;
}

namespace {

Eigen::MatrixXd stack_observability(const Mat6& A, const Eigen::MatrixXd& C) {
  const Eigen::Index rows = C.rows();
  Eigen::MatrixXd O(rows * kStateDim, kStateDim);
  Eigen::MatrixXd block = C;
  for (int i = 0; i < kStateDim; ++i) {
    O.middleRows(i * rows, rows) = block;
    block = block * A;
  }
  return O;
}

int numerical_rank(const Eigen::MatrixXd& M) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double tol = static_cast<double>(std::max(M.rows(), M.cols())) * s(0) *
                     std::numeric_limits<double>::epsilon();
  return static_cast<int>((s.array() > tol).count());
}

}  // namespace

int observability_rank(const Mat6& A, const Eigen::MatrixXd& C) {
  if (C.cols() != kStateDim) {
    throw InvalidArgument("observation matrix must have 6 columns");
  }
  return numerical_rank(stack_observability(A, C));
}

int augmented_observability_rank(const Mat6& A, const Eigen::MatrixXd& C) {
  Eigen::MatrixXd aug(C.rows() + kStateDim, kStateDim);
  aug << C, Mat6::Identity();
  return observability_rank(A, aug);
}

RangeLinearization linearize_range(const Vec3& p_tilde, const Vec3& anchor, double range) {
  const Vec3 rel = p_tilde - anchor;
  RangeLinearization out{uwb_observation_row(rel), range};
  out.range += out.row.head<3>().dot(anchor);
  return out;
}

}  // namespace raswe::model
