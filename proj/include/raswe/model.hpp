#pragma once

#include "raswe/types.hpp"

namespace raswe::model {

/// Below this distance from the anchor the range row cannot be normalized.
inline constexpr double kMinAnchorDistance = 1e-6;

/// Constant-acceleration transition with linear drag on velocity:
/// [[I, dt I], [0, I - dt mu]].
Mat6 build_transition(double dt, const DragMatrix& mu);

/// Net input [dt^2/2 * a; dt * a].
Vec6 build_input(double dt, const Vec3& accel);

/// Position block of A x + u, the linearization point for the range row.
Vec3 approximate_position(const StateBelief& prev, const Mat6& A, const Vec6& u);

/// Unit line-of-sight row [p^T/|p|, 0, 0, 0]. Throws DegeneratePosition when
/// p is within kMinAnchorDistance of the anchor.
Row6 uwb_observation_row(const Vec3& p_tilde);

/// Range row stacked over the velocity selector [0 | I3].
Mat46 build_observation(const Vec3& p_tilde);

/// Same as build_observation but with a zero range row; used when the
/// linearization point is degenerate and the range channel is disabled.
Mat46 velocity_only_observation();

/// Numerical rank of [C; CA; ...; CA^5] by SVD with the usual
/// max(rows, cols) * sigma_max * eps threshold.
int observability_rank(const Mat6& A, const Eigen::MatrixXd& C);

/// Rank of the observability matrix with C augmented by I6, the model seen
/// by every in-window step except the newest.
int augmented_observability_rank(const Mat6& A, const Eigen::MatrixXd& C);

/// Shifts a range measured against an anchor at `anchor` into the
/// origin-anchored linear model: returns the row and the corrected range.
struct RangeLinearization {
  Row6 row;
  double range;
};
RangeLinearization linearize_range(const Vec3& p_tilde, const Vec3& anchor, double range);

}  // namespace raswe::model
