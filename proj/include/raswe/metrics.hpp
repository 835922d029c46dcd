#pragma once

#include <span>
#include <vector>

#include "raswe/types.hpp"

namespace raswe::metrics {

using PositionSeries = std::vector<Vec3>;

/// Per-axis root mean square of est - ref.
Vec3 rmse_per_axis(std::span<const Vec3> est, std::span<const Vec3> ref);

/// sqrt(mean |est_i - ref_i|^2). Also serves as control RMSE with a target
/// series as reference.
double rmse_euclidean(std::span<const Vec3> est, std::span<const Vec3> ref);

/// Per-axis standard deviation of est - ref.
Vec3 error_std_per_axis(std::span<const Vec3> est, std::span<const Vec3> ref);

struct WeightDistribution {
  std::vector<double> probs;
};

/// Softmax over matrix entries (all, or the main diagonal only). Entries are
/// taken row-major.
WeightDistribution softmax_weights(const Eigen::MatrixXd& M, bool diagonal_only);

/// sum p ln(p / q).
double kl_divergence(const WeightDistribution& p, const WeightDistribution& q);

/// Root mean square of the per-entry relative error of the diagonals, in
/// percent.
double drag_relative_rmse(std::span<const Mat3> est, std::span<const Mat3> truth);

/// Per-axis least-squares polynomial smoothing. Points within half a frame of
/// either end are evaluated off-center on the boundary window's fit.
PositionSeries savitzky_golay(std::span<const Vec3> series, int order = 3, int frame = 9);

double mean(std::span<const double> values);

}  // namespace raswe::metrics
