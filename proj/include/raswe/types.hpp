#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>

namespace raswe {

// State is [position; velocity] in the world frame, measurement is
// [uwb range; optical-flow velocity].
inline constexpr int kStateDim = 6;
inline constexpr int kMeasDim = 4;
inline constexpr int kAugDim = kMeasDim + kStateDim;

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Matrix<double, kMeasDim, 1>;
using Vec6 = Eigen::Matrix<double, kStateDim, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix<double, kMeasDim, kMeasDim>;
using Mat6 = Eigen::Matrix<double, kStateDim, kStateDim>;
using Mat46 = Eigen::Matrix<double, kMeasDim, kStateDim>;
using Row6 = Eigen::Matrix<double, 1, kStateDim>;

/// Gaussian belief over the 6-state at one timestep.
struct StateBelief {
  Vec6 mean = Vec6::Zero();
  Mat6 cov = Mat6::Identity();

  Vec3 position() const { return mean.head<3>(); }
  Vec3 velocity() const { return mean.tail<3>(); }
};

/// Aerial drag coefficient matrix, units 1/s.
class DragMatrix {
 public:
  DragMatrix() : mu_(Mat3::Zero()) {}
  explicit DragMatrix(const Mat3& mu);

  static DragMatrix diagonal(double x, double y, double z);

  const Mat3& matrix() const { return mu_; }

 private:
  Mat3 mu_;
};

/// One timestep's sensor bundle. Absent readings carry ok = false.
struct MeasurementFrame {
  double t = 0.0;
  Vec3 accel_input = Vec3::Zero();  // gravity-compensated, world frame
  std::optional<double> uwb_range;
  std::optional<Vec3> of_velocity;
  bool uwb_ok = false;
  bool of_ok = false;

  /// Measurement vector with absent channels zero-filled.
  Vec4 measurement() const;
};

/// Sensor work condition for the boolean noise amendment.
struct SensorStatus {
  bool uwb_ok = true;
  bool of_ok = true;
  double epsilon = 1e3;
};

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidArgument : Error {
  using Error::Error;
};

/// The linearization point coincides with the anchor.
struct DegeneratePosition : Error {
  using Error::Error;
};

/// A covariance that must be positive definite failed Cholesky.
struct InnovationNotPD : Error {
  using Error::Error;
};

/// Inverse-Wishart degrees of freedom too small for a finite mean.
struct DegenerateDoF : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

inline bool all_finite(const auto& m) { return m.allFinite(); }

template <typename M>
M symmetrized(const M& m) {
  return 0.5 * (m + m.transpose());
}

}  // namespace raswe
