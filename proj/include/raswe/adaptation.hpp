#pragma once

#include <span>
#include <vector>

#include "raswe/config.hpp"
#include "raswe/types.hpp"
#include "raswe/window_filter.hpp"

namespace raswe {

/// Inverse-Wishart parameters: IW(phi, Phi) over Q and IW(psi, Psi) over R.
struct NoiseBelief {
  double phi = 10.0;
  Mat6 Phi = 17.0 * Mat6::Identity();
  double psi = 8.0;
  Mat4 Psi = 13.0 * Mat4::Identity();

  static NoiseBelief from_config(const EstimatorConfig& cfg);

  /// Belief whose expectations equal the given covariances, keeping the DoFs.
  static NoiseBelief with_means(double phi, const Mat6& Q, double psi, const Mat4& R);

  bool valid() const;
};

struct GateWeights {
  double w1 = 1.0;
  double w2 = 0.0;
  double w3 = 1.0;
  bool w3_clamped = false;
};

struct AuxiliaryMatrices {
  std::vector<Mat6> Phi;  // one per step j = 1..k_w
  std::vector<Mat4> Psi;
};

struct NoiseCovariances {
  Mat6 Q;
  Mat4 R;
};

/// Weights from the error propagation summary. lambda-bar is clamped to
/// [0, lambda0] inside the w1/w2 formulas and w3 to (0, 1].
GateWeights gate_weights(const ErrorPropagation& ep, const EstimatorConfig& cfg);

/// Expected residual scatter per step from the smoothed window. Residuals
/// use the un-augmented y and C. When `status` is non-empty, residual
/// components of channels flagged dead at that step are zeroed since their
/// measurement values carry no information.
AuxiliaryMatrices iw_auxiliary(const SmoothedWindow& sw, const WindowBuffer& buffer,
                               std::span<const SensorStatus> status = {});

/// Conjugate update of both IW beliefs. The observation scatter sum is the
/// w3-discounted running accumulation acc <- w3 (acc + Psi~_j).
NoiseBelief iw_update(const NoiseBelief& belief, const AuxiliaryMatrices& aux,
                      const GateWeights& w, int window_length);

/// Q = Phi / (phi - 7), R = Psi / (psi - 5).
NoiseCovariances expected_covariances(const NoiseBelief& belief);

/// S R S with S = diag(s1, s2 I3), s = 1 or epsilon.
Mat4 apply_sensor_status(const Mat4& R, const SensorStatus& s);

/// d/dmu of |v - (I - dt mu) v_prev - dt a|^2.
Mat3 drag_gradient(const Vec3& v_prev, const Vec3& v, const Vec3& accel, const DragMatrix& mu,
                   double dt);

/// Drag step length from the 6th/4th roots of det Q and det R; zero when the
/// sensors are no more reliable than the dynamics.
double step_length(const Mat6& Q, const Mat4& R, const EstimatorConfig& cfg);

}  // namespace raswe
