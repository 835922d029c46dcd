#pragma once

#include "raswe/types.hpp"

namespace raswe {

/// Switches that cancel individual restrictions, plus the frozen-covariance
/// mode used by the DWE baseline.
struct Ablation {
  bool errprop_off = false;      // w1 = w2 = w3 = 1
  bool coherence_off = false;    // no augmentation with previous outputs
  bool consistency_off = false;  // per-step Q/R history, no P0 re-init
  bool drag_off = false;         // mu frozen at mu0
  bool adapt_off = false;        // noise belief frozen at its prior
};

struct EstimatorConfig {
  int window_length = 10;
  double lambda0 = 1e-3;
  double f1 = 1e-2;
  double f2 = 0.1;
  double epsilon = 1e3;
  double b_u = 1e-2;
  double b_l = 1e-3;

  Mat3 mu0 = Vec3(0.2, 0.2, 0.8).asDiagonal();
  Mat6 P0 = 0.1 * Mat6::Identity();
  Mat6 Phi0 = 17.0 * Mat6::Identity();
  double phi0 = 10.0;
  Mat4 Psi0 = 13.0 * Mat4::Identity();
  double psi0 = 8.0;

  // Plain Kalman filter steps run before the first full window.
  int warmup = 20;
  Vec3 anchor = Vec3::Zero();

  Ablation ablation;

  /// Throws ConfigError naming the first violated constraint.
  void validate() const;
};

/// DWE baseline: augmented filter and smoother with frozen covariances and
/// drag.
EstimatorConfig dwe_config(EstimatorConfig cfg);

}  // namespace raswe
