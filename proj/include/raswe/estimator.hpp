#pragma once

#include <deque>
#include <optional>
#include <vector>

#include "raswe/adaptation.hpp"
#include "raswe/config.hpp"
#include "raswe/types.hpp"
#include "raswe/window_filter.hpp"

namespace raswe {

struct StepDiagnostics {
  double avg_trace = 0.0;
  double reduced_det = 0.0;
  double step_length = 0.0;
  GateWeights weights;
  bool uwb_degenerate = false;
};

struct StepOutput {
  double t = 0.0;
  bool warmup = false;
  StateBelief estimate;  // newest posterior of the window
  std::vector<StateBelief> window;  // smoothed outputs, oldest first; empty in warm-up
  Mat6 Q = Mat6::Zero();   // process covariance after this step
  Mat4 R = Mat4::Zero();   // base observation covariance (before sensor amendment)
  Mat3 mu = Mat3::Zero();
  StepDiagnostics diag;
};

/// Sliding window estimator with adaptive noise covariances and drag.
///
/// Timestep k consumes frame k and re-solves the window k-k_w..k, seeding
/// every in-window step with the previous window's smoothed output. The
/// first `warmup` frames run a plain Kalman filter to populate that history.
class Estimator {
 public:
  Estimator(EstimatorConfig cfg, const StateBelief& initial, double t0);
  Estimator(EstimatorConfig cfg, const StateBelief& initial, double t0, const NoiseBelief& noise);

  StepOutput push(const MeasurementFrame& frame);

  const NoiseBelief& noise() const { return noise_; }
  const DragMatrix& drag() const { return mu_; }
  const EstimatorConfig& config() const { return cfg_; }
  long steps() const { return steps_; }

 private:
  struct Slot {
    MeasurementFrame frame;
    double dt;
  };

  SensorStatus status_of(const MeasurementFrame& f, bool uwb_usable) const;
  StepOutput warmup_step(const Slot& slot);
  StepOutput window_step();

  EstimatorConfig cfg_;
  NoiseBelief noise_;
  DragMatrix mu_;
  double last_t_;
  long steps_ = 0;

  std::deque<Slot> slots_;             // newest k_w frames
  std::deque<StateBelief> outputs_;    // previous outputs, k_w + 1 entries at most
  std::deque<NoiseCovariances> noise_history_;  // entry covariances per global step
};

}  // namespace raswe
