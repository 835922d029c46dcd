#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "raswe/adaptation.hpp"
#include "raswe/config.hpp"
#include "raswe/estimator.hpp"
#include "raswe/types.hpp"

namespace raswe::sim {

/// Timesteps [first, first + length).
struct Outage {
  long first = 0;
  long length = 0;
  bool contains(long k) const { return k >= first && k < first + length; }
};

/// Commanded velocity on a slow circle minus the current velocity.
Vec3 accel_law(long k, const Vec3& v_prev, double dt);

/// Slowly time-varying true noise covariances.
NoiseCovariances covariance_laws(long k);

/// diag(1 + 0.03 sin(k pi/200), 1 + 0.03 sin(k pi/250), 1 + 0.03 sin(k pi/225)).
Mat3 drag_law(long k);

struct SimScenario {
  long steps = 2000;  // evaluated steps after warm-up
  long warmup = 20;
  double dt = 0.04;
  Vec3 anchor = Vec3::Zero();
  Vec6 x0 = (Vec6() << 1.0, 0.0, 0.2, 0.0, 0.0, 0.0).finished();
  std::uint64_t seed = 1;

  // Multiplies both noise laws; 0 gives a noiseless world.
  double noise_scale = 1.0;
  // Scales only the sampled process noise; the Q law itself stays the
  // reference for evaluation.
  double process_noise_scale = 1.0;
  // Estimator starts from the true state, drag and noise covariances.
  bool init_from_truth = true;

  std::function<Vec3(long, const Vec3&, double)> accel = accel_law;
  std::function<NoiseCovariances(long)> noise = covariance_laws;
  std::function<Mat3(long)> drag = drag_law;

  std::vector<Outage> uwb_outages;
  std::vector<Outage> of_outages;

  long total_steps() const { return warmup + steps; }

  /// Checks scalar ranges and that every noise law sample is symmetric PD
  /// (PSD when noise_scale is 0). Throws ConfigError.
  void validate() const;
};

/// Per-step ground truth, index k = 0..total_steps. Entries at k = 0 hold
/// the initial state; inputs and measurements start at k = 1.
struct SimTruth {
  std::vector<Vec6> x;
  std::vector<Vec3> accel;
  std::vector<Mat3> mu;
  std::vector<Mat6> Q;
  std::vector<Mat4> R;
  std::vector<Vec4> y_clean;
  std::vector<Vec4> y;
  std::vector<MeasurementFrame> frames;  // frames[k - 1] is timestep k
};

/// Propagates the drag dynamics with sampled process noise and emits noisy
/// nonlinear range plus velocity measurements. Deterministic in the seed.
SimTruth simulate_truth(const SimScenario& scenario);

/// Evaluated series of one estimator run (warm-up steps excluded).
struct RunSeries {
  std::vector<double> t;
  std::vector<StepOutput> steps;
  std::vector<Vec3> est_pos;
  std::vector<Vec3> true_pos;
  std::vector<Mat6> true_Q;
  std::vector<Mat4> true_R;
  std::vector<Mat3> true_mu;
};

struct RunMetrics {
  double position_rmse = 0.0;
  Vec3 rmse_axis = Vec3::Zero();
  Vec3 std_axis = Vec3::Zero();
  double kld_q_diag = 0.0;
  double kld_q_full = 0.0;
  double kld_r_diag = 0.0;
  double kld_r_full = 0.0;
  double drag_rel_rmse = 0.0;
};

struct RunResult {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  RunSeries series;
  RunMetrics metrics;
};

/// Metrics of an evaluated run: KLDs compare softmax weight distributions of
/// the true (p) and estimated (q) matrices per step, then average.
RunMetrics evaluate(const RunSeries& series);

/// Runs the estimator on one freshly simulated world.
RunResult run_single(const SimScenario& scenario, const EstimatorConfig& cfg,
                     bool keep_series = true);

struct BatchResult {
  std::vector<RunResult> runs;
  RunMetrics mean;  // over successful runs
  int failed = 0;
};

/// Called from worker threads with the run index and its full result, before
/// the series is dropped.
using RunCallback = std::function<void(int, const RunResult&)>;

/// Runs `n_runs` seeds (scenario.seed + i) on up to `threads` workers
/// (0 = hardware concurrency). Failures are collected, not thrown.
BatchResult run_monte_carlo(const SimScenario& scenario, int n_runs, const EstimatorConfig& cfg,
                            bool keep_series = false, unsigned threads = 0,
                            const RunCallback& on_run = {});

}  // namespace raswe::sim
