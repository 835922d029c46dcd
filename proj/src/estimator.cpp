#include "raswe/estimator.hpp"

#include <cmath>
#include <utility>

#include "raswe/model.hpp"

namespace raswe {

namespace {

struct Linearized {
  Mat46 C;
  Vec4 y;
  bool degenerate = false;
};

Linearized linearize(const MeasurementFrame& f, const Vec3& p_tilde, const Vec3& anchor) {
  Linearized out{model::velocity_only_observation(), f.measurement()};
  try {
    const auto lin = model::linearize_range(p_tilde, anchor, out.y(0));
    out.C.row(0) = lin.row;
    out.y(0) = lin.range;
  } catch (const DegeneratePosition&) {
    out.degenerate = true;
    out.y(0) = 0.0;
  }
  return out;
}

}  // namespace

Estimator::Estimator(EstimatorConfig cfg, const StateBelief& initial, double t0)
    : Estimator(cfg, initial, t0, NoiseBelief::from_config(cfg)) {}

Estimator::Estimator(EstimatorConfig cfg, const StateBelief& initial, double t0,
                     const NoiseBelief& noise)
    : cfg_(std::move(cfg)), noise_(noise), last_t_(t0) {
  cfg_.validate();
  if (!noise_.valid()) throw ConfigError("initial noise belief is invalid");
  if (!initial.mean.allFinite() || !initial.cov.allFinite()) {
    throw InvalidArgument("initial state has non-finite entries");
  }
  mu_ = DragMatrix(cfg_.mu0);
  outputs_.push_back(initial);
}

SensorStatus Estimator::status_of(const MeasurementFrame& f, bool uwb_usable) const {
  return {f.uwb_ok && f.uwb_range.has_value() && uwb_usable,
          f.of_ok && f.of_velocity.has_value(), cfg_.epsilon};
}

StepOutput Estimator::push(const MeasurementFrame& frame) {
  const double dt = frame.t - last_t_;
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw InvalidArgument("frame timestamps must increase strictly");
  }
  last_t_ = frame.t;
  ++steps_;

  slots_.push_back({frame, dt});
  while (static_cast<int>(slots_.size()) > cfg_.window_length) slots_.pop_front();

  if (steps_ <= cfg_.warmup) return warmup_step(slots_.back());
  return window_step();
}

StepOutput Estimator::warmup_step(const Slot& slot) {
  const NoiseCovariances cov = expected_covariances(noise_);
  noise_history_.push_back(cov);
  while (static_cast<int>(noise_history_.size()) > cfg_.window_length) noise_history_.pop_front();

  const StateBelief& prev = outputs_.back();
  const Mat6 A = model::build_transition(slot.dt, mu_);
  const Vec6 u = model::build_input(slot.dt, slot.frame.accel_input);
  const Vec6 x_prior = A * prev.mean + u;
  const Mat6 P_prior = symmetrized(Mat6(A * prev.cov * A.transpose() + cov.Q));

  const Linearized lin = linearize(slot.frame, x_prior.head<3>(), cfg_.anchor);
  const SensorStatus status = status_of(slot.frame, !lin.degenerate);
  const Mat4 R = apply_sensor_status(cov.R, status);

  const Mat4 S = symmetrized(Mat4(lin.C * P_prior * lin.C.transpose() + R));
  Eigen::LLT<Mat4> llt(S);
  if (llt.info() != Eigen::Success) {
    throw InnovationNotPD("warm-up innovation covariance not positive definite");
  }
  const Eigen::Matrix<double, kStateDim, kMeasDim> K =
      llt.solve(lin.C * P_prior).transpose();

  StateBelief post;
  post.mean = x_prior + K * (lin.y - lin.C * x_prior);
  post.cov = symmetrized(Mat6((Mat6::Identity() - K * lin.C) * P_prior));

  outputs_.push_back(post);
  while (static_cast<int>(outputs_.size()) > cfg_.window_length + 1) outputs_.pop_front();

  StepOutput out;
  out.t = slot.frame.t;
  out.warmup = true;
  out.estimate = post;
  out.Q = cov.Q;
  out.R = cov.R;
  out.mu = mu_.matrix();
  out.diag.uwb_degenerate = lin.degenerate;
  return out;
}

StepOutput Estimator::window_step() {
  const int kw = cfg_.window_length;
  const Ablation& abl = cfg_.ablation;

  const NoiseCovariances entry = expected_covariances(noise_);
  noise_history_.push_back(entry);
  while (static_cast<int>(noise_history_.size()) > kw) noise_history_.pop_front();

  WindowBuffer buf;
  buf.coherence = !abl.coherence_off;
  buf.priors.assign(outputs_.end() - kw, outputs_.end());
  buf.init_cov = abl.consistency_off ? buf.priors.front().cov : cfg_.P0;

  std::vector<SensorStatus> status(kw);
  bool newest_degenerate = false;
  for (int j = 1; j <= kw; ++j) {
    const Slot& slot = slots_[j - 1];
    const Mat6 A = model::build_transition(slot.dt, mu_);
    const Vec6 u = model::build_input(slot.dt, slot.frame.accel_input);
    const Vec3 p_tilde = model::approximate_position(buf.priors[j - 1], A, u);
    const Linearized lin = linearize(slot.frame, p_tilde, cfg_.anchor);
    status[j - 1] = status_of(slot.frame, !lin.degenerate);
    if (j == kw) newest_degenerate = lin.degenerate;

    const NoiseCovariances& cov = abl.consistency_off ? noise_history_[j - 1] : entry;
    buf.A.push_back(A);
    buf.u.push_back(u);
    buf.y.push_back(lin.y);
    buf.C.push_back(lin.C);
    buf.Q.push_back(cov.Q);
    buf.R.push_back(apply_sensor_status(cov.R, status[j - 1]));
  }

  const ForwardPass fp = forward_filter(buf, buf.init());
  const ErrorPropagation ep = error_propagation(fp, buf);
  const SmoothedWindow sw = backward_smooth(fp, buf);

  const GateWeights w = gate_weights(ep, cfg_);
  if (!abl.adapt_off) {
    noise_ = iw_update(noise_, iw_auxiliary(sw, buf, status), w, kw);
  }
  const NoiseCovariances exit = expected_covariances(noise_);

  double ell = 0.0;
  if (!abl.drag_off) {
    ell = step_length(exit.Q, apply_sensor_status(exit.R, status.back()), cfg_);
    if (ell > 0.0) {
      Mat3 mu = mu_.matrix();
      for (int j = 1; j <= kw; ++j) {
        const Slot& slot = slots_[j - 1];
        mu -= ell * drag_gradient(sw.x[j - 1].tail<3>(), sw.x[j].tail<3>(),
                                  slot.frame.accel_input, DragMatrix(mu), slot.dt);
      }
      mu_ = DragMatrix(mu);
    }
  }

  outputs_.clear();
  StepOutput out;
  out.window.reserve(kw + 1);
  for (int j = 0; j <= kw; ++j) {
    outputs_.push_back({sw.x[j], sw.P[j]});
    out.window.push_back(outputs_.back());
  }

  out.t = slots_.back().frame.t;
  out.estimate = outputs_.back();
  out.Q = exit.Q;
  out.R = exit.R;
  out.mu = mu_.matrix();
  out.diag.avg_trace = ep.avg_trace;
  out.diag.reduced_det = ep.reduced_det;
  out.diag.step_length = ell;
  out.diag.weights = w;
  out.diag.uwb_degenerate = newest_degenerate;
  return out;
}

}  // namespace raswe
