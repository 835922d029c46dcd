#include "raswe/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <random>
#include <thread>

#include "raswe/metrics.hpp"
#include "raswe/model.hpp"

namespace raswe::sim {

namespace {

using std::numbers::pi;

// Lambda_n(i, j) = 0.1 when i + j is even, 0.2 otherwise (1-based).
template <int N>
Eigen::Matrix<double, N, N> parity_matrix() {
  Eigen::Matrix<double, N, N> m;
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) m(i, j) = ((i + j) % 2 == 0) ? 0.1 : 0.2;
  }
  return m;
}

template <int N>
Eigen::Matrix<double, N, 1> sample_gaussian(const Eigen::Matrix<double, N, N>& L,
                                            std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Matrix<double, N, 1> z;
  for (int i = 0; i < N; ++i) z(i) = normal(rng);
  return L * z;
}

template <int N>
std::optional<Eigen::Matrix<double, N, N>> cholesky_factor(const Eigen::Matrix<double, N, N>& m) {
  if (m.isZero(0.0)) return Eigen::Matrix<double, N, N>::Zero();
  Eigen::LLT<Eigen::Matrix<double, N, N>> llt(m);
  if (llt.info() != Eigen::Success) return std::nullopt;
  return Eigen::Matrix<double, N, N>(llt.matrixL());
}

bool in_any(const std::vector<Outage>& outages, long k) {
  return std::any_of(outages.begin(), outages.end(), [k](const Outage& o) { return o.contains(k); });
}

NoiseCovariances scaled_noise(const SimScenario& s, long k) {
  NoiseCovariances c = s.noise(k);
  c.Q *= s.noise_scale;
  c.R *= s.noise_scale;
  return c;
}

}  // namespace

Vec3 accel_law(long k, const Vec3& v_prev, double dt) {
  const double t = static_cast<double>(k) * dt;
  const Vec3 target(-pi * std::sin(t / 12.0) / 2.4, pi * std::cos(t / 12.0) / 2.4,
                    0.05 * std::cos(t / 24.0));
  return target - v_prev;
}

NoiseCovariances covariance_laws(long k) {
  const double kd = static_cast<double>(k);
  const double q_scale = (10.0 + 9.0 * std::sin(kd * pi / 275.0)) / 2500.0;
  const double r_scale = (1.5 + 1.2 * std::sin(kd * pi / 325.0)) / 2000.0;
  Vec6 q_diag;
  q_diag << 7, 3, 1, 4, 9, 1;
  const Vec4 r_diag(9, 5, 4, 1);
  return {q_scale * (Mat6(q_diag.asDiagonal()) + parity_matrix<6>()),
          r_scale * (Mat4(r_diag.asDiagonal()) + parity_matrix<4>())};
}

Mat3 drag_law(long k) {
  const double kd = static_cast<double>(k);
  return Vec3(1.0 + 0.03 * std::sin(kd * pi / 200.0), 1.0 + 0.03 * std::sin(kd * pi / 250.0),
              1.0 + 0.03 * std::sin(kd * pi / 225.0))
      .asDiagonal();
}

void SimScenario::validate() const {
  if (steps < 1) throw ConfigError("simulation needs at least one step");
  if (warmup < 0) throw ConfigError("negative warm-up length");
  if (!(dt > 0.0)) throw ConfigError("simulation dt must be positive");
  if (!(noise_scale >= 0.0) || !(process_noise_scale >= 0.0)) {
    throw ConfigError("noise scales must be non-negative");
  }
  if (!x0.allFinite() || !anchor.allFinite()) throw ConfigError("non-finite start or anchor");
  for (long k = 0; k <= total_steps(); ++k) {
    const NoiseCovariances c = scaled_noise(*this, k);
    if (!cholesky_factor<kStateDim>(c.Q) || !cholesky_factor<kMeasDim>(c.R)) {
      throw ConfigError("noise law is not positive definite at step " + std::to_string(k));
    }
  }
}

SimTruth simulate_truth(const SimScenario& scenario) {
  const long n = scenario.total_steps();
  std::mt19937_64 rng(scenario.seed);

  SimTruth truth;
  truth.x.reserve(n + 1);
  truth.accel.reserve(n + 1);
  truth.mu.reserve(n + 1);
  truth.Q.reserve(n + 1);
  truth.R.reserve(n + 1);
  truth.y_clean.reserve(n + 1);
  truth.y.reserve(n + 1);
  truth.frames.reserve(n);

  const NoiseCovariances c0 = scaled_noise(scenario, 0);
  truth.x.push_back(scenario.x0);
  truth.accel.push_back(Vec3::Zero());
  truth.mu.push_back(scenario.drag(0));
  truth.Q.push_back(c0.Q);
  truth.R.push_back(c0.R);
  Vec4 y0;
  y0 << (scenario.x0.head<3>() - scenario.anchor).norm(), scenario.x0.tail<3>();
  truth.y_clean.push_back(y0);
  truth.y.push_back(y0);

  for (long k = 1; k <= n; ++k) {
    const Vec6& prev = truth.x.back();
    const Vec3 accel = scenario.accel(k, prev.tail<3>(), scenario.dt);
    const Mat3 mu = scenario.drag(k);
    const NoiseCovariances c = scaled_noise(scenario, k);
    const auto LQ = cholesky_factor<kStateDim>(c.Q);
    const auto LR = cholesky_factor<kMeasDim>(c.R);
    if (!LQ || !LR) throw ConfigError("noise law is not positive definite");

    const Mat6 A = model::build_transition(scenario.dt, DragMatrix(mu));
    const Vec6 w = sample_gaussian<kStateDim>(*LQ, rng);
    const Vec6 x = A * prev + model::build_input(scenario.dt, accel) +
                   std::sqrt(scenario.process_noise_scale) * w;

    Vec4 clean;
    clean << (x.head<3>() - scenario.anchor).norm(), x.tail<3>();
    const Vec4 y = clean + sample_gaussian<kMeasDim>(*LR, rng);

    MeasurementFrame f;
    f.t = static_cast<double>(k) * scenario.dt;
    f.accel_input = accel;
    if (!in_any(scenario.uwb_outages, k)) {
      f.uwb_range = std::max(y(0), 0.0);
      f.uwb_ok = true;
    }
    if (!in_any(scenario.of_outages, k)) {
      f.of_velocity = y.tail<3>();
      f.of_ok = true;
    }

    truth.x.push_back(x);
    truth.accel.push_back(accel);
    truth.mu.push_back(mu);
    truth.Q.push_back(c.Q);
    truth.R.push_back(c.R);
    truth.y_clean.push_back(clean);
    truth.y.push_back(y);
    truth.frames.push_back(std::move(f));
  }
  return truth;
}

RunMetrics evaluate(const RunSeries& s) {
  RunMetrics m;
  m.position_rmse = metrics::rmse_euclidean(s.est_pos, s.true_pos);
  m.rmse_axis = metrics::rmse_per_axis(s.est_pos, s.true_pos);
  m.std_axis = metrics::error_std_per_axis(s.est_pos, s.true_pos);

  std::vector<double> qd, qf, rd, rf;
  std::vector<Mat3> est_mu;
  for (std::size_t i = 0; i < s.steps.size(); ++i) {
    const StepOutput& o = s.steps[i];
    using metrics::kl_divergence;
    using metrics::softmax_weights;
    qd.push_back(kl_divergence(softmax_weights(s.true_Q[i], true), softmax_weights(o.Q, true)));
    qf.push_back(kl_divergence(softmax_weights(s.true_Q[i], false), softmax_weights(o.Q, false)));
    rd.push_back(kl_divergence(softmax_weights(s.true_R[i], true), softmax_weights(o.R, true)));
    rf.push_back(kl_divergence(softmax_weights(s.true_R[i], false), softmax_weights(o.R, false)));
    est_mu.push_back(o.mu);
  }
  m.kld_q_diag = metrics::mean(qd);
  m.kld_q_full = metrics::mean(qf);
  m.kld_r_diag = metrics::mean(rd);
  m.kld_r_full = metrics::mean(rf);
  m.drag_rel_rmse = metrics::drag_relative_rmse(est_mu, s.true_mu);
  return m;
}

RunResult run_single(const SimScenario& scenario, const EstimatorConfig& cfg, bool keep_series) {
  RunResult result;
  result.seed = scenario.seed;
  try {
    scenario.validate();
    const SimTruth truth = simulate_truth(scenario);

    EstimatorConfig run_cfg = cfg;
    StateBelief init{scenario.x0, cfg.P0};
    NoiseBelief noise = NoiseBelief::from_config(cfg);
    if (scenario.init_from_truth) {
      run_cfg.mu0 = truth.mu[0];
      noise = NoiseBelief::with_means(cfg.phi0, truth.Q[0], cfg.psi0, truth.R[0]);
    }
    run_cfg.anchor = scenario.anchor;

    Estimator est(run_cfg, init, 0.0, noise);
    RunSeries& s = result.series;
    const std::size_t evaluated = static_cast<std::size_t>(scenario.steps);
    s.steps.reserve(evaluated);
    for (long k = 1; k <= scenario.total_steps(); ++k) {
      StepOutput out = est.push(truth.frames[k - 1]);
      if (k <= scenario.warmup) continue;
      out.window.clear();
      s.t.push_back(out.t);
      s.est_pos.push_back(out.estimate.position());
      s.true_pos.push_back(truth.x[k].head<3>());
      s.true_Q.push_back(truth.Q[k]);
      s.true_R.push_back(truth.R[k]);
      s.true_mu.push_back(truth.mu[k]);
      s.steps.push_back(std::move(out));
    }
    result.metrics = evaluate(s);
    result.ok = std::isfinite(result.metrics.position_rmse);
    if (!result.ok) result.error = "non-finite position estimate";
    if (!keep_series) result.series = RunSeries{};
  } catch (const std::exception& e) {
    result.ok = false;
    result.error = e.what();
    result.series = RunSeries{};
  }
  return result;
}

BatchResult run_monte_carlo(const SimScenario& scenario, int n_runs, const EstimatorConfig& cfg,
                            bool keep_series, unsigned threads, const RunCallback& on_run) {
  if (n_runs < 1) throw InvalidArgument("need at least one run");
  BatchResult batch;
  batch.runs.resize(static_cast<std::size_t>(n_runs));

  unsigned workers = threads != 0 ? threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(n_runs));

  std::atomic<int> next{0};
  auto work = [&] {
    for (int i = next++; i < n_runs; i = next++) {
      SimScenario s = scenario;
      s.seed = scenario.seed + static_cast<std::uint64_t>(i);
      RunResult r = run_single(s, cfg, keep_series || on_run);
      if (on_run) on_run(i, r);
      if (!keep_series) r.series = RunSeries{};
      batch.runs[static_cast<std::size_t>(i)] = std::move(r);
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  int ok = 0;
  RunMetrics& m = batch.mean;
  for (const RunResult& r : batch.runs) {
    if (!r.ok) {
      ++batch.failed;
      continue;
    }
    ++ok;
    m.position_rmse += r.metrics.position_rmse;
    m.rmse_axis += r.metrics.rmse_axis;
    m.std_axis += r.metrics.std_axis;
    m.kld_q_diag += r.metrics.kld_q_diag;
    m.kld_q_full += r.metrics.kld_q_full;
    m.kld_r_diag += r.metrics.kld_r_diag;
    m.kld_r_full += r.metrics.kld_r_full;
    m.drag_rel_rmse += r.metrics.drag_rel_rmse;
  }
  if (ok > 0) {
    const double inv = 1.0 / ok;
    m.position_rmse *= inv;
    m.rmse_axis *= inv;
    m.std_axis *= inv;
    m.kld_q_diag *= inv;
    m.kld_q_full *= inv;
    m.kld_r_diag *= inv;
    m.kld_r_full *= inv;
    m.drag_rel_rmse *= inv;
  }
  return batch;
}

}  // namespace raswe::sim
