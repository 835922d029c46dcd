#include "raswe/adaptation.hpp"

#include <algorithm>
#include <cmath>

namespace raswe {

namespace {

constexpr double kQDofOffset = kStateDim + 1;  // n + 1
constexpr double kRDofOffset = kMeasDim + 1;   // m + 1

template <typename M>
bool symmetric_psd(const M& m) {
  if (!m.allFinite()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) return false;
  Eigen::SelfAdjointEigenSolver<M> es(symmetrized(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -1e-9 * std::max(1.0, std::abs(m.trace()));
}

/// log det of a symmetric PD matrix, or nullopt when not PD.
template <typename M>
std::optional<double> log_det_spd(const M& m) {
  if (!m.allFinite()) return std::nullopt;
  Eigen::LLT<M> llt(m);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const M L = llt.matrixL();
  if ((L.diagonal().array() <= 0.0).any()) return std::nullopt;
  return 2.0 * L.diagonal().array().log().sum();
}

}  // namespace

void EstimatorConfig::validate() const {
  if (window_length < 1) throw ConfigError("k_w must be at least 1");
  if (!(lambda0 > 0.0 && lambda0 <= 1.0)) throw ConfigError("lambda0 must lie in (0, 1]");
  if (!(f1 > 0.0 && f1 < 1.0)) throw ConfigError("f1 must lie in (0, 1)");
  if (!(f2 > 0.0 && f2 < 1.0)) throw ConfigError("f2 must lie in (0, 1)");
  if (!(b_l > 0.0 && b_l < b_u)) throw ConfigError("step bounds must satisfy 0 < b_l < b_u");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ConfigError("epsilon must be positive");
  if (!mu0.allFinite()) throw ConfigError("mu0 has non-finite entries");
  if (!(phi0 > kQDofOffset)) throw ConfigError("phi0 must exceed 7");
  if (!(psi0 > kRDofOffset)) throw ConfigError("psi0 must exceed 5");
  if (!symmetric_psd(Phi0)) throw ConfigError("Phi0 must be symmetric PSD");
  if (!symmetric_psd(Psi0)) throw ConfigError("Psi0 must be symmetric PSD");
  if (!symmetric_psd(P0) || !log_det_spd(P0)) throw ConfigError("P0 must be symmetric PD");
  if (warmup < window_length) throw ConfigError("warmup must be at least k_w steps");
  if (!anchor.allFinite()) throw ConfigError("anchor has non-finite entries");
}

EstimatorConfig dwe_config(EstimatorConfig cfg) {
  cfg.ablation.adapt_off = true;
  cfg.ablation.drag_off = true;
  cfg.ablation.errprop_off = true;
  return cfg;
}

NoiseBelief NoiseBelief::from_config(const EstimatorConfig& cfg) {
  return {cfg.phi0, cfg.Phi0, cfg.psi0, cfg.Psi0};
}

NoiseBelief NoiseBelief::with_means(double phi, const Mat6& Q, double psi, const Mat4& R) {
  return {phi, (phi - kQDofOffset) * Q, psi, (psi - kRDofOffset) * R};
}

bool NoiseBelief::valid() const {
  return phi > kQDofOffset && psi > kRDofOffset && symmetric_psd(Phi) && symmetric_psd(Psi);
}

GateWeights gate_weights(const ErrorPropagation& ep, const EstimatorConfig& cfg) {
  GateWeights w;
  if (cfg.ablation.errprop_off) {
    w.w1 = w.w2 = w.w3 = 1.0;
    return w;
  }
  if (ep.avg_trace >= cfg.lambda0) {
    w.w1 = 1.0;
    w.w2 = 0.0;
  } else {
    const double lam = std::clamp(ep.avg_trace, 0.0, cfg.lambda0);
    w.w1 = 1.0 - cfg.f1 * lam;
    w.w2 = 1.0 - cfg.f1 + cfg.f1 * lam;
  }
  const double w3 = cfg.f2 + ep.reduced_det / cfg.f2;
  w.w3_clamped = !(w3 <= 1.0);
  w.w3 = std::min(w3, 1.0);
  return w;
}

AuxiliaryMatrices iw_auxiliary(const SmoothedWindow& sw, const WindowBuffer& buffer,
                               std::span<const SensorStatus> status) {
  const int kw = buffer.length();
  if (!status.empty() && static_cast<int>(status.size()) != kw) {
    throw InvalidArgument("sensor status list must have one entry per step");
  }
  AuxiliaryMatrices aux;
  aux.Phi.reserve(kw);
  aux.Psi.reserve(kw);
  for (int j = 1; j <= kw; ++j) {
    const Mat6& A = buffer.A[j - 1];
    const Mat46& C = buffer.C[j - 1];
    const Mat6& P = sw.P[j];
    const Mat6& G = sw.G[j];

    const Vec6 e1 = sw.x[j] - A * sw.x[j - 1] - buffer.u[j - 1];
    Vec4 e2 = buffer.y[j - 1] - C * sw.x[j];
    if (!status.empty()) {
      if (!status[j - 1].uwb_ok) e2(0) = 0.0;
      if (!status[j - 1].of_ok) e2.tail<3>().setZero();
    }

    // Cross terms as A G P and G P A^T; the sum is symmetrized afterwards.
    const Mat6 phi = P - A * G * P - G * P * A.transpose() +
                     A * sw.P[j - 1] * A.transpose() + e1 * e1.transpose();
    aux.Phi.push_back(symmetrized(phi));
    aux.Psi.push_back(symmetrized(Mat4(C * P * C.transpose() + e2 * e2.transpose())));
  }
  return aux;
}

NoiseBelief iw_update(const NoiseBelief& belief, const AuxiliaryMatrices& aux,
                      const GateWeights& w, int window_length) {
  NoiseBelief out;
  out.phi = w.w1 * (belief.phi - kQDofOffset) + kQDofOffset + w.w2 * window_length;
  out.psi = w.w1 * (belief.psi - kRDofOffset) + kRDofOffset + w.w2 * window_length;

  Mat6 phi_sum = Mat6::Zero();
  for (const auto& m : aux.Phi) phi_sum += m;
  Mat4 psi_acc = Mat4::Zero();
  for (const auto& m : aux.Psi) psi_acc = w.w3 * (psi_acc + m);

  out.Phi = symmetrized(Mat6(w.w1 * belief.Phi + w.w2 * phi_sum));
  out.Psi = symmetrized(Mat4(w.w1 * belief.Psi + w.w2 * psi_acc));
  if (!(out.phi > kQDofOffset) || !(out.psi > kRDofOffset)) {
    throw DegenerateDoF("inverse-Wishart update left degrees of freedom too small");
  }
  return out;
}

NoiseCovariances expected_covariances(const NoiseBelief& belief) {
  if (!(belief.phi > kQDofOffset) || !(belief.psi > kRDofOffset)) {
    throw DegenerateDoF("expectation undefined: need phi > 7 and psi > 5");
  }
  return {belief.Phi / (belief.phi - kQDofOffset), belief.Psi / (belief.psi - kRDofOffset)};
}

Mat4 apply_sensor_status(const Mat4& R, const SensorStatus& s) {
  Vec4 d;
  d(0) = s.uwb_ok ? 1.0 : s.epsilon;
  d.tail<3>().setConstant(s.of_ok ? 1.0 : s.epsilon);
  return d.asDiagonal() * R * d.asDiagonal();
}

Mat3 drag_gradient(const Vec3& v_prev, const Vec3& v, const Vec3& accel, const DragMatrix& mu,
                   double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("drag gradient requires dt > 0");
  const Vec3 residual = v - (Mat3::Identity() - dt * mu.matrix()) * v_prev - dt * accel;
  return 2.0 * dt * residual * v_prev.transpose();
}

double step_length(const Mat6& Q, const Mat4& R, const EstimatorConfig& cfg) {
  const auto log_q = log_det_spd(Q);
  const auto log_r = log_det_spd(R);
  if (!log_q || !log_r) return 0.0;
  const double q = std::exp(*log_q / kStateDim);
  const double r = std::exp(*log_r / kMeasDim);
  if (!std::isfinite(q) || !std::isfinite(r) || q <= r) return 0.0;
  return cfg.b_u - (cfg.b_u - cfg.b_l) * r / q;
}

}  // namespace raswe
