#include "raswe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace raswe::metrics {

namespace {

void require_same_length(std::size_t a, std::size_t b) {
  if (a != b) throw InvalidArgument("series lengths differ");
  if (a == 0) throw InvalidArgument("empty series");
}

}  // namespace

Vec3 rmse_per_axis(std::span<const Vec3> est, std::span<const Vec3> ref) {
  require_same_length(est.size(), ref.size());
  Vec3 acc = Vec3::Zero();
  for (std::size_t i = 0; i < est.size(); ++i) {
    acc += (est[i] - ref[i]).cwiseAbs2();
  }
  return (acc / static_cast<double>(est.size())).cwiseSqrt();
}

double rmse_euclidean(std::span<const Vec3> est, std::span<const Vec3> ref) {
  require_same_length(est.size(), ref.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    acc += (est[i] - ref[i]).squaredNorm();
  }
  return std::sqrt(acc / static_cast<double>(est.size()));
}

Vec3 error_std_per_axis(std::span<const Vec3> est, std::span<const Vec3> ref) {
  require_same_length(est.size(), ref.size());
  const double n = static_cast<double>(est.size());
  Vec3 sum = Vec3::Zero();
  for (std::size_t i = 0; i < est.size(); ++i) sum += est[i] - ref[i];
  const Vec3 m = sum / n;
  Vec3 acc = Vec3::Zero();
  for (std::size_t i = 0; i < est.size(); ++i) acc += (est[i] - ref[i] - m).cwiseAbs2();
  return (acc / n).cwiseSqrt();
}

WeightDistribution softmax_weights(const Eigen::MatrixXd& M, bool diagonal_only) {
  if (!M.allFinite()) throw InvalidArgument("softmax of non-finite matrix");
  std::vector<double> entries;
  if (diagonal_only) {
    const Eigen::VectorXd d = M.diagonal();
    entries.assign(d.data(), d.data() + d.size());
  } else {
    entries.reserve(static_cast<std::size_t>(M.size()));
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
      for (Eigen::Index c = 0; c < M.cols(); ++c) entries.push_back(M(r, c));
    }
  }
  if (entries.empty()) throw InvalidArgument("softmax of empty matrix");

  const double peak = *std::max_element(entries.begin(), entries.end());
  double total = 0.0;
  for (double& e : entries) {
    e = std::exp(e - peak);
    total += e;
  }
  for (double& e : entries) e /= total;
  return {std::move(entries)};
}

double kl_divergence(const WeightDistribution& p, const WeightDistribution& q) {
  if (p.probs.size() != q.probs.size()) {
    throw InvalidArgument("distributions have different support sizes");
  }
  double d = 0.0;
  for (std::size_t i = 0; i < p.probs.size(); ++i) {
    if (p.probs[i] <= 0.0) continue;
    if (q.probs[i] <= 0.0) throw InvalidArgument("q has zero mass where p does not");
    d += p.probs[i] * std::log(p.probs[i] / q.probs[i]);
  }
  return std::max(d, 0.0);
}

double drag_relative_rmse(std::span<const Mat3> est, std::span<const Mat3> truth) {
  require_same_length(est.size(), truth.size());
  double acc = 0.0;
  for (std::size_t t = 0; t < est.size(); ++t) {
    for (int i = 0; i < 3; ++i) {
      const double ref = truth[t](i, i);
      if (ref == 0.0) throw InvalidArgument("true drag diagonal is zero");
      const double rel = 100.0 * (est[t](i, i) - ref) / ref;
      acc += rel * rel;
    }
  }
  return std::sqrt(acc / static_cast<double>(3 * est.size()));
}

PositionSeries savitzky_golay(std::span<const Vec3> series, int order, int frame) {
  if (frame % 2 == 0 || frame <= order || order < 0) {
    throw InvalidArgument("Savitzky-Golay needs an odd frame longer than the order");
  }
  const auto n = static_cast<int>(series.size());
  if (n < frame) throw InvalidArgument("series shorter than the Savitzky-Golay frame");

  const int half = frame / 2;
  Eigen::MatrixXd V(frame, order + 1);
  for (int r = 0; r < frame; ++r) {
    const double x = r - half;
    double p = 1.0;
    for (int c = 0; c <= order; ++c, p *= x) V(r, c) = p;
  }
  // Row r of V * pinv(V) maps the frame samples to the fitted value at r.
  const Eigen::MatrixXd hat = V * V.colPivHouseholderQr().solve(Eigen::MatrixXd::Identity(frame, frame));

  PositionSeries out(series.size());
  for (int i = 0; i < n; ++i) {
    const int start = std::clamp(i - half, 0, n - frame);
    const int pos = i - start;
    Vec3 acc = Vec3::Zero();
    for (int r = 0; r < frame; ++r) acc += hat(pos, r) * series[start + r];
    out[i] = acc;
  }
  return out;
}

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

}  // namespace raswe::metrics
