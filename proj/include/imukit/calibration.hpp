#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "imukit/correction.hpp"
#include "imukit/losses.hpp"
#include "imukit/metrics.hpp"
#include "imukit/preintegration.hpp"

namespace imukit {

/// A fixed-length training window with ground-truth endpoint states.
struct TrainingSegment {
  ImuSequence imu;
  NavState gt_start;
  NavState gt_end;
};

/// Cuts fixed-length windows [k, k+L) out of the IMU stream with
/// ground-truth endpoints interpolated at t_k and t_{k+L-1} + dt (the
/// window's integration end). Windows spanning a timing gap (left behind by
/// masking) or lacking gt coverage at either endpoint are dropped.
inline std::vector<TrainingSegment> extract_segments(
    const ImuSequence& imu, const std::vector<NavState>& gt,
    std::size_t length, std::size_t stride) {
  if (length < 2 || stride == 0) {
    throw std::invalid_argument("extract_segments: need length >= 2, stride >= 1");
  }
  std::vector<TrainingSegment> out;
  if (imu.size() < length || gt.size() < 2) return out;

  std::vector<double> spacings(imu.size() - 1);
  for (std::size_t k = 0; k + 1 < imu.size(); ++k) {
    spacings[k] = imu[k + 1].t - imu[k].t;
  }
  std::vector<double> sorted = spacings;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2,
                   sorted.end());
  const double gap_threshold = 2.5 * sorted[sorted.size() / 2];

  for (std::size_t k = 0; k + length <= imu.size(); k += stride) {
    bool contiguous = true;
    for (std::size_t m = k; m + 1 < k + length; ++m) {
      if (spacings[m] > gap_threshold) {
        contiguous = false;
        break;
      }
    }
    if (!contiguous) continue;

    const double t_start = imu[k].t;
    const double dt_last = imu[k + length - 1].t - imu[k + length - 2].t;
    const double t_end = imu[k + length - 1].t + dt_last;
    if (t_start < gt.front().t || t_end > gt.back().t) continue;

    std::vector<NavState> probes(2);
    probes[0].t = t_start;
    probes[1].t = t_end;
    const AlignedTrajectories aligned = time_align(probes, gt);
    if (aligned.size() != 2) continue;

    TrainingSegment seg;
    seg.imu.t0_ns = imu.t0_ns;
    seg.imu.samples.assign(imu.samples.begin() + k,
                           imu.samples.begin() + k + length);
    seg.gt_start = aligned.gt[0];
    seg.gt_end = aligned.gt[1];
    out.push_back(std::move(seg));
  }
  return out;
}

struct CalibConfig {
  double lr = 1e-3;
  double weight_decay = 1e-4;
  int epochs = 400;
  double huber_delta = 0.1;
  LossWeights loss_weights;  // 1:1:1
  double epsilon = kDefaultCovLossWeight;
};

struct FitResult {
  ConstantBias bias;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  int epochs = 0;
  std::vector<double> loss_trace;  // best-so-far per accepted epoch
};

struct CalibrationDiverged : std::runtime_error {
  ConstantBias last_bias;
  explicit CalibrationDiverged(const ConstantBias& b)
      : std::runtime_error("fit_constant_bias: non-finite loss"),
        last_bias(b) {}
};

/// Mean endpoint state loss over the segments for a candidate bias.
inline double calibration_loss(const std::vector<TrainingSegment>& segments,
                               const ConstantBias& bias,
                               const CalibConfig& config,
                               const Vec3& gravity) {
  double sum = 0.0;
  for (const auto& seg : segments) {
    const ImuSequence corrected = apply_correction(seg.imu, bias);
    const Increments inc = integrate_increments(corrected).back();
    const NavState pred = predict_state(seg.gt_start, inc, gravity);
    sum += state_loss(pred, seg.gt_end, config.loss_weights,
                      config.huber_delta);
  }
  return sum / double(segments.size());
}

/// Fits the 6 constant bias parameters by gradient descent with adaptive
/// moments. Gradients come from central finite differences over the bias
/// parameterization (1e-6 rad/s gyro, 1e-5 m/s^2 accelerometer steps); the
/// integrator stays a pure function underneath. Deterministic given the
/// segment order.
inline FitResult fit_constant_bias(const std::vector<TrainingSegment>& segments,
                                   const CalibConfig& config,
                                   const Vec3& gravity = default_gravity()) {
  if (segments.empty()) {
    throw std::invalid_argument("fit_constant_bias: empty training set");
  }
  using Vec6 = Eigen::Matrix<double, 6, 1>;
  constexpr double kGyroStep = 1e-6;
  constexpr double kAccStep = 1e-5;
  constexpr double kAdamEps = 1e-8;
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;

  auto to_bias = [](const Vec6& th) {
    return ConstantBias{th.head<3>(), th.tail<3>()};
  };
  auto loss_at = [&](const Vec6& th) {
    return calibration_loss(segments, to_bias(th), config, gravity);
  };

  Vec6 theta = Vec6::Zero();
  Vec6 m = Vec6::Zero();
  Vec6 v = Vec6::Zero();

  FitResult result;
  result.initial_loss = loss_at(theta);
  double best_loss = result.initial_loss;
  Vec6 best_theta = theta;
  result.loss_trace.push_back(best_loss);

  // Adam hovers within a step-size ball of the optimum; halve the step on a
  // stale plateau so the iterates settle.
  double lr = config.lr;
  int stale = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    Vec6 grad;
    for (int i = 0; i < 6; ++i) {
      const double h = i < 3 ? kGyroStep : kAccStep;
      Vec6 plus = theta, minus = theta;
      plus(i) += h;
      minus(i) -= h;
      grad(i) = (loss_at(plus) - loss_at(minus)) / (2.0 * h);
    }
    grad += config.weight_decay * theta;

    m = kBeta1 * m + (1.0 - kBeta1) * grad;
    v = kBeta2 * v + (1.0 - kBeta2) * grad.cwiseProduct(grad);
    const Vec6 m_hat = m / (1.0 - std::pow(kBeta1, epoch));
    const Vec6 v_hat = v / (1.0 - std::pow(kBeta2, epoch));
    theta -= lr * (m_hat.array() / (v_hat.array().sqrt() + kAdamEps)).matrix();

    const double loss = loss_at(theta);
    if (!std::isfinite(loss)) {
      throw CalibrationDiverged(to_bias(theta));
    }
    if (loss < best_loss) {
      best_loss = loss;
      best_theta = theta;
      result.loss_trace.push_back(best_loss);
      stale = 0;
    } else if (++stale >= 25) {
      lr *= 0.5;
      theta = best_theta;
      stale = 0;
    }
    result.epochs = epoch;
    if (lr < 1e-8) break;
  }

  result.bias = to_bias(best_theta);
  result.final_loss = best_loss;
  return result;
}

}  // namespace imukit
