#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "imukit/dataset_io.hpp"
#include "imukit/types.hpp"

namespace imukit {

enum class TrajKind { kRest, kLine, kCircle, kFigure8 };

inline TrajKind traj_kind_from_string(const std::string& s) {
  if (s == "rest") return TrajKind::kRest;
  if (s == "line") return TrajKind::kLine;
  if (s == "circle") return TrajKind::kCircle;
  if (s == "figure8") return TrajKind::kFigure8;
  throw std::invalid_argument("unknown trajectory kind '" + s + "'");
}

struct TrajParams {
  Vec3 start = Vec3::Zero();        // rest/line start, circle/figure8 center
  Vec3 line_velocity = Vec3(1, 0, 0);
  double radius = 5.0;              // circle radius / figure8 half-width (m)
  double omega = 0.6;               // angular rate (rad/s)
  double z_amplitude = 0.0;         // vertical oscillation for figure8 (m)
};

/// Analytic reference poses at a fixed rate; duration*rate + 1 states.
/// Circle and figure8 keep the body x-axis along the velocity (yaw only).
inline std::vector<NavState> gen_trajectory(TrajKind kind,
                                            const TrajParams& params,
                                            double duration, double rate) {
  if (!(duration > 0.0) || !(rate > 0.0)) {
    throw std::invalid_argument("gen_trajectory: duration and rate must be positive");
  }
  const std::size_t n = static_cast<std::size_t>(std::llround(duration * rate)) + 1;
  std::vector<NavState> traj(n);
  const double r = params.radius;
  const double w = params.omega;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = double(k) / rate;
    NavState x;
    x.t = t;
    switch (kind) {
      case TrajKind::kRest:
        x.p = params.start;
        break;
      case TrajKind::kLine:
        x.p = params.start + params.line_velocity * t;
        x.v = params.line_velocity;
        break;
      case TrajKind::kCircle: {
        const double th = w * t;
        x.p = params.start + r * Vec3(std::cos(th), std::sin(th), 0.0);
        x.v = r * w * Vec3(-std::sin(th), std::cos(th), 0.0);
        x.r = so3_exp(Vec3(0, 0, th + M_PI / 2.0));
        break;
      }
      case TrajKind::kFigure8: {
        // Gerono lemniscate with optional vertical oscillation.
        const double u = w * t;
        x.p = params.start +
              Vec3(r * std::sin(u), r * std::sin(u) * std::cos(u),
                   params.z_amplitude * std::sin(2.0 * u));
        x.v = Vec3(r * w * std::cos(u), r * w * std::cos(2.0 * u),
                   2.0 * params.z_amplitude * w * std::cos(2.0 * u));
        x.r = so3_exp(Vec3(0, 0, std::atan2(x.v.y(), x.v.x())));
        break;
      }
    }
    traj[k] = x;
  }
  return traj;
}

struct SimNoise {
  Vec3 gyro_std = Vec3::Zero();  // rad/s per sample
  Vec3 acc_std = Vec3::Zero();   // m/s^2 per sample
};

struct SimBias {
  Vec3 gyro = Vec3::Zero();
  Vec3 acc = Vec3::Zero();
};

/// Synthesizes IMU readings from reference poses: body rates from exact
/// pose differences and specific force from forward-difference
/// acceleration, both discretization-consistent with the integrator (a
/// centered derivative leaves a telescoping O(dt) velocity artifact at the
/// window ends that masquerades as an accelerometer bias). Sample k spans
/// t_k .. t_{k+1}; one fewer sample than trajectory states.
inline ImuSequence sample_imu(const std::vector<NavState>& traj,
                              const Vec3& gravity, const SimNoise& noise,
                              const SimBias& bias, unsigned seed) {
  if (traj.size() < 3) {
    throw std::invalid_argument("sample_imu: need at least 3 trajectory samples");
  }
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  auto draw = [&](const Vec3& std_dev) {
    return Vec3(std_dev.x() * dist(gen), std_dev.y() * dist(gen),
                std_dev.z() * dist(gen));
  };

  const std::size_t n = traj.size() - 1;
  ImuSequence seq;
  seq.samples.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double dt = traj[k + 1].t - traj[k].t;
    const Vec3 vdot = (traj[k + 1].v - traj[k].v) / dt;
    ImuSample s;
    s.t = traj[k].t;
    s.w = so3_log(traj[k].r.inverse() * traj[k + 1].r) / dt + bias.gyro +
          draw(noise.gyro_std);
    s.a = traj[k].r.inverse() * (vdot - gravity) + bias.acc +
          draw(noise.acc_std);
    seq.samples[k] = s;
  }
  return seq;
}

/// GPS fixes at the given rate with i.i.d. Gaussian position noise per axis.
inline GpsSequence simulate_gps(const std::vector<NavState>& traj, double rate,
                                double sigma, unsigned seed) {
  if (traj.size() < 2 || !(rate > 0.0)) {
    throw std::invalid_argument("simulate_gps: bad trajectory or rate");
  }
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist(0.0, 1.0);

  GpsSequence gps;
  const double t_end = traj.back().t;
  std::size_t j = 0;
  for (std::size_t k = 0;; ++k) {
    const double t = double(k) / rate;
    if (t > t_end + 1e-9) break;
    while (j + 2 < traj.size() && traj[j + 1].t < t) ++j;
    const auto& a = traj[j];
    const auto& b = traj[j + 1];
    const double u = std::clamp((t - a.t) / (b.t - a.t), 0.0, 1.0);
    GpsEpoch e;
    e.t = t;
    e.p = (1.0 - u) * a.p + u * b.p +
          sigma * Vec3(dist(gen), dist(gen), dist(gen));
    e.sigma = sigma;
    gps.epochs.push_back(e);
  }
  return gps;
}

}  // namespace imukit
