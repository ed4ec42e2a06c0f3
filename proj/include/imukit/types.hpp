#pragma once

#include <cstdint>
#include <vector>

#include "imukit/so3.hpp"

namespace imukit {

/// One IMU reading: body-frame angular velocity (rad/s) and specific
/// force (m/s^2) at time t (s).
struct ImuSample {
  double t = 0.0;
  Vec3 w = Vec3::Zero();
  Vec3 a = Vec3::Zero();
};

/// Timestamped IMU stream. t0_ns keeps the absolute epoch of the first
/// sample so streams loaded from different files can be re-anchored.
struct ImuSequence {
  std::vector<ImuSample> samples;
  std::int64_t t0_ns = 0;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  const ImuSample& operator[](std::size_t i) const { return samples[i]; }
  ImuSample& operator[](std::size_t i) { return samples[i]; }
};

/// Preintegrated increments relative to a window start: rotation, velocity,
/// position deltas and the elapsed time. Independent of the absolute state
/// and of gravity.
struct Increments {
  Rotation dR;
  Vec3 dv = Vec3::Zero();
  Vec3 dp = Vec3::Zero();
  double dt = 0.0;
};

/// World-frame navigation state.
struct NavState {
  Rotation r;
  Vec3 v = Vec3::Zero();
  Vec3 p = Vec3::Zero();
  double t = 0.0;
};

constexpr double kDefaultGravityZ = -9.81;

inline Vec3 default_gravity() { return Vec3(0.0, 0.0, kDefaultGravityZ); }

}  // namespace imukit
