#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace imukit {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Unit quaternion in canonical form: |q| = 1 and w >= 0 (double cover
/// resolved). Every constructor and composition renormalizes.
struct Rotation {
  Eigen::Quaterniond q{1.0, 0.0, 0.0, 0.0};

  Rotation() = default;

  explicit Rotation(const Eigen::Quaterniond& raw) : q(raw) { canonicalize(); }

  Rotation(double w, double x, double y, double z) : q(w, x, y, z) {
    canonicalize();
  }

  static Rotation identity() { return Rotation(); }

  void canonicalize() {
    q.normalize();
    if (q.w() < 0.0 ||
        (q.w() == 0.0 && (q.x() < 0.0 ||
                          (q.x() == 0.0 && (q.y() < 0.0 ||
                                            (q.y() == 0.0 && q.z() < 0.0)))))) {
      q.coeffs() = -q.coeffs();
    }
  }

  Mat3 matrix() const { return q.toRotationMatrix(); }

  Rotation inverse() const { return Rotation(q.conjugate()); }

  Rotation operator*(const Rotation& rhs) const { return Rotation(q * rhs.q); }

  Vec3 operator*(const Vec3& v) const { return q * v; }
};

inline Mat3 hat(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

/// Exponential map. Taylor branch below 1e-8 keeps truncation under
/// machine epsilon.
inline Rotation so3_exp(const Vec3& phi) {
  if (!phi.allFinite()) {
    throw std::invalid_argument("so3_exp: non-finite input");
  }
  const double theta = phi.norm();
  double w, s;
  if (theta < 1e-8) {
    w = 1.0 - theta * theta / 8.0;
    s = 0.5 - theta * theta / 48.0;
  } else {
    w = std::cos(0.5 * theta);
    s = std::sin(0.5 * theta) / theta;
  }
  return Rotation(Eigen::Quaterniond(w, s * phi.x(), s * phi.y(), s * phi.z()));
}

/// Log map; |result| <= pi by the w >= 0 canonical form.
inline Vec3 so3_log(const Rotation& r) {
  const Eigen::Quaterniond& q = r.q;
  const Vec3 xyz(q.x(), q.y(), q.z());
  const double s = xyz.norm();
  if (s < 1e-9) {
    // w ~ 1 near identity
    return (2.0 / q.w()) * xyz;
  }
  const double theta = 2.0 * std::atan2(s, q.w());
  return (theta / s) * xyz;
}

/// Right Jacobian J_r(phi): exp(phi + d) ~ exp(phi) * exp(J_r(phi) d).
inline Mat3 right_jacobian(const Vec3& phi) {
  const double theta2 = phi.squaredNorm();
  const Mat3 W = hat(phi);
  if (theta2 < 1e-12) {  // |phi| < 1e-6
    return Mat3::Identity() - 0.5 * W + (1.0 / 6.0) * W * W;
  }
  const double theta = std::sqrt(theta2);
  return Mat3::Identity() - W * (1.0 - std::cos(theta)) / theta2 +
         W * W * (theta - std::sin(theta)) / (theta2 * theta);
}

inline Mat3 right_jacobian_inv(const Vec3& phi) {
  const double theta2 = phi.squaredNorm();
  const Mat3 W = hat(phi);
  if (theta2 < 1e-12) {
    return Mat3::Identity() + 0.5 * W + (1.0 / 12.0) * W * W;
  }
  const double theta = std::sqrt(theta2);
  return Mat3::Identity() + 0.5 * W +
         W * W * (1.0 / theta2 - (1.0 + std::cos(theta)) /
                                     (2.0 * theta * std::sin(theta)));
}

/// Distance that ignores the quaternion double cover.
inline double quaternion_distance(const Rotation& a, const Rotation& b) {
  const double d1 = (a.q.coeffs() - b.q.coeffs()).norm();
  const double d2 = (a.q.coeffs() + b.q.coeffs()).norm();
  return std::min(d1, d2);
}

}  // namespace imukit
