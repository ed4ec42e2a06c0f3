#pragma once

#include <stdexcept>
#include <vector>

#include "imukit/scan.hpp"
#include "imukit/types.hpp"

namespace imukit {

namespace detail {

/// Per-sample integration step sizes: dt_k = t_{k+1} - t_k, with the last
/// sample's dt replicated from its predecessor (a single sample has no
/// predecessor and is rejected upstream unless N == 1, where dt = 0 would
/// make the increment empty; we require N >= 1 and use dt = 0 only when no
/// spacing information exists).
inline std::vector<double> sample_dts(const ImuSequence& seq) {
  const std::size_t n = seq.size();
  std::vector<double> dts(n);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double dt = seq[k + 1].t - seq[k].t;
    if (!(dt > 0.0)) {
      throw std::invalid_argument("imu timestamps not strictly increasing");
    }
    dts[k] = dt;
  }
  dts[n - 1] = n > 1 ? dts[n - 2] : 0.0;
  return dts;
}

}  // namespace detail

/// Integrates corrected IMU samples into per-frame increments. Increment k
/// spans samples 0..k:
///   dR_{k+1} = dR_k * exp(w_k dt_k)
///   dv_{k+1} = dv_k + dR_k a_k dt_k
///   dp_{k+1} = dp_k + dv_k dt_k + 1/2 dR_k a_k dt_k^2
/// Every intermediate is produced, all through log-depth scans.
inline std::vector<Increments> integrate_increments(const ImuSequence& seq) {
  const std::size_t n = seq.size();
  if (n == 0) {
    throw std::invalid_argument("integrate_increments: empty sequence");
  }
  const std::vector<double> dts = detail::sample_dts(seq);

  std::vector<Rotation> steps(n);
  for (std::size_t k = 0; k < n; ++k) {
    steps[k] = so3_exp(seq[k].w * dts[k]);
  }
  const std::vector<Rotation> rots = cumprod_so3(std::move(steps));

  // dR before sample k is rots[k-1]; identity for k = 0.
  std::vector<Vec3> dv_terms(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Vec3 body = seq[k].a * dts[k];
    dv_terms[k] = k == 0 ? body : rots[k - 1] * body;
  }
  const std::vector<Vec3> dvs = cumsum_vec3(std::move(dv_terms));

  std::vector<Vec3> dp_terms(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Vec3 v_before = k == 0 ? Vec3::Zero() : dvs[k - 1];
    const Vec3 half_acc = 0.5 * (dvs[k] - v_before) * dts[k];  // 1/2 dR a dt^2
    dp_terms[k] = v_before * dts[k] + half_acc;
  }
  const std::vector<Vec3> dps = cumsum_vec3(std::move(dp_terms));

  std::vector<double> dt_terms(dts);
  inclusive_scan_inplace(dt_terms, [](double a, double b) { return a + b; });

  std::vector<Increments> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    out[k] = Increments{rots[k], dvs[k], dps[k], dt_terms[k]};
  }
  return out;
}

/// Naive per-frame reference loop; the scan-based integrator must agree
/// with it to rounding. Also the sequential baseline for timing runs.
inline std::vector<Increments> integrate_increments_iterative(
    const ImuSequence& seq) {
  const std::size_t n = seq.size();
  if (n == 0) {
    throw std::invalid_argument("integrate_increments: empty sequence");
  }
  const std::vector<double> dts = detail::sample_dts(seq);

  std::vector<Increments> out(n);
  Increments acc;
  for (std::size_t k = 0; k < n; ++k) {
    const double dt = dts[k];
    const Vec3 a_rot = acc.dR * seq[k].a;
    acc.dp += acc.dv * dt + 0.5 * a_rot * dt * dt;
    acc.dv += a_rot * dt;
    acc.dR = acc.dR * so3_exp(seq[k].w * dt);
    acc.dt += dt;
    out[k] = acc;
  }
  return out;
}

/// Propagates a state through an increment. Gravity enters only here,
/// keeping the increments state- and gravity-independent:
///   R_j = R_i * dR
///   v_j = v_i + g dt + R_i dv
///   p_j = p_i + v_i dt + 1/2 g dt^2 + R_i dp
inline NavState predict_state(const NavState& x, const Increments& inc,
                              const Vec3& gravity) {
  NavState out;
  out.r = x.r * inc.dR;
  out.v = x.v + gravity * inc.dt + x.r * inc.dv;
  out.p = x.p + x.v * inc.dt + 0.5 * gravity * inc.dt * inc.dt + x.r * inc.dp;
  out.t = x.t + inc.dt;
  return out;
}

/// Stitches two consecutive windows; equals integrating the concatenated
/// sample stream.
inline Increments compose_increments(const Increments& a,
                                     const Increments& b) {
  Increments out;
  out.dR = a.dR * b.dR;
  out.dv = a.dv + a.dR * b.dv;
  out.dp = a.dp + a.dv * b.dt + a.dR * b.dp;
  out.dt = a.dt + b.dt;
  return out;
}

/// Inverse of predict_state: the increment that carries x_i to x_j under
/// the given gravity.
inline Increments increments_between(const NavState& xi, const NavState& xj,
                                     const Vec3& gravity) {
  Increments inc;
  inc.dt = xj.t - xi.t;
  inc.dR = xi.r.inverse() * xj.r;
  inc.dv = xi.r.inverse() * (xj.v - xi.v - gravity * inc.dt);
  inc.dp = xi.r.inverse() *
           (xj.p - xi.p - xi.v * inc.dt - 0.5 * gravity * inc.dt * inc.dt);
  return inc;
}

}  // namespace imukit
