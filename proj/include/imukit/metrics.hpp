#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "imukit/types.hpp"

namespace imukit {

constexpr double kRadToDeg = 180.0 / M_PI;

/// Estimate/ground-truth pairs on the estimate's timestamps.
struct AlignedTrajectories {
  std::vector<NavState> est;
  std::vector<NavState> gt;

  std::size_t size() const { return est.size(); }
};

/// Interpolates the ground truth onto every estimate timestamp inside its
/// coverage: linear position/velocity, spherical rotation. Estimates inside
/// a mask window or outside gt coverage are dropped.
inline AlignedTrajectories time_align(
    const std::vector<NavState>& est, const std::vector<NavState>& gt,
    const std::vector<std::array<double, 2>>& masks = {}) {
  if (gt.size() < 2) {
    throw std::invalid_argument("time_align: need at least 2 gt samples");
  }
  AlignedTrajectories out;
  std::size_t j = 0;
  for (const auto& e : est) {
    if (e.t < gt.front().t || e.t > gt.back().t) continue;
    bool inside_mask = false;
    for (const auto& m : masks) {
      if (e.t >= m[0] && e.t <= m[1]) {
        inside_mask = true;
        break;
      }
    }
    if (inside_mask) continue;

    while (j + 2 < gt.size() && gt[j + 1].t < e.t) ++j;
    const NavState& a = gt[j];
    const NavState& b = gt[j + 1];
    const double u = (e.t - a.t) / (b.t - a.t);

    NavState interp;
    interp.t = e.t;
    interp.p = (1.0 - u) * a.p + u * b.p;
    interp.v = (1.0 - u) * a.v + u * b.v;
    interp.r = Rotation(a.r.q.slerp(u, b.r.q));
    out.est.push_back(e);
    out.gt.push_back(interp);
  }
  return out;
}

namespace detail {

inline double median_dt(const std::vector<NavState>& xs) {
  if (xs.size() < 2) return 0.0;
  std::vector<double> dts(xs.size() - 1);
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
    dts[k] = xs[k + 1].t - xs[k].t;
  }
  std::nth_element(dts.begin(), dts.begin() + dts.size() / 2, dts.end());
  return dts[dts.size() / 2];
}

/// Index pairs (i, j) with t_j nearest to t_i + interval, accepted when the
/// match is within half a sample period.
inline std::vector<std::pair<std::size_t, std::size_t>> interval_pairs(
    const std::vector<NavState>& xs, double interval) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  if (xs.size() < 2) return pairs;
  const double half_period = 0.5 * median_dt(xs);
  std::size_t j = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double target = xs[i].t + interval;
    if (j < i) j = i;
    while (j + 1 < xs.size() && xs[j + 1].t < target) ++j;
    std::size_t best = j;
    if (j + 1 < xs.size() &&
        std::abs(xs[j + 1].t - target) < std::abs(xs[j].t - target)) {
      best = j + 1;
    }
    if (best > i && std::abs(xs[best].t - target) <= half_period) {
      pairs.emplace_back(i, best);
    }
  }
  return pairs;
}

inline void check_aligned(const AlignedTrajectories& a) {
  if (a.est.size() != a.gt.size()) {
    throw std::invalid_argument("metrics: est/gt size mismatch");
  }
}

inline double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / double(v.size());
}

inline double rms(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s / double(v.size()));
}

}  // namespace detail

/// Per-interval orientation errors |log(Rhat_rel^T R_rel)|, radians.
inline std::vector<double> rotation_interval_errors(
    const AlignedTrajectories& a, double interval) {
  detail::check_aligned(a);
  std::vector<double> errs;
  for (const auto& [i, j] : detail::interval_pairs(a.gt, interval)) {
    const Rotation rel_gt = a.gt[i].r.inverse() * a.gt[j].r;
    const Rotation rel_est = a.est[i].r.inverse() * a.est[j].r;
    errs.push_back(so3_log(rel_est.inverse() * rel_gt).norm());
  }
  return errs;
}

/// Per-interval displacement errors |dp_gt - R_i Rhat_i^T dp_est|, meters.
inline std::vector<double> displacement_interval_errors(
    const AlignedTrajectories& a, double interval) {
  detail::check_aligned(a);
  std::vector<double> errs;
  for (const auto& [i, j] : detail::interval_pairs(a.gt, interval)) {
    const Vec3 dp_gt = a.gt[j].p - a.gt[i].p;
    const Vec3 dp_est = a.est[j].p - a.est[i].p;
    const Vec3 rotated =
        a.gt[i].r * (a.est[i].r.inverse() * dp_est);
    errs.push_back((dp_gt - rotated).norm());
  }
  return errs;
}

/// Mean relative orientation error over the interval, degrees.
inline double roe(const AlignedTrajectories& a, double interval) {
  return detail::mean(rotation_interval_errors(a, interval)) * kRadToDeg;
}

/// Mean relative position error over the interval, meters.
inline double rpe(const AlignedTrajectories& a, double interval) {
  return detail::mean(displacement_interval_errors(a, interval));
}

inline double r_rmse(const AlignedTrajectories& a, double interval) {
  return detail::rms(rotation_interval_errors(a, interval)) * kRadToDeg;
}

inline double p_rmse(const AlignedTrajectories& a, double interval) {
  return detail::rms(displacement_interval_errors(a, interval));
}

/// Mean absolute position error over all pairs; no alignment transform.
inline double ate(const AlignedTrajectories& a) {
  detail::check_aligned(a);
  std::vector<double> errs;
  errs.reserve(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    errs.push_back((a.est[k].p - a.gt[k].p).norm());
  }
  return detail::mean(errs);
}

}  // namespace imukit
