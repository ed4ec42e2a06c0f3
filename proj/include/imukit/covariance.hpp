#pragma once

#include <stdexcept>
#include <tuple>
#include <vector>

#include "imukit/preintegration.hpp"
#include "imukit/scan.hpp"
#include "imukit/types.hpp"

namespace imukit {

using Mat93 = Eigen::Matrix<double, 9, 3>;

/// 9x9 preintegration covariance, error order [dphi, dv, dp].
using StateCov = Mat9;

/// Per-frame sensor noise variances (diagonal), per axis.
struct NoiseDiag {
  Vec3 gyro = Vec3::Zero();  // (rad/s)^2
  Vec3 acc = Vec3::Zero();   // (m/s^2)^2
};

/// State transition for one frame. dR_ik is the increment rotation at the
/// start of the step, dR_step the step rotation exp(w_k dt):
///   [ dR_step^T            0      0 ]
///   [ -dR_ik a^ dt         I      0 ]
///   [ -1/2 dR_ik a^ dt^2   I dt   I ]
inline Mat9 build_A(const Rotation& dR_ik, const Rotation& dR_step,
                    const Vec3& a_k, double dt) {
  Mat9 A = Mat9::Identity();
  const Mat3 R_a = dR_ik.matrix() * hat(a_k);
  A.block<3, 3>(0, 0) = dR_step.matrix().transpose();
  A.block<3, 3>(3, 0) = -R_a * dt;
  A.block<3, 3>(6, 0) = -0.5 * R_a * dt * dt;
  A.block<3, 3>(6, 3) = Mat3::Identity() * dt;
  return A;
}

/// Frame-by-frame noise injection:
///   B_g = [J_r(w dt) dt; 0; 0],  B_a = [0; dR_ik dt; 1/2 dR_ik dt^2].
inline std::pair<Mat93, Mat93> build_B(const Rotation& dR_ik, const Vec3& w_k,
                                       double dt) {
  Mat93 Bg = Mat93::Zero();
  Mat93 Ba = Mat93::Zero();
  Bg.block<3, 3>(0, 0) = right_jacobian(w_k * dt) * dt;
  const Mat3 R = dR_ik.matrix();
  Ba.block<3, 3>(3, 0) = R * dt;
  Ba.block<3, 3>(6, 0) = 0.5 * R * dt * dt;
  return {Bg, Ba};
}

/// One covariance update:
///   S' = A S A^T + B_g diag(eta_gyro) B_g^T + B_a diag(eta_acc) B_a^T,
/// symmetrized to suppress drift.
inline StateCov step_covariance(const StateCov& sigma, const Mat9& A,
                                const Mat93& Bg, const Mat93& Ba,
                                const NoiseDiag& eta) {
  if ((eta.gyro.array() < 0.0).any() || (eta.acc.array() < 0.0).any()) {
    throw std::invalid_argument("step_covariance: negative noise variance");
  }
  StateCov next = A * sigma * A.transpose();
  next += Bg * eta.gyro.asDiagonal() * Bg.transpose();
  next += Ba * eta.acc.asDiagonal() * Ba.transpose();
  return 0.5 * (next + next.transpose());
}

inline std::tuple<Mat3, Mat3, Mat3> cov_blocks(const StateCov& sigma) {
  return {sigma.block<3, 3>(0, 0), sigma.block<3, 3>(3, 3),
          sigma.block<3, 3>(6, 6)};
}

namespace detail {

inline const NoiseDiag& eta_at(const std::vector<NoiseDiag>& eta,
                               std::size_t k) {
  return eta.size() == 1 ? eta.front() : eta[k];
}

inline void check_propagate_args(const std::vector<Increments>& inc,
                                 const ImuSequence& samples,
                                 const std::vector<NoiseDiag>& eta) {
  if (inc.empty() || inc.size() != samples.size()) {
    throw std::invalid_argument("covariance: increments/samples size mismatch");
  }
  if (eta.size() != 1 && eta.size() != inc.size()) {
    throw std::invalid_argument("covariance: noise list size mismatch");
  }
}

struct FrameMats {
  Mat9 A;
  Mat93 Bg;
  Mat93 Ba;
};

inline FrameMats frame_mats(const std::vector<Increments>& inc,
                            const ImuSequence& samples, std::size_t k) {
  const Rotation dR_ik = k == 0 ? Rotation() : inc[k - 1].dR;
  const double dt = k == 0 ? inc[0].dt : inc[k].dt - inc[k - 1].dt;
  const Rotation dR_step = dR_ik.inverse() * inc[k].dR;
  FrameMats m;
  m.A = build_A(dR_ik, dR_step, samples[k].a, dt);
  std::tie(m.Bg, m.Ba) = build_B(dR_ik, samples[k].w, dt);
  return m;
}

}  // namespace detail

/// Frame-by-frame propagation; out[k] is the covariance of increment k.
/// eta holds one entry per frame, or a single entry broadcast to all.
inline std::vector<StateCov> propagate_iterative(
    const std::vector<Increments>& inc, const ImuSequence& samples,
    const std::vector<NoiseDiag>& eta,
    const StateCov& sigma0 = StateCov::Zero()) {
  detail::check_propagate_args(inc, samples, eta);
  std::vector<StateCov> out(inc.size());
  StateCov sigma = sigma0;
  for (std::size_t k = 0; k < inc.size(); ++k) {
    const auto m = detail::frame_mats(inc, samples, k);
    sigma = step_covariance(sigma, m.A, m.Bg, m.Ba, detail::eta_at(eta, k));
    out[k] = sigma;
  }
  return out;
}

namespace detail {

// The covariance recursion S' = A S A^T + N is an affine map on S, and
// affine maps compose associatively: (P2,S2) after (P1,S1) is
// (P2 P1, P2 S1 P2^T + S2). Scanning these pairs yields every prefix
// covariance in log depth, the per-prefix equivalent of the suffix-product
// C^A / C^B stacking.
struct CovPair {
  Mat9 P;
  Mat9 S;
};

inline Mat9 frame_noise(const FrameMats& m, const NoiseDiag& eta) {
  if ((eta.gyro.array() < 0.0).any() || (eta.acc.array() < 0.0).any()) {
    throw std::invalid_argument("covariance: negative noise variance");
  }
  Mat9 n = m.Bg * eta.gyro.asDiagonal() * m.Bg.transpose();
  n += m.Ba * eta.acc.asDiagonal() * m.Ba.transpose();
  return n;
}

}  // namespace detail

/// Batched propagation: one scan produces the covariance of every prefix.
/// Numerically equals propagate_iterative.
inline std::vector<StateCov> propagate_batched(
    const std::vector<Increments>& inc, const ImuSequence& samples,
    const std::vector<NoiseDiag>& eta,
    const StateCov& sigma0 = StateCov::Zero()) {
  detail::check_propagate_args(inc, samples, eta);
  const std::size_t n = inc.size();

  std::vector<detail::CovPair> pairs(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto m = detail::frame_mats(inc, samples, k);
    pairs[k] = {m.A, detail::frame_noise(m, detail::eta_at(eta, k))};
  }
  inclusive_scan_inplace(
      pairs, [](const detail::CovPair& a, const detail::CovPair& b) {
        return detail::CovPair{b.P * a.P,
                               b.P * a.S * b.P.transpose() + b.S};
      });

  const bool seeded = !sigma0.isZero(0.0);
  std::vector<StateCov> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    StateCov s = pairs[k].S;
    if (seeded) s += pairs[k].P * sigma0 * pairs[k].P.transpose();
    out[k] = 0.5 * (s + s.transpose());
  }
  return out;
}

/// Covariance of the whole window only, assembled exactly as the stacked
/// suffix-product form: the transition list [prod A_k, ..., A_last, I]
/// paired with [sigma0, N_0, ..., N_last].
inline StateCov window_covariance_batched(
    const std::vector<Increments>& inc, const ImuSequence& samples,
    const std::vector<NoiseDiag>& eta,
    const StateCov& sigma0 = StateCov::Zero()) {
  detail::check_propagate_args(inc, samples, eta);
  const std::size_t n = inc.size();

  std::vector<Mat9> trans(n);
  std::vector<Mat9> noise(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto m = detail::frame_mats(inc, samples, k);
    trans[k] = m.A;
    noise[k] = detail::frame_noise(m, detail::eta_at(eta, k));
  }
  const std::vector<Mat9> suffix = cummatmul9(trans, MatmulOrder::kSuffix);

  StateCov sigma = suffix[0] * sigma0 * suffix[0].transpose();
  for (std::size_t k = 0; k + 1 < n; ++k) {
    sigma += suffix[k + 1] * noise[k] * suffix[k + 1].transpose();
  }
  sigma += noise[n - 1];
  return 0.5 * (sigma + sigma.transpose());
}

}  // namespace imukit
