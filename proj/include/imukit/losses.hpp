#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "imukit/covariance.hpp"
#include "imukit/types.hpp"

namespace imukit {

/// Huber penalty on a nonnegative residual norm:
/// 1/2 r^2 inside delta, linear continuation outside.
inline double huber(double r, double delta) {
  return r <= delta ? 0.5 * r * r : delta * (r - 0.5 * delta);
}

inline double huber_grad(double r, double delta) {
  return r <= delta ? r : delta;
}

struct LossWeights {
  double rot = 1.0;
  double vel = 1.0;
  double pos = 1.0;
};

struct StateResiduals {
  Vec3 rot;  // log(R_gt^-1 * R_pred)
  Vec3 vel;  // v_pred - v_gt
  Vec3 pos;  // p_pred - p_gt
};

inline StateResiduals state_residuals(const NavState& pred,
                                      const NavState& gt) {
  return {so3_log(gt.r.inverse() * pred.r), pred.v - gt.v, pred.p - gt.p};
}

/// Weighted Huber loss over the manifold rotation error and the velocity
/// and position differences.
inline double state_loss(const NavState& pred, const NavState& gt,
                         const LossWeights& w, double delta) {
  const StateResiduals e = state_residuals(pred, gt);
  return w.rot * huber(e.rot.norm(), delta) +
         w.vel * huber(e.vel.norm(), delta) +
         w.pos * huber(e.pos.norm(), delta);
}

namespace detail {

/// 1/2 (e^T S^-1 e + ln det S) with S regularized by 1e-12 I.
inline double gaussian_nll(const Vec3& e, const Mat3& sigma) {
  const Mat3 reg = sigma + 1e-12 * Mat3::Identity();
  const Eigen::LLT<Mat3> llt(reg);
  if (llt.info() != Eigen::Success) {
    throw std::domain_error("cov_loss: covariance block not positive definite");
  }
  const Mat3 L = llt.matrixL();
  const double logdet = 2.0 * L.diagonal().array().log().sum();
  return 0.5 * (e.dot(llt.solve(e)) + logdet);
}

inline Vec3 gaussian_nll_grad(const Vec3& e, const Mat3& sigma) {
  const Mat3 reg = sigma + 1e-12 * Mat3::Identity();
  const Eigen::LLT<Mat3> llt(reg);
  if (llt.info() != Eigen::Success) {
    throw std::domain_error("cov_loss: covariance block not positive definite");
  }
  return llt.solve(e);
}

}  // namespace detail

struct CovBlocks {
  Mat3 rot = Mat3::Identity();
  Mat3 vel = Mat3::Identity();
  Mat3 pos = Mat3::Identity();
};

/// Gaussian negative log likelihood of the state residuals under the
/// propagated diagonal blocks; rotation residual in log space.
inline double cov_loss(const NavState& pred, const NavState& gt,
                       const CovBlocks& blocks) {
  const StateResiduals e = state_residuals(pred, gt);
  return detail::gaussian_nll(e.rot, blocks.rot) +
         detail::gaussian_nll(e.vel, blocks.vel) +
         detail::gaussian_nll(e.pos, blocks.pos);
}

struct LossTerms {
  double rot = 0.0;
  double vel = 0.0;
  double pos = 0.0;

  double sum() const { return rot + vel + pos; }
};

constexpr double kDefaultCovLossWeight = 1e-3;

/// L = L_r + L_v + L_p + epsilon (L^cov_r + L^cov_v + L^cov_p).
inline double total_loss(const LossTerms& state, const LossTerms& cov,
                         double epsilon = kDefaultCovLossWeight) {
  return state.sum() + epsilon * cov.sum();
}

/// Residual-level gradients, for derivative checks of the full objective.
/// d/de [w huber(|e|) + eps/2 (e^T S^-1 e + ln det S)].
struct TotalLossGrad {
  Vec3 rot;
  Vec3 vel;
  Vec3 pos;
};

inline Vec3 channel_grad(const Vec3& e, double weight, double delta,
                         const Mat3& sigma, double epsilon) {
  const double norm = e.norm();
  Vec3 g = Vec3::Zero();
  if (norm > 0.0) {
    g = weight * huber_grad(norm, delta) * e / norm;
  }
  return g + epsilon * detail::gaussian_nll_grad(e, sigma);
}

inline TotalLossGrad total_loss_grad(const StateResiduals& e,
                                     const LossWeights& w, double delta,
                                     const CovBlocks& blocks, double epsilon) {
  return {channel_grad(e.rot, w.rot, delta, blocks.rot, epsilon),
          channel_grad(e.vel, w.vel, delta, blocks.vel, epsilon),
          channel_grad(e.pos, w.pos, delta, blocks.pos, epsilon)};
}

inline double total_loss_from_residuals(const StateResiduals& e,
                                        const LossWeights& w, double delta,
                                        const CovBlocks& blocks,
                                        double epsilon) {
  const LossTerms state{w.rot * huber(e.rot.norm(), delta),
                        w.vel * huber(e.vel.norm(), delta),
                        w.pos * huber(e.pos.norm(), delta)};
  const LossTerms cov{detail::gaussian_nll(e.rot, blocks.rot),
                      detail::gaussian_nll(e.vel, blocks.vel),
                      detail::gaussian_nll(e.pos, blocks.pos)};
  return total_loss(state, cov, epsilon);
}

}  // namespace imukit
