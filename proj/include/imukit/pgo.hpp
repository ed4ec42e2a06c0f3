#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "imukit/correction.hpp"
#include "imukit/covariance.hpp"
#include "imukit/dataset_io.hpp"
#include "imukit/preintegration.hpp"

namespace imukit {

using Vec9 = Eigen::Matrix<double, 9, 1>;

struct ImuFactor {
  std::size_t i = 0;
  std::size_t j = 0;
  Increments inc;
  StateCov cov = StateCov::Identity();
};

struct GpsFactor {
  std::size_t i = 0;
  Vec3 p = Vec3::Zero();
  Mat3 cov = Mat3::Identity();
};

struct PoseGraph {
  std::vector<NavState> nodes;
  std::vector<ImuFactor> imu_factors;
  std::vector<GpsFactor> gps_factors;
  Vec3 gravity = default_gravity();
};

struct SolveOptions {
  double lambda0 = 1e-4;
  int max_iters = 100;
  double cost_tol = 1e-9;
  double step_tol = 1e-10;
  bool anchor_first_node = false;  // 9-dof prior on node 0 when no GPS gauge
  double anchor_sigma = 1e-6;
};

struct SolveReport {
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  bool converged = false;
  std::vector<double> lambda_trace;
};

struct SolveFailure : std::runtime_error {
  SolveReport report;
  SolveFailure(const std::string& what, SolveReport r)
      : std::runtime_error(what), report(std::move(r)) {}
};

/// IMU residual between two nodes given the preintegrated increments:
///   r_phi = log(dR^-1 R_i^T R_j)
///   r_v   = v_i + g dt + R_i dv - v_j
///   r_p   = p_i + v_i dt + 1/2 g dt^2 + R_i dp - p_j
/// Zero when x_j = predict_state(x_i, inc, g).
inline Vec9 imu_residual(const NavState& xi, const NavState& xj,
                         const Increments& inc, const Vec3& gravity) {
  Vec9 r;
  r.segment<3>(0) = so3_log(inc.dR.inverse() * xi.r.inverse() * xj.r);
  r.segment<3>(3) = xi.v + gravity * inc.dt + xi.r * inc.dv - xj.v;
  r.segment<3>(6) = xi.p + xi.v * inc.dt + 0.5 * gravity * inc.dt * inc.dt +
                    xi.r * inc.dp - xj.p;
  return r;
}

/// Jacobians of imu_residual with respect to the right-perturbed 9-dim
/// tangents [dphi, dv, dp] of both nodes.
inline void imu_residual_jacobians(const NavState& xi, const NavState& xj,
                                   const Increments& inc, const Vec3& gravity,
                                   Eigen::Matrix<double, 9, 9>* Ji,
                                   Eigen::Matrix<double, 9, 9>* Jj) {
  const Vec3 r_phi = so3_log(inc.dR.inverse() * xi.r.inverse() * xj.r);
  const Mat3 Jr_inv = right_jacobian_inv(r_phi);
  const Mat3 Ri = xi.r.matrix();
  const Mat3 Rj = xj.r.matrix();

  Ji->setZero();
  Ji->block<3, 3>(0, 0) = -Jr_inv * Rj.transpose() * Ri;
  Ji->block<3, 3>(3, 0) = -Ri * hat(inc.dv);
  Ji->block<3, 3>(3, 3) = Mat3::Identity();
  Ji->block<3, 3>(6, 0) = -Ri * hat(inc.dp);
  Ji->block<3, 3>(6, 3) = Mat3::Identity() * inc.dt;
  Ji->block<3, 3>(6, 6) = Mat3::Identity();

  Jj->setZero();
  Jj->block<3, 3>(0, 0) = Jr_inv;
  Jj->block<3, 3>(3, 3) = -Mat3::Identity();
  Jj->block<3, 3>(6, 6) = -Mat3::Identity();
}

inline Vec3 gps_residual(const NavState& xi, const Vec3& p_hat) {
  return p_hat - xi.p;
}

namespace detail {

// The propagated covariance lives in the increment frame; the v/p residual
// rows are rotated into the world frame by R_i, so the weight must be
// conjugated to match: Sigma_r = blkdiag(I, R_i, R_i) Sigma blkdiag(.)^T.
inline StateCov residual_covariance(const StateCov& sigma, const Rotation& ri) {
  Eigen::Matrix<double, 9, 9> T = Eigen::Matrix<double, 9, 9>::Identity();
  const Mat3 R = ri.matrix();
  T.block<3, 3>(3, 3) = R;
  T.block<3, 3>(6, 6) = R;
  StateCov out = T * sigma * T.transpose();
  out += 1e-12 * StateCov::Identity();
  return out;
}

inline void validate(const PoseGraph& graph, const SolveOptions& opts) {
  const std::size_t n = graph.nodes.size();
  if (n == 0) {
    throw std::invalid_argument("pgo: empty graph");
  }
  for (const auto& f : graph.imu_factors) {
    if (f.i >= n || f.j >= n || f.i == f.j) {
      throw std::invalid_argument("pgo: imu factor index out of range");
    }
  }
  for (const auto& f : graph.gps_factors) {
    if (f.i >= n) {
      throw std::invalid_argument("pgo: gps factor index out of range");
    }
  }
  if (graph.gps_factors.empty() && !opts.anchor_first_node) {
    throw std::invalid_argument("pgo: gauge free (no gps factor, no anchor)");
  }
}

struct NormalEquations {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  double cost = 0.0;
};

inline double factor_cost(const Vec9& r, const Eigen::LLT<StateCov>& llt) {
  return r.dot(llt.solve(r));
}

/// Whitened Gauss-Newton normal equations and total cost at the current
/// linearization point.
inline NormalEquations linearize(const PoseGraph& graph,
                                 const SolveOptions& opts) {
  const std::size_t dim = 9 * graph.nodes.size();
  NormalEquations ne{Eigen::MatrixXd::Zero(dim, dim),
                     Eigen::VectorXd::Zero(dim), 0.0};

  Eigen::Matrix<double, 9, 9> Ji, Jj;
  for (const auto& f : graph.imu_factors) {
    const NavState& xi = graph.nodes[f.i];
    const NavState& xj = graph.nodes[f.j];
    const Vec9 r = imu_residual(xi, xj, f.inc, graph.gravity);
    imu_residual_jacobians(xi, xj, f.inc, graph.gravity, &Ji, &Jj);

    const Eigen::LLT<StateCov> llt(residual_covariance(f.cov, xi.r));
    if (llt.info() != Eigen::Success) {
      throw std::invalid_argument("pgo: imu factor covariance not PD");
    }
    const StateCov info = llt.solve(StateCov::Identity());
    ne.cost += r.dot(info * r);

    const std::size_t bi = 9 * f.i;
    const std::size_t bj = 9 * f.j;
    ne.H.block<9, 9>(bi, bi) += Ji.transpose() * info * Ji;
    ne.H.block<9, 9>(bj, bj) += Jj.transpose() * info * Jj;
    ne.H.block<9, 9>(bi, bj) += Ji.transpose() * info * Jj;
    ne.H.block<9, 9>(bj, bi) += Jj.transpose() * info * Ji;
    ne.g.segment<9>(bi) += Ji.transpose() * (info * r);
    ne.g.segment<9>(bj) += Jj.transpose() * (info * r);
  }

  for (const auto& f : graph.gps_factors) {
    const Vec3 r = gps_residual(graph.nodes[f.i], f.p);
    const Mat3 cov = f.cov + 1e-12 * Mat3::Identity();
    const Eigen::LLT<Mat3> llt(cov);
    if (llt.info() != Eigen::Success) {
      throw std::invalid_argument("pgo: gps factor covariance not PD");
    }
    const Mat3 info = llt.solve(Mat3::Identity());
    ne.cost += r.dot(info * r);
    // d r / d dp_i = -I
    const std::size_t bi = 9 * f.i + 6;
    ne.H.block<3, 3>(bi, bi) += info;
    ne.g.segment<3>(bi) += -info * r;
  }

  if (opts.anchor_first_node) {
    const double w = 1.0 / (opts.anchor_sigma * opts.anchor_sigma);
    ne.H.block<9, 9>(0, 0) += w * Eigen::Matrix<double, 9, 9>::Identity();
  }
  return ne;
}

inline double evaluate_cost(const PoseGraph& graph, const SolveOptions& opts) {
  double cost = 0.0;
  for (const auto& f : graph.imu_factors) {
    const NavState& xi = graph.nodes[f.i];
    const Vec9 r = imu_residual(xi, graph.nodes[f.j], f.inc, graph.gravity);
    const Eigen::LLT<StateCov> llt(residual_covariance(f.cov, xi.r));
    cost += factor_cost(r, llt);
  }
  for (const auto& f : graph.gps_factors) {
    const Vec3 r = gps_residual(graph.nodes[f.i], f.p);
    const Eigen::LLT<Mat3> llt(f.cov + 1e-12 * Mat3::Identity());
    cost += r.dot(llt.solve(r));
  }
  return cost;
}

inline void retract(std::vector<NavState>& nodes, const Eigen::VectorXd& dx) {
  for (std::size_t m = 0; m < nodes.size(); ++m) {
    const std::size_t b = 9 * m;
    nodes[m].r = nodes[m].r * so3_exp(dx.segment<3>(b));
    nodes[m].v += dx.segment<3>(b + 3);
    nodes[m].p += dx.segment<3>(b + 6);
  }
}

}  // namespace detail

/// Levenberg-Marquardt over the node states with manifold retraction
/// (rotation right-multiplied exp, velocity/position additive). Damping
/// starts at lambda0, x10 on a rejected step, x0.5 on an accepted one.
inline std::pair<PoseGraph, SolveReport> solve(PoseGraph graph,
                                               const SolveOptions& opts = {}) {
  detail::validate(graph, opts);

  SolveReport report;
  double lambda = opts.lambda0;
  double cost = detail::evaluate_cost(graph, opts);
  report.initial_cost = cost;
  report.final_cost = cost;

  while (report.iterations < opts.max_iters) {
    const auto ne = detail::linearize(graph, opts);
    const std::size_t dim = ne.H.rows();

    bool stepped = false;
    while (report.iterations < opts.max_iters) {
      ++report.iterations;
      report.lambda_trace.push_back(lambda);

      Eigen::MatrixXd damped = ne.H;
      damped.diagonal().array() += lambda;
      const Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
      Eigen::VectorXd dx = ldlt.solve(-ne.g);
      if (ldlt.info() != Eigen::Success || !dx.allFinite()) {
        report.final_cost = cost;
        throw SolveFailure("pgo: singular normal equations", report);
      }

      if (dx.norm() < opts.step_tol) {
        report.final_cost = cost;
        report.converged = true;
        return {std::move(graph), report};
      }

      std::vector<NavState> candidate = graph.nodes;
      detail::retract(candidate, dx);
      PoseGraph trial = graph;
      trial.nodes = std::move(candidate);
      const double new_cost = detail::evaluate_cost(trial, opts);

      if (std::isfinite(new_cost) && new_cost < cost) {
        const double rel_decrease = (cost - new_cost) / std::max(cost, 1e-300);
        graph.nodes = std::move(trial.nodes);
        cost = new_cost;
        lambda = std::max(lambda * 0.5, 1e-12);
        stepped = true;
        if (rel_decrease < opts.cost_tol) {
          report.final_cost = cost;
          report.converged = true;
          return {std::move(graph), report};
        }
        break;  // relinearize
      }

      lambda *= 10.0;
      if (lambda > 1e15) {
        report.final_cost = cost;
        throw SolveFailure("pgo: damping exhausted without progress", report);
      }
    }
    if (!stepped) break;
  }

  report.final_cost = cost;
  report.converged = false;
  return {std::move(graph), report};
}

/// Marginal covariance blocks of every node at the current linearization
/// point (inverse of the undamped normal equations).
inline std::vector<StateCov> node_marginals(const PoseGraph& graph,
                                            const SolveOptions& opts = {}) {
  const auto ne = detail::linearize(graph, opts);
  const Eigen::MatrixXd cov =
      ne.H.ldlt().solve(Eigen::MatrixXd::Identity(ne.H.rows(), ne.H.cols()));
  std::vector<StateCov> out(graph.nodes.size());
  for (std::size_t m = 0; m < out.size(); ++m) {
    out[m] = cov.block<9, 9>(9 * m, 9 * m);
  }
  return out;
}

/// Per-factor window data kept aside so factor covariances can be rebuilt
/// (e.g. re-seeded from solved marginals).
struct KeyframeWindows {
  std::vector<ImuSequence> windows;
  std::vector<std::vector<NoiseDiag>> etas;
};

/// Builds the keyframe graph: one node per GPS epoch, consecutive nodes
/// linked by an IMU factor whose increments and covariance come from
/// preintegration over the inter-epoch samples. Node states are
/// dead-reckoned from the first node.
inline PoseGraph keyframe_graph(const ImuSequence& samples,
                                const CorrectionModel& correction,
                                const UncertaintyModel& uncertainty,
                                const GpsSequence& gps,
                                const Vec3& gravity = default_gravity(),
                                const std::optional<NavState>& x0 = {},
                                KeyframeWindows* windows_out = nullptr) {
  if (gps.epochs.empty()) {
    throw std::invalid_argument("keyframe_graph: empty gps stream");
  }
  if (samples.size() < 2) {
    throw std::invalid_argument("keyframe_graph: need at least 2 imu samples");
  }
  const ImuSequence corrected = apply_correction(samples, correction);
  const std::vector<NoiseDiag> eta = uncertainty_of(corrected, uncertainty);

  const double dt_last = corrected.samples.back().t -
                         corrected.samples[corrected.size() - 2].t;
  const double t_min = corrected.samples.front().t - 1e-9;
  const double t_max = corrected.samples.back().t + dt_last + 1e-9;
  if (gps.epochs.front().t < t_min || gps.epochs.back().t > t_max) {
    throw std::invalid_argument("keyframe_graph: gps epochs outside imu range");
  }

  PoseGraph graph;
  graph.gravity = gravity;

  // Window of samples covering [epoch_k, epoch_{k+1}).
  std::size_t idx = 0;
  auto advance_to = [&](double t) {
    while (idx < corrected.size() && corrected[idx].t < t - 1e-9) ++idx;
    return idx;
  };

  const std::size_t n_nodes = gps.epochs.size();
  std::vector<std::size_t> starts(n_nodes);
  for (std::size_t k = 0; k < n_nodes; ++k) {
    starts[k] = advance_to(gps.epochs[k].t);
  }

  for (std::size_t k = 0; k + 1 < n_nodes; ++k) {
    const std::size_t lo = starts[k];
    const std::size_t hi = std::max(starts[k + 1], lo + 1);
    ImuSequence window;
    window.t0_ns = corrected.t0_ns;
    window.samples.assign(corrected.samples.begin() + lo,
                          corrected.samples.begin() + hi);
    std::vector<NoiseDiag> window_eta(eta.begin() + lo, eta.begin() + hi);

    const auto inc = integrate_increments(window);
    ImuFactor f;
    f.i = k;
    f.j = k + 1;
    f.inc = inc.back();
    f.cov = window_covariance_batched(inc, window, window_eta);
    graph.imu_factors.push_back(f);
    if (windows_out) {
      windows_out->windows.push_back(std::move(window));
      windows_out->etas.push_back(std::move(window_eta));
    }
  }

  NavState first;
  if (x0) {
    first = *x0;
  } else {
    first.p = gps.epochs.front().p;
  }
  first.t = gps.epochs.front().t;
  graph.nodes.push_back(first);
  for (std::size_t k = 0; k + 1 < n_nodes; ++k) {
    graph.nodes.push_back(predict_state(graph.nodes.back(),
                                        graph.imu_factors[k].inc, gravity));
  }

  for (std::size_t k = 0; k < n_nodes; ++k) {
    GpsFactor f;
    f.i = k;
    f.p = gps.epochs[k].p;
    const double s2 = gps.epochs[k].sigma * gps.epochs[k].sigma;
    f.cov = Mat3::Identity() * s2;
    graph.gps_factors.push_back(f);
  }
  return graph;
}

/// Rebuilds each IMU factor covariance with sigma0 seeded from the solved
/// marginal of its start node. Optional mode behind a flag.
inline void reseed_factor_covariances(PoseGraph& graph,
                                      const KeyframeWindows& windows) {
  const std::vector<StateCov> marginals = node_marginals(graph);
  for (std::size_t k = 0; k < graph.imu_factors.size(); ++k) {
    auto& f = graph.imu_factors[k];
    const auto inc = integrate_increments(windows.windows[k]);
    f.cov = window_covariance_batched(inc, windows.windows[k], windows.etas[k],
                                      marginals[f.i]);
  }
}

}  // namespace imukit
