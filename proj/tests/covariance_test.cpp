#include "imukit/covariance.hpp"

#include <gtest/gtest.h>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "test_util.hpp"

namespace imukit {
namespace {

// One discrete integration step, the map A linearizes.
struct StepState {
  Rotation dR;
  Vec3 dv;
  Vec3 dp;
};

StepState integrate_one(const StepState& s, const Vec3& w, const Vec3& a,
                        double dt) {
  StepState out;
  out.dp = s.dp + s.dv * dt + 0.5 * (s.dR * a) * dt * dt;
  out.dv = s.dv + (s.dR * a) * dt;
  out.dR = s.dR * so3_exp(w * dt);
  return out;
}

// Right-perturb the step state by [dphi, dv, dp].
StepState perturb(const StepState& s, const Eigen::Matrix<double, 9, 1>& d) {
  StepState out;
  out.dR = s.dR * so3_exp(d.segment<3>(0));
  out.dv = s.dv + d.segment<3>(3);
  out.dp = s.dp + d.segment<3>(6);
  return out;
}

Eigen::Matrix<double, 9, 1> error_between(const StepState& ref,
                                          const StepState& other) {
  Eigen::Matrix<double, 9, 1> e;
  e.segment<3>(0) = so3_log(ref.dR.inverse() * other.dR);
  e.segment<3>(3) = other.dv - ref.dv;
  e.segment<3>(6) = other.dp - ref.dp;
  return e;
}

TEST(Covariance, BuildATrivialCase) {
  const double dt = 0.01;
  const Mat9 A = build_A(Rotation(), Rotation(), Vec3::Zero(), dt);
  Mat9 expect = Mat9::Identity();
  expect.block<3, 3>(6, 3) = Mat3::Identity() * dt;
  EXPECT_TRUE(A.isApprox(expect, 1e-15));
}

TEST(Covariance, BuildAUnitDeterminant) {
  auto g = test::rng(51);
  for (int i = 0; i < 50; ++i) {
    const Mat9 A = build_A(test::random_rotation(g), test::random_rotation(g),
                           test::random_vec3(g, 5.0), 0.01);
    EXPECT_NEAR(A.determinant(), 1.0, 1e-9);
  }
}

TEST(Covariance, BuildAMatchesStepJacobian) {
  // A is the Jacobian of one integration step w.r.t. the [dphi, dv, dp]
  // perturbation, checked by central differences.
  auto g = test::rng(52);
  for (int trial = 0; trial < 20; ++trial) {
    StepState s{test::random_rotation(g), test::random_vec3(g),
                test::random_vec3(g, 2.0)};
    const Vec3 w = test::random_vec3(g, 0.5);
    const Vec3 a = test::random_vec3(g, 3.0);
    const double dt = 0.01;

    const Rotation step_rot = so3_exp(w * dt);
    const Mat9 A = build_A(s.dR, step_rot, a, dt);

    const StepState nominal = integrate_one(s, w, a, dt);
    const double h = 1e-6;
    Mat9 fd;
    for (int col = 0; col < 9; ++col) {
      Eigen::Matrix<double, 9, 1> d = Eigen::Matrix<double, 9, 1>::Zero();
      d(col) = h;
      const StepState plus = integrate_one(perturb(s, d), w, a, dt);
      d(col) = -h;
      const StepState minus = integrate_one(perturb(s, d), w, a, dt);
      fd.col(col) =
          (error_between(nominal, plus) - error_between(nominal, minus)) /
          (2.0 * h);
    }
    const double rel = (A - fd).norm() / fd.norm();
    EXPECT_LT(rel, 1e-5);
  }
}

TEST(Covariance, BuildBTrivialCases) {
  const auto [Bg0, Ba0] = build_B(Rotation(), Vec3::Zero(), 0.02);
  EXPECT_TRUE((Bg0.block<3, 3>(0, 0).isApprox(Mat3::Identity() * 0.02, 1e-15)));
  EXPECT_TRUE(Bg0.bottomRows<6>().isZero(0.0));

  const auto [Bgz, Baz] = build_B(Rotation(), Vec3(1, 2, 3), 0.0);
  EXPECT_TRUE(Bgz.isZero(0.0));
  EXPECT_TRUE(Baz.isZero(0.0));
}

TEST(Covariance, BuildBColumnNorms) {
  auto g = test::rng(53);
  const double dt = 0.004;
  for (int i = 0; i < 20; ++i) {
    const auto [Bg, Ba] = build_B(test::random_rotation(g),
                                  test::random_vec3(g, 0.5), dt);
    for (int c = 0; c < 3; ++c) {
      EXPECT_NEAR(Ba.col(c).segment<3>(3).norm(), dt, 1e-12);
      EXPECT_NEAR(Ba.col(c).segment<3>(6).norm(), 0.5 * dt * dt, 1e-12);
    }
  }
}

TEST(Covariance, StepFromZeroIsZero) {
  const auto [Bg, Ba] = build_B(Rotation(), Vec3::Zero(), 0.005);
  const StateCov out = step_covariance(StateCov::Zero(), Mat9::Identity(), Bg,
                                       Ba, NoiseDiag{});
  EXPECT_TRUE(out.isZero(0.0));
}

TEST(Covariance, StepRejectsNegativeNoise) {
  const auto [Bg, Ba] = build_B(Rotation(), Vec3::Zero(), 0.005);
  NoiseDiag eta;
  eta.gyro = Vec3(-1e-6, 0, 0);
  EXPECT_THROW(
      step_covariance(StateCov::Zero(), Mat9::Identity(), Bg, Ba, eta),
      std::invalid_argument);
}

TEST(Covariance, FirstStepRotationBlockClosedForm) {
  // From zero covariance, one step leaves J_r diag(eta_g) J_r^T dt^2 in the
  // rotation block. VinsMono-style stds 0.004 / 0.08 squared on ingestion.
  const double dt = 0.005;
  const Vec3 w(0.2, -0.1, 0.05);
  NoiseDiag eta;
  eta.gyro = Vec3::Constant(0.004 * 0.004);
  eta.acc = Vec3::Constant(0.08 * 0.08);

  const Mat9 A = build_A(Rotation(), so3_exp(w * dt), Vec3(0, 0, 9.81), dt);
  const auto [Bg, Ba] = build_B(Rotation(), w, dt);
  const StateCov sigma = step_covariance(StateCov::Zero(), A, Bg, Ba, eta);

  const Mat3 Jr = right_jacobian(w * dt);
  const Mat3 expected =
      Jr * eta.gyro.asDiagonal() * Jr.transpose() * dt * dt;
  EXPECT_TRUE(std::get<0>(cov_blocks(sigma)).isApprox(expected, 1e-12));
}

std::vector<NoiseDiag> constant_eta(double gyro_std, double acc_std) {
  NoiseDiag eta;
  eta.gyro = Vec3::Constant(gyro_std * gyro_std);
  eta.acc = Vec3::Constant(acc_std * acc_std);
  return {eta};
}

TEST(Covariance, BatchedMatchesIterative) {
  auto g = test::rng(54);
  for (std::size_t n : {1, 2, 7, 100, 1000}) {
    const ImuSequence seq = test::random_imu(g, n);
    const auto inc = integrate_increments(seq);
    const auto eta = constant_eta(0.004, 0.08);

    const auto it = propagate_iterative(inc, seq, eta);
    const auto ba = propagate_batched(inc, seq, eta);
    ASSERT_EQ(it.size(), ba.size());
    for (std::size_t k = 0; k < n; ++k) {
      const double rel = (it[k] - ba[k]).norm() / (1e-300 + it[k].norm());
      EXPECT_LT(rel, 1e-8) << "n=" << n << " k=" << k;
    }
  }
}

TEST(Covariance, BatchedMatchesIterativeWithSeed) {
  auto g = test::rng(55);
  const ImuSequence seq = test::random_imu(g, 128);
  const auto inc = integrate_increments(seq);
  const auto eta = constant_eta(0.01, 0.1);
  const StateCov sigma0 = test::random_psd9(g, 0.01);

  const auto it = propagate_iterative(inc, seq, eta, sigma0);
  const auto ba = propagate_batched(inc, seq, eta, sigma0);
  for (std::size_t k = 0; k < seq.size(); ++k) {
    EXPECT_LT((it[k] - ba[k]).norm() / it[k].norm(), 1e-8);
  }
}

TEST(Covariance, WindowBatchedMatchesIterativeTail) {
  auto g = test::rng(56);
  for (std::size_t n : {1, 3, 64, 500}) {
    const ImuSequence seq = test::random_imu(g, n);
    const auto inc = integrate_increments(seq);
    const auto eta = constant_eta(0.004, 0.08);
    const StateCov sigma0 = test::random_psd9(g, 1e-4);

    const StateCov whole = window_covariance_batched(inc, seq, eta, sigma0);
    const StateCov tail = propagate_iterative(inc, seq, eta, sigma0).back();
    EXPECT_LT((whole - tail).norm() / tail.norm(), 1e-8) << n;
  }
}

TEST(Covariance, PropagatedIsSymmetricPsd) {
  auto g = test::rng(57);
  const ImuSequence seq = test::random_imu(g, 300);
  const auto inc = integrate_increments(seq);
  const auto cov = propagate_batched(inc, seq, constant_eta(0.004, 0.08));
  for (const auto& s : cov) {
    EXPECT_LT((s - s.transpose()).norm(), 1e-9 * (1.0 + s.norm()));
    Eigen::SelfAdjointEigenSolver<Mat9> es(s);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10 * s.trace());
  }
}

TEST(Covariance, TraceMonotoneUnderNoise) {
  auto g = test::rng(58);
  const ImuSequence seq = test::random_imu(g, 400);
  const auto inc = integrate_increments(seq);
  const auto cov = propagate_iterative(inc, seq, constant_eta(0.004, 0.08));
  for (std::size_t k = 1; k < cov.size(); ++k) {
    EXPECT_GE(cov[k].trace(), cov[k - 1].trace() - 1e-15);
  }
}

TEST(Covariance, LinearInNoiseScale) {
  auto g = test::rng(59);
  const ImuSequence seq = test::random_imu(g, 150);
  const auto inc = integrate_increments(seq);
  const double c = 3.7;

  auto eta1 = constant_eta(0.004, 0.08);
  auto etac = eta1;
  etac.front().gyro *= c;
  etac.front().acc *= c;

  const auto base = propagate_batched(inc, seq, eta1);
  const auto scaled = propagate_batched(inc, seq, etac);
  for (std::size_t k = 0; k < seq.size(); ++k) {
    EXPECT_LT((scaled[k] - c * base[k]).norm() / scaled[k].norm(), 1e-12);
  }
}

TEST(Covariance, CovBlocksRoundTrip) {
  EXPECT_TRUE(std::get<0>(cov_blocks(StateCov::Zero())).isZero(0.0));

  auto g = test::rng(60);
  const Mat9 sym = test::random_psd9(g);
  const auto [r, v, p] = cov_blocks(sym);
  EXPECT_TRUE((r.isApprox(sym.block<3, 3>(0, 0))));
  EXPECT_TRUE((v.isApprox(sym.block<3, 3>(3, 3))));
  EXPECT_TRUE((p.isApprox(sym.block<3, 3>(6, 6))));

  Mat9 diag = Vec3::Ones().replicate<3, 1>().asDiagonal();
  const auto [dr, dv, dp] = cov_blocks(diag);
  EXPECT_TRUE(dr.isDiagonal(0.0));
  EXPECT_TRUE(dv.isDiagonal(0.0));
}

// Shortened Monte-Carlo consistency run; the acceptance suite runs the full
// 500-sample version.
TEST(Covariance, MonteCarloNeesSmoke) {
  auto g = test::rng(61);
  const std::size_t n = 200;
  const double dt = 0.005;
  const double gyro_std = 0.004;
  const double acc_std = 0.08;

  ImuSequence base;
  base.samples.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    base.samples[k] = {k * dt, Vec3(0.3, -0.2, 0.4), Vec3(1.0, -2.0, 9.0)};
  }
  const auto inc_true = integrate_increments(base);
  const auto cov =
      propagate_iterative(inc_true, base, constant_eta(gyro_std, acc_std));
  const Eigen::LLT<Mat9> llt(cov.back());
  ASSERT_EQ(llt.info(), Eigen::Success);

  std::normal_distribution<double> dist(0.0, 1.0);
  const int runs = 100;
  double nees_sum = 0.0;
  for (int run = 0; run < runs; ++run) {
    ImuSequence noisy = base;
    for (auto& s : noisy.samples) {
      s.w += gyro_std * Vec3(dist(g), dist(g), dist(g));
      s.a += acc_std * Vec3(dist(g), dist(g), dist(g));
    }
    const auto inc_noisy = integrate_increments(noisy);

    Eigen::Matrix<double, 9, 1> e;
    e.segment<3>(0) =
        so3_log(inc_true.back().dR.inverse() * inc_noisy.back().dR);
    e.segment<3>(3) = inc_noisy.back().dv - inc_true.back().dv;
    e.segment<3>(6) = inc_noisy.back().dp - inc_true.back().dp;
    nees_sum += e.dot(llt.solve(e));
  }
  const double mean_nees = nees_sum / runs;
  EXPECT_GT(mean_nees, 6.5);
  EXPECT_LT(mean_nees, 11.5);
}

}  // namespace
}  // namespace imukit
