#include "imukit/dataset_io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "imukit/calibration.hpp"
#include "imukit/sim.hpp"
#include "test_util.hpp"

namespace imukit {
namespace {

class DatasetIoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() / "imukit_io_test";
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  std::string path(const std::string& name) const {
    return (dir_ / name).string();
  }
  void write(const std::string& name, const std::string& content) const {
    std::ofstream out(path(name));
    out << content;
  }

  std::filesystem::path dir_;
};

TEST_F(DatasetIoTest, ParsesThreeRowFixture) {
  write("imu.csv",
        "timestamp_ns,wx,wy,wz,ax,ay,az\n"
        "1403636579758555392,0.1,0.2,0.3,9.0,0.5,-0.25\n"
        "1403636579763555392,0.1,0.2,0.3,9.0,0.5,-0.25\n"
        "1403636579768555392,0.1,0.2,0.3,9.0,0.5,-0.25\n");
  const ImuSequence seq = load_imu_csv(path("imu.csv"));
  ASSERT_EQ(seq.size(), 3u);
  EXPECT_EQ(seq.t0_ns, 1403636579758555392LL);
  EXPECT_EQ(seq[0].t, 0.0);
  EXPECT_NEAR(seq[1].t, 0.005, 1e-12);
  EXPECT_NEAR(seq[2].t, 0.010, 1e-12);
  EXPECT_EQ(seq[0].w, Vec3(0.1, 0.2, 0.3));
  EXPECT_EQ(seq[0].a, Vec3(9.0, 0.5, -0.25));
}

TEST_F(DatasetIoTest, EmptyFileIsError) {
  write("empty.csv", "");
  EXPECT_THROW(load_imu_csv(path("empty.csv")), std::runtime_error);
  write("header_only.csv", "timestamp_ns,wx,wy,wz,ax,ay,az\n");
  EXPECT_THROW(load_imu_csv(path("header_only.csv")), std::runtime_error);
}

TEST_F(DatasetIoTest, NonMonotoneReportsRowNumber) {
  write("bad.csv",
        "100,0,0,0,0,0,0\n"
        "200,0,0,0,0,0,0\n"
        "150,0,0,0,0,0,0\n");
  try {
    load_imu_csv(path("bad.csv"));
    FAIL() << "expected error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find(":3"), std::string::npos) << e.what();
  }
}

TEST_F(DatasetIoTest, MalformedRowReportsRowNumber) {
  write("bad2.csv",
        "100,0,0,0,0,0,0\n"
        "200,0,x,0,0,0,0\n");
  try {
    load_imu_csv(path("bad2.csv"));
    FAIL() << "expected error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
  }
}

TEST_F(DatasetIoTest, ImuRoundTripValueIdentical) {
  auto g = test::rng(101);
  ImuSequence seq = test::random_imu(g, 64);
  seq.t0_ns = 1403636579758555392LL;
  save_imu_csv(path("rt.csv"), seq);
  const ImuSequence back = load_imu_csv(path("rt.csv"));
  // and a second generation to confirm formatting normalization
  save_imu_csv(path("rt2.csv"), back);
  const ImuSequence back2 = load_imu_csv(path("rt2.csv"));
  ASSERT_EQ(back.size(), seq.size());
  for (std::size_t k = 0; k < seq.size(); ++k) {
    EXPECT_EQ(back[k].w, seq[k].w);
    EXPECT_EQ(back[k].a, seq[k].a);
    EXPECT_NEAR(back[k].t, seq[k].t, 1e-9);
    EXPECT_EQ(back2[k].w, back[k].w);
    EXPECT_EQ(back2[k].t, back[k].t);
  }
}

TEST_F(DatasetIoTest, GroundTruthNormalizesQuaternion) {
  write("gt.csv",
        "100,1.0,2.0,3.0,2.0,0,0,0\n"
        "200,1.1,2.0,3.0,2.0,0,0,0\n");
  // |q| - 1 = 1.0 > 1e-3 -> error
  EXPECT_THROW(load_groundtruth_csv(path("gt.csv")), std::runtime_error);

  write("gt2.csv",
        "100,1.0,2.0,3.0,1.0000005,0,0,0\n"
        "200,1.1,2.0,3.0,1.0,0,0,0\n");
  const Trajectory traj = load_groundtruth_csv(path("gt2.csv"));
  EXPECT_NEAR(traj.states[0].r.q.norm(), 1.0, 1e-12);
  EXPECT_LT(quaternion_distance(traj.states[0].r, Rotation()), 1e-6);
}

TEST_F(DatasetIoTest, GroundTruthDerivesVelocityByCentralDifference) {
  write("gt.csv",
        "0,0.0,0,0,1,0,0,0\n"
        "1000000000,1.0,0,0,1,0,0,0\n"
        "2000000000,4.0,0,0,1,0,0,0\n");
  const Trajectory traj = load_groundtruth_csv(path("gt.csv"));
  EXPECT_NEAR(traj.states[0].v.x(), 1.0, 1e-12);   // forward diff
  EXPECT_NEAR(traj.states[1].v.x(), 2.0, 1e-12);   // central diff
  EXPECT_NEAR(traj.states[2].v.x(), 3.0, 1e-12);   // backward diff
}

TEST_F(DatasetIoTest, ConstantPositionYieldsZeroVelocity) {
  write("gt.csv",
        "0,5.0,1,2,1,0,0,0\n"
        "1000000000,5.0,1,2,1,0,0,0\n"
        "2000000000,5.0,1,2,1,0,0,0\n");
  const Trajectory traj = load_groundtruth_csv(path("gt.csv"));
  for (const auto& x : traj.states) {
    EXPECT_TRUE(x.v.isZero(0.0));
  }
}

TEST_F(DatasetIoTest, GroundTruthRoundTrip) {
  const auto states = gen_trajectory(TrajKind::kFigure8, {}, 2.0, 50.0);
  Trajectory traj{states, 1000000000LL};
  save_groundtruth_csv(path("gt.csv"), traj);
  const Trajectory back = load_groundtruth_csv(path("gt.csv"));
  ASSERT_EQ(back.size(), traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    EXPECT_EQ(back.states[k].p, traj.states[k].p);
    EXPECT_EQ(back.states[k].v, traj.states[k].v);
    EXPECT_LT(quaternion_distance(back.states[k].r, traj.states[k].r), 1e-15);
  }
}

TEST_F(DatasetIoTest, GpsRoundTrip) {
  const auto states = gen_trajectory(TrajKind::kCircle, {}, 10.0, 100.0);
  const GpsSequence gps = simulate_gps(states, 1.0, 0.1, 11);
  save_gps_csv(path("gps.csv"), gps);
  const GpsSequence back = load_gps_csv(path("gps.csv"));
  ASSERT_EQ(back.epochs.size(), gps.epochs.size());
  for (std::size_t k = 0; k < gps.epochs.size(); ++k) {
    EXPECT_EQ(back.epochs[k].t, gps.epochs[k].t);
    EXPECT_EQ(back.epochs[k].p, gps.epochs[k].p);
    EXPECT_EQ(back.epochs[k].sigma, gps.epochs[k].sigma);
  }
}

TEST_F(DatasetIoTest, MaskBehaviors) {
  auto g = test::rng(102);
  const ImuSequence seq = test::random_imu(g, 100, 0.01);  // t in [0, 0.99]

  const ImuSequence same = apply_masks(seq, {});
  EXPECT_EQ(same.size(), seq.size());

  const ImuSequence none = apply_masks(seq, {{-1.0, 2.0}});
  EXPECT_TRUE(none.empty());

  const ImuSequence gapped = apply_masks(seq, {{0.30, 0.50}});
  EXPECT_EQ(gapped.size(), 79u);  // drops t in {0.30 ... 0.50}, 21 samples
  for (const auto& s : gapped.samples) {
    EXPECT_TRUE(s.t < 0.30 || s.t > 0.50);
  }
}

TEST_F(DatasetIoTest, SegmentsRespectMaskGaps) {
  // A masked hole splits the stream into two runs; windows never span it.
  auto g = test::rng(103);
  const ImuSequence seq = test::random_imu(g, 1000, 0.01);  // [0, 9.99]
  std::vector<NavState> gt(1001);
  for (std::size_t k = 0; k <= 1000; ++k) {
    gt[k].t = k * 0.01;
    gt[k].p = Vec3(double(k), 0, 0);
  }
  const auto whole = extract_segments(seq, gt, 200, 200);
  EXPECT_EQ(whole.size(), 5u);

  const ImuSequence gapped = apply_masks(seq, {{4.005, 4.895}});
  ASSERT_EQ(gapped.size(), 911u);
  const auto split = extract_segments(gapped, gt, 200, 200);
  // the window grid over 911 samples puts [400, 600) across the gap; that
  // window is dropped and none survive past index 800
  EXPECT_EQ(split.size(), 3u);
  for (const auto& seg : split) {
    for (std::size_t k = 0; k + 1 < seg.imu.size(); ++k) {
      EXPECT_LT(seg.imu[k + 1].t - seg.imu[k].t, 0.02);
    }
  }
}

TEST_F(DatasetIoTest, SegmentBoundaryRule) {
  // 5000-frame stream with gt exactly on the sample times: the last window
  // needs gt at t_4999 + dt, one step past coverage, so 4 segments remain.
  ImuSequence seq;
  seq.samples.resize(5000);
  std::vector<NavState> gt(5000);
  for (std::size_t k = 0; k < 5000; ++k) {
    seq.samples[k] = {k * 0.005, Vec3::Zero(), Vec3::Zero()};
    gt[k].t = k * 0.005;
    gt[k].p = Vec3(double(k), 0, 0);
  }
  const auto segs = extract_segments(seq, gt, 1000, 1000);
  EXPECT_EQ(segs.size(), 4u);
  // disjoint windows under stride == length
  for (std::size_t s = 0; s + 1 < segs.size(); ++s) {
    EXPECT_LT(segs[s].imu.samples.back().t, segs[s + 1].imu.samples.front().t);
  }
  // stream shorter than the window -> empty
  ImuSequence tiny;
  tiny.samples.assign(seq.samples.begin(), seq.samples.begin() + 500);
  EXPECT_TRUE(extract_segments(tiny, gt, 1000, 1000).empty());
}

TEST_F(DatasetIoTest, SegmentEndpointsInterpolated) {
  ImuSequence seq;
  seq.samples.resize(400);
  std::vector<NavState> gt(500);
  for (std::size_t k = 0; k < 400; ++k) {
    seq.samples[k] = {k * 0.005, Vec3::Zero(), Vec3::Zero()};
  }
  for (std::size_t k = 0; k < 500; ++k) {
    gt[k].t = k * 0.005;
    gt[k].p = Vec3(2.0 * gt[k].t, 0, 0);
  }
  const auto segs = extract_segments(seq, gt, 200, 100);
  ASSERT_GE(segs.size(), 2u);
  for (const auto& seg : segs) {
    EXPECT_NEAR(seg.gt_start.p.x(), 2.0 * seg.imu.samples.front().t, 1e-12);
    const double t_end = seg.imu.samples.back().t + 0.005;
    EXPECT_NEAR(seg.gt_end.p.x(), 2.0 * t_end, 1e-12);
    EXPECT_NEAR(seg.gt_end.t, t_end, 1e-12);
  }
}

TEST_F(DatasetIoTest, CorrectionAlignmentChecks) {
  auto g = test::rng(104);
  const ImuSequence seq = test::random_imu(g, 10);
  CorrectionTable tab;
  for (std::size_t k = 0; k < 10; ++k) {
    tab.t.push_back(seq[k].t);
    tab.correction.gyro.push_back(Vec3::Zero());
    tab.correction.acc.push_back(Vec3::Zero());
    tab.eta.push_back(NoiseDiag{});
  }
  EXPECT_NO_THROW(check_alignment(tab, seq));

  CorrectionTable short_tab = tab;
  short_tab.t.pop_back();
  EXPECT_THROW(check_alignment(short_tab, seq), std::invalid_argument);

  CorrectionTable shifted = tab;
  shifted.t[3] += 0.001;
  EXPECT_THROW(check_alignment(shifted, seq), std::invalid_argument);
}

}  // namespace
}  // namespace imukit
