// imukit command line: simulate / integrate / calibrate / fuse / evaluate /
// bench. Exit codes: 0 success, 1 runtime or solver failure, 2 usage or
// input error.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "imukit/calibration.hpp"
#include "imukit/config.hpp"
#include "imukit/correction.hpp"
#include "imukit/covariance.hpp"
#include "imukit/dataset_io.hpp"
#include "imukit/metrics.hpp"
#include "imukit/pgo.hpp"
#include "imukit/preintegration.hpp"
#include "imukit/sim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace imukit;

namespace {

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Vec3 parse_vec3(const std::string& s, const std::string& flag) {
  std::vector<double> vals;
  std::string cur;
  for (char c : s + ",") {
    if (c == ',') {
      if (!cur.empty()) {
        try {
          vals.push_back(std::stod(cur));
        } catch (const std::exception&) {
          throw InputError(flag + ": malformed number '" + cur + "'");
        }
      }
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (vals.size() == 1) return Vec3::Constant(vals[0]);
  if (vals.size() == 3) return Vec3(vals[0], vals[1], vals[2]);
  throw InputError(flag + ": expected one value or x,y,z");
}

Vec3 gravity_vector(double magnitude) { return Vec3(0, 0, -magnitude); }

void require_out_dir(const std::string& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw InputError("cannot create output directory " + out);
}

ImuSequence load_imu_checked(const std::string& path) {
  if (!fs::exists(path)) throw InputError(path + ": no such file");
  return load_imu_csv(path);
}

Trajectory load_gt_checked(const std::string& path) {
  if (!fs::exists(path)) throw InputError(path + ": no such file");
  return load_groundtruth_csv(path);
}

/// Ground-truth states on the absolute-seconds clock shared with est.csv.
std::vector<NavState> gt_absolute(const Trajectory& traj) {
  std::vector<NavState> out = traj.states;
  const double t0 = double(traj.t0_ns) * 1e-9;
  for (auto& x : out) x.t += t0;
  return out;
}

struct UncertaintySpec {
  UncertaintyModel model = ConstantDiag{};
  bool provided = false;
};

/// --uncertainty {FILE | fixed:GYRO_STD,ACC_STD}; stds squared on ingestion.
UncertaintySpec parse_uncertainty(const std::string& arg,
                                  const ImuSequence& imu) {
  UncertaintySpec spec;
  if (arg.empty()) return spec;
  spec.provided = true;
  if (arg.rfind("fixed:", 0) == 0) {
    const std::string body = arg.substr(6);
    const auto comma = body.find(',');
    if (comma == std::string::npos) {
      throw InputError("--uncertainty fixed:GYRO_STD,ACC_STD");
    }
    try {
      const double gyro_std = std::stod(body.substr(0, comma));
      const double acc_std = std::stod(body.substr(comma + 1));
      spec.model = ConstantDiag{noise_from_stds(Vec3::Constant(gyro_std),
                                                Vec3::Constant(acc_std))};
    } catch (const std::exception&) {
      throw InputError("--uncertainty fixed:GYRO_STD,ACC_STD");
    }
    return spec;
  }
  if (!fs::exists(arg)) throw InputError(arg + ": no such file");
  const CorrectionTable tab = load_correction_csv(arg);
  check_alignment(tab, imu);
  spec.model = TabulatedUncertainty{tab.eta};
  return spec;
}

CorrectionModel parse_correction(const std::string& arg,
                                 const ImuSequence& imu) {
  if (arg.empty()) return IdentityCorrection{};
  if (!fs::exists(arg)) throw InputError(arg + ": no such file");
  const CorrectionTable tab = load_correction_csv(arg);
  check_alignment(tab, imu);
  return tab.correction;
}

NoiseDiag default_fixed_noise() {
  // VinsMono EuRoC configuration stds
  return noise_from_stds(Vec3::Constant(0.004), Vec3::Constant(0.08));
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string traj = "circle";
  double duration = 60.0;
  double rate = 200.0;
  std::string gyro_bias = "0";
  std::string acc_bias = "0";
  std::string gyro_std = "0";
  std::string acc_std = "0";
  double gps_rate = 1.0;
  double gps_sigma = 0.1;
  double gravity = 9.81;
  double radius = 5.0;
  double omega = 0.6;
  unsigned seed = 7;
  std::string out;
};

int cmd_simulate(const SimulateArgs& args) {
  const TrajKind kind = traj_kind_from_string(args.traj);
  TrajParams params;
  params.radius = args.radius;
  params.omega = args.omega;

  const auto traj = gen_trajectory(kind, params, args.duration, args.rate);
  SimNoise noise;
  noise.gyro_std = parse_vec3(args.gyro_std, "--gyro-std");
  noise.acc_std = parse_vec3(args.acc_std, "--acc-std");
  SimBias bias;
  bias.gyro = parse_vec3(args.gyro_bias, "--gyro-bias");
  bias.acc = parse_vec3(args.acc_bias, "--acc-bias");

  const ImuSequence imu =
      sample_imu(traj, gravity_vector(args.gravity), noise, bias, args.seed);
  const GpsSequence gps =
      simulate_gps(traj, args.gps_rate, args.gps_sigma, args.seed + 1);

  require_out_dir(args.out);
  save_imu_csv((fs::path(args.out) / "imu.csv").string(), imu);
  save_groundtruth_csv((fs::path(args.out) / "gt.csv").string(),
                       Trajectory{traj, 0});
  save_gps_csv((fs::path(args.out) / "gps.csv").string(), gps);
  std::cout << "wrote " << args.out << "/{imu.csv, gt.csv, gps.csv}  ("
            << imu.size() << " imu samples, " << gps.epochs.size()
            << " gps epochs)\n";
  return 0;
}

// --------------------------------------------------------------- integrate

struct IntegrateArgs {
  std::string imu;
  std::string correction;
  std::string uncertainty;
  std::string init_gt;
  double gravity = 9.81;
  std::string cov = "batched";
  std::string out;
};

int cmd_integrate(const IntegrateArgs& args) {
  ImuSequence imu = load_imu_checked(args.imu);
  const Vec3 gravity = gravity_vector(args.gravity);

  NavState x0;
  x0.t = double(imu.t0_ns) * 1e-9;
  if (!args.init_gt.empty()) {
    const Trajectory gt = load_gt_checked(args.init_gt);
    const std::vector<NavState> gt_abs = gt_absolute(gt);
    // clip the stream to gt coverage, then start from interpolated gt
    ImuSequence clipped;
    clipped.t0_ns = imu.t0_ns;
    const double imu_t0 = double(imu.t0_ns) * 1e-9;
    for (const auto& s : imu.samples) {
      const double t_abs = imu_t0 + s.t;
      if (t_abs >= gt_abs.front().t && t_abs <= gt_abs.back().t) {
        clipped.samples.push_back(s);
      }
    }
    if (clipped.size() < 2) {
      throw InputError("imu and ground-truth time ranges do not overlap");
    }
    std::vector<NavState> probe(1);
    probe[0].t = imu_t0 + clipped.samples.front().t;
    const AlignedTrajectories aligned = time_align(probe, gt_abs);
    if (aligned.size() != 1) {
      throw InputError("cannot interpolate ground truth at imu start");
    }
    x0 = aligned.gt[0];
    imu = std::move(clipped);
  }

  const CorrectionModel correction = parse_correction(args.correction, imu);
  const ImuSequence corrected = apply_correction(imu, correction);
  const auto inc = integrate_increments(corrected);

  const double imu_t0 = double(imu.t0_ns) * 1e-9;
  std::vector<NavState> est;
  est.reserve(inc.size() + 1);
  NavState first = x0;
  first.t = imu_t0 + corrected.samples.front().t;
  est.push_back(first);
  for (const auto& i : inc) {
    est.push_back(predict_state(first, i, gravity));
  }

  require_out_dir(args.out);
  save_estimate_csv((fs::path(args.out) / "est.csv").string(), est);

  if (args.cov != "off") {
    UncertaintySpec unc = parse_uncertainty(args.uncertainty, corrected);
    if (!unc.provided) unc.model = ConstantDiag{default_fixed_noise()};
    const auto eta = uncertainty_of(corrected, unc.model);

    std::vector<StateCov> cov;
    if (args.cov == "batched") {
      cov = propagate_batched(inc, corrected, eta);
    } else if (args.cov == "iterative") {
      cov = propagate_iterative(inc, corrected, eta);
    } else {
      throw InputError("--cov must be batched, iterative, or off");
    }

    std::ofstream covf((fs::path(args.out) / "cov.csv").string());
    covf << "t";
    for (int i = 0; i < 9; ++i)
      for (int j = i; j < 9; ++j) covf << ",c" << i << j;
    covf << "\n";
    for (std::size_t k = 0; k < cov.size(); ++k) {
      covf << csv::fmt(est[k + 1].t);
      for (int i = 0; i < 9; ++i)
        for (int j = i; j < 9; ++j) covf << ',' << csv::fmt(cov[k](i, j));
      covf << "\n";
    }
  }
  std::cout << "wrote " << args.out << "/est.csv (" << est.size()
            << " states)" << (args.cov != "off" ? " and cov.csv" : "") << "\n";
  return 0;
}

// --------------------------------------------------------------- calibrate

struct CalibrateArgs {
  std::string train;
  std::string for_imu;
  std::size_t seg_length = 1000;
  std::size_t seg_stride = 1000;
  double gravity = 9.81;
  std::string out;
};

int cmd_calibrate(const CalibrateArgs& args, const AppConfig& cfg) {
  const fs::path train_dir(args.train);
  const std::string imu_path = (train_dir / "imu.csv").string();
  const std::string gt_path = (train_dir / "gt.csv").string();
  if (!fs::exists(imu_path) || !fs::exists(gt_path)) {
    throw InputError(args.train + ": need imu.csv and gt.csv");
  }
  ImuSequence imu = load_imu_csv(imu_path);
  const Trajectory gt = load_groundtruth_csv(gt_path);
  imu = apply_masks(imu, cfg.masks);

  const auto segments =
      extract_segments(imu, gt.states, args.seg_length, args.seg_stride);
  if (segments.empty()) {
    throw InputError("no usable training segments in " + args.train);
  }

  const FitResult fit =
      fit_constant_bias(segments, cfg.calib, gravity_vector(args.gravity));

  // correction rows aligned 1:1 with the target stream: sigma = -bias
  const ImuSequence target = args.for_imu.empty()
                                 ? load_imu_csv(imu_path)
                                 : load_imu_checked(args.for_imu);
  CorrectionTable tab;
  const NoiseDiag eta = default_fixed_noise();
  for (const auto& s : target.samples) {
    tab.t.push_back(s.t);
    tab.correction.gyro.push_back(-fit.bias.gyro);
    tab.correction.acc.push_back(-fit.bias.acc);
    tab.eta.push_back(eta);
  }

  require_out_dir(args.out);
  save_correction_csv((fs::path(args.out) / "correction.csv").string(), tab);

  json report;
  report["segments"] = segments.size();
  report["epochs"] = fit.epochs;
  report["initial_loss"] = fit.initial_loss;
  report["final_loss"] = fit.final_loss;
  report["gyro_bias"] = {fit.bias.gyro.x(), fit.bias.gyro.y(),
                         fit.bias.gyro.z()};
  report["acc_bias"] = {fit.bias.acc.x(), fit.bias.acc.y(), fit.bias.acc.z()};
  std::ofstream rfile((fs::path(args.out) / "calibration.json").string());
  rfile << report.dump(2) << "\n";
  std::cout << report.dump(2) << "\n";
  return 0;
}

// -------------------------------------------------------------------- fuse

struct FuseArgs {
  std::string imu;
  std::string gps;
  std::string correction;
  std::string uncertainty;
  std::string init_gt;
  double gravity = 9.81;
  bool reseed_cov = false;
  std::string out;
};

int cmd_fuse(const FuseArgs& args, const AppConfig& cfg) {
  const ImuSequence imu = load_imu_checked(args.imu);
  if (!fs::exists(args.gps)) throw InputError(args.gps + ": no such file");
  const GpsSequence gps = load_gps_csv(args.gps);

  const CorrectionModel correction = parse_correction(args.correction, imu);
  UncertaintySpec unc = parse_uncertainty(args.uncertainty, imu);
  if (!unc.provided) unc.model = ConstantDiag{default_fixed_noise()};
  const Vec3 gravity = gravity_vector(args.gravity);

  std::optional<NavState> x0;
  if (!args.init_gt.empty()) {
    const Trajectory gt = load_gt_checked(args.init_gt);
    std::vector<NavState> probe(1);
    probe[0].t = gps.epochs.front().t;
    const AlignedTrajectories aligned = time_align(probe, gt.states);
    if (aligned.size() == 1) {
      x0 = aligned.gt[0];
    }
  }

  KeyframeWindows windows;
  PoseGraph graph =
      keyframe_graph(imu, correction, unc.model, gps, gravity, x0, &windows);

  auto [solved, report] = solve(graph, cfg.solve);
  if (args.reseed_cov) {
    reseed_factor_covariances(solved, windows);
    auto [resolved, report2] = solve(solved, cfg.solve);
    solved = std::move(resolved);
    report = report2;
  }

  require_out_dir(args.out);
  save_estimate_csv((fs::path(args.out) / "fused.csv").string(), solved.nodes);

  json jr;
  jr["iterations"] = report.iterations;
  jr["initial_cost"] = report.initial_cost;
  jr["final_cost"] = report.final_cost;
  jr["converged"] = report.converged;
  jr["lambda_trace"] = report.lambda_trace;
  jr["nodes"] = solved.nodes.size();
  jr["imu_factors"] = solved.imu_factors.size();
  jr["gps_factors"] = solved.gps_factors.size();
  std::ofstream rfile((fs::path(args.out) / "solve_report.json").string());
  rfile << jr.dump(2) << "\n";
  std::cout << jr.dump(2) << "\n";
  return report.converged ? 0 : 1;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string est;
  std::string gt;
  double interval = 1.0;
  std::string metrics = "roe,rpe,rrmse,prmse,ate";
  std::string out;
};

int cmd_evaluate(const EvaluateArgs& args, const AppConfig& cfg) {
  if (!fs::exists(args.est)) throw InputError(args.est + ": no such file");
  const std::vector<NavState> est = load_estimate_csv(args.est);
  const Trajectory gt = load_gt_checked(args.gt);

  std::vector<NavState> gt_abs = gt_absolute(gt);
  std::vector<std::array<double, 2>> masks = cfg.masks;
  const double gt0 = double(gt.t0_ns) * 1e-9;
  for (auto& m : masks) {
    m[0] += gt0;
    m[1] += gt0;
  }
  const AlignedTrajectories aligned = time_align(est, gt_abs, masks);
  if (aligned.size() < 2) {
    throw InputError("est and gt do not overlap in time");
  }

  json out;
  std::stringstream names(args.metrics);
  std::string name;
  while (std::getline(names, name, ',')) {
    json entry;
    if (name == "roe" || name == "rrmse") {
      const auto errs = rotation_interval_errors(aligned, args.interval);
      entry["mean"] = detail::mean(errs) * kRadToDeg;
      entry["rmse"] = detail::rms(errs) * kRadToDeg;
      entry["count"] = errs.size();
      entry["interval_s"] = args.interval;
    } else if (name == "rpe" || name == "prmse") {
      const auto errs = displacement_interval_errors(aligned, args.interval);
      entry["mean"] = detail::mean(errs);
      entry["rmse"] = detail::rms(errs);
      entry["count"] = errs.size();
      entry["interval_s"] = args.interval;
    } else if (name == "ate") {
      std::vector<double> errs(aligned.size());
      for (std::size_t k = 0; k < aligned.size(); ++k) {
        errs[k] = (aligned.est[k].p - aligned.gt[k].p).norm();
      }
      entry["mean"] = detail::mean(errs);
      entry["rmse"] = detail::rms(errs);
      entry["count"] = errs.size();
      entry["interval_s"] = 0.0;
    } else {
      throw InputError("unknown metric '" + name + "'");
    }
    out[name] = entry;
  }

  std::cout << out.dump(2) << "\n";
  if (!args.out.empty()) {
    std::ofstream f(args.out);
    f << out.dump(2) << "\n";
  }
  return 0;
}

// ------------------------------------------------------------------- bench

struct BenchArgs {
  std::string frames = "1,10,100,1000";
  int repeat = 200;
  unsigned seed = 7;
  std::string out;
};

ImuSequence bench_stream(std::size_t n, unsigned seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  ImuSequence seq;
  seq.samples.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    seq.samples[k] = {k * 0.005, 0.5 * Vec3(d(g), d(g), d(g)),
                      Vec3(d(g), d(g), 9.0 + d(g))};
  }
  return seq;
}

int cmd_bench(const BenchArgs& args) {
  std::vector<std::size_t> lengths;
  {
    std::stringstream ss(args.frames);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      long v = 0;
      try {
        v = std::stol(tok);
      } catch (const std::exception&) {
        throw InputError("--frames: malformed entry '" + tok + "'");
      }
      if (v < 1) throw InputError("--frames entries must be >= 1");
      lengths.push_back(std::size_t(v));
    }
  }
  if (args.repeat < 1) throw InputError("--repeat must be >= 1");

  const std::vector<NoiseDiag> eta{default_fixed_noise()};
  struct Row {
    std::size_t n;
    std::string group;
    double mean_s;
    double std_s;
  };
  std::vector<Row> rows;

  auto time_group = [&](std::size_t n, const std::string& group, auto&& fn) {
    const ImuSequence seq = bench_stream(n, args.seed);
    std::vector<double> times(args.repeat);
    for (int r = 0; r < args.repeat; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      fn(seq);
      const auto t1 = std::chrono::steady_clock::now();
      times[r] = std::chrono::duration<double>(t1 - t0).count();
    }
    double mean = 0.0;
    for (double t : times) mean += t;
    mean /= double(times.size());
    double var = 0.0;
    for (double t : times) var += (t - mean) * (t - mean);
    const double std_s =
        times.size() > 1 ? std::sqrt(var / double(times.size() - 1)) : 0.0;
    rows.push_back({n, group, mean, std_s});
  };

  volatile double sink = 0.0;
  for (std::size_t n : lengths) {
    time_group(n, "batched_cov", [&](const ImuSequence& s) {
      const auto inc = integrate_increments(s);
      const auto cov = propagate_batched(inc, s, eta);
      sink = sink + cov.back()(0, 0);
    });
    time_group(n, "batched_nocov", [&](const ImuSequence& s) {
      const auto inc = integrate_increments(s);
      sink = sink + inc.back().dp.x();
    });
    time_group(n, "iterative_cov", [&](const ImuSequence& s) {
      const auto inc = integrate_increments_iterative(s);
      const auto cov = propagate_iterative(inc, s, eta);
      sink = sink + cov.back()(0, 0);
    });
    time_group(n, "iterative_nocov", [&](const ImuSequence& s) {
      const auto inc = integrate_increments_iterative(s);
      sink = sink + inc.back().dp.x();
    });
  }

  std::printf("threads: %u (iterative baseline is single-threaded by nature)\n",
              std::thread::hardware_concurrency());
  std::printf("%8s  %-16s  %12s  %12s\n", "frames", "group", "mean_s", "std_s");
  for (const auto& r : rows) {
    std::printf("%8zu  %-16s  %12.6f  %12.6f\n", r.n, r.group.c_str(), r.mean_s,
                r.std_s);
  }
  double batched_cov_1000 = 0.0, iterative_cov_1000 = 0.0;
  for (const auto& r : rows) {
    if (r.n == 1000 && r.group == "batched_cov") batched_cov_1000 = r.mean_s;
    if (r.n == 1000 && r.group == "iterative_cov") iterative_cov_1000 = r.mean_s;
  }
  if (batched_cov_1000 > 0.0 && iterative_cov_1000 > 0.0) {
    std::printf("speedup iterative_cov/batched_cov at 1000 frames: %.3f\n",
                iterative_cov_1000 / batched_cov_1000);
  }

  if (!args.out.empty()) {
    require_out_dir(args.out);
    std::ofstream f((fs::path(args.out) / "bench.csv").string());
    f << "length,group,mean_s,std_s\n";
    for (const auto& r : rows) {
      f << r.n << ',' << r.group << ',' << csv::fmt(r.mean_s) << ','
        << csv::fmt(r.std_s) << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"manifold IMU preintegration, covariance propagation and "
               "IMU-GPS fusion toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "TOML config file");

  SimulateArgs sim_args;
  auto* sim_cmd = app.add_subcommand("simulate", "synthesize imu/gt/gps files");
  sim_cmd->add_option("--traj", sim_args.traj, "rest|line|circle|figure8");
  sim_cmd->add_option("--duration", sim_args.duration, "seconds");
  sim_cmd->add_option("--rate", sim_args.rate, "imu rate Hz");
  sim_cmd->add_option("--gyro-bias", sim_args.gyro_bias,
                      "rad/s (x,y,z or scalar)");
  sim_cmd->add_option("--acc-bias", sim_args.acc_bias, "m/s^2");
  sim_cmd->add_option("--gyro-std", sim_args.gyro_std, "rad/s per sample");
  sim_cmd->add_option("--acc-std", sim_args.acc_std, "m/s^2 per sample");
  sim_cmd->add_option("--gps-rate", sim_args.gps_rate, "Hz");
  sim_cmd->add_option("--gps-sigma", sim_args.gps_sigma, "m");
  sim_cmd->add_option("--gravity", sim_args.gravity, "m/s^2 magnitude");
  sim_cmd->add_option("--radius", sim_args.radius, "m");
  sim_cmd->add_option("--omega", sim_args.omega, "rad/s");
  sim_cmd->add_option("--seed", sim_args.seed, "rng seed");
  sim_cmd->add_option("--out", sim_args.out, "output directory")->required();

  IntegrateArgs int_args;
  auto* int_cmd = app.add_subcommand("integrate", "preintegrate an imu file");
  int_cmd->add_option("--imu", int_args.imu, "imu csv")->required();
  int_cmd->add_option("--correction", int_args.correction, "correction csv");
  int_cmd->add_option("--uncertainty", int_args.uncertainty,
                      "correction csv or fixed:GYRO_STD,ACC_STD");
  int_cmd->add_option("--init-gt", int_args.init_gt,
                      "ground-truth csv for the initial state");
  int_cmd->add_option("--gravity", int_args.gravity, "m/s^2 magnitude");
  int_cmd->add_option("--cov", int_args.cov, "batched|iterative|off");
  int_cmd->add_option("--out", int_args.out, "output directory")->required();

  CalibrateArgs cal_args;
  auto* cal_cmd =
      app.add_subcommand("calibrate", "fit a constant bias on training data");
  cal_cmd->add_option("--train", cal_args.train,
                      "directory with imu.csv and gt.csv")
      ->required();
  cal_cmd->add_option("--for-imu", cal_args.for_imu,
                      "imu csv the correction file should align with");
  cal_cmd->add_option("--seg-length", cal_args.seg_length, "frames");
  cal_cmd->add_option("--seg-stride", cal_args.seg_stride, "frames");
  cal_cmd->add_option("--gravity", cal_args.gravity, "m/s^2 magnitude");
  cal_cmd->add_option("--out", cal_args.out, "output directory")->required();

  FuseArgs fuse_args;
  auto* fuse_cmd =
      app.add_subcommand("fuse", "imu-gps pose graph optimization");
  fuse_cmd->add_option("--imu", fuse_args.imu, "imu csv")->required();
  fuse_cmd->add_option("--gps", fuse_args.gps, "gps csv")->required();
  fuse_cmd->add_option("--correction", fuse_args.correction, "correction csv");
  fuse_cmd->add_option("--uncertainty", fuse_args.uncertainty,
                       "correction csv or fixed:GYRO_STD,ACC_STD");
  fuse_cmd->add_option("--init-gt", fuse_args.init_gt,
                       "ground-truth csv for the initial node");
  fuse_cmd->add_option("--gravity", fuse_args.gravity, "m/s^2 magnitude");
  fuse_cmd->add_flag("--reseed-cov", fuse_args.reseed_cov,
                     "re-seed factor covariances from solved marginals");
  fuse_cmd->add_option("--out", fuse_args.out, "output directory")->required();

  EvaluateArgs eval_args;
  auto* eval_cmd = app.add_subcommand("evaluate", "trajectory metrics");
  eval_cmd->add_option("--est", eval_args.est, "estimate csv")->required();
  eval_cmd->add_option("--gt", eval_args.gt, "ground-truth csv")->required();
  eval_cmd->add_option("--interval", eval_args.interval, "seconds");
  eval_cmd->add_option("--metrics", eval_args.metrics,
                       "comma list of roe,rpe,rrmse,prmse,ate");
  eval_cmd->add_option("--out", eval_args.out, "metrics json path");

  BenchArgs bench_args;
  auto* bench_cmd =
      app.add_subcommand("bench", "time batched vs iterative paths");
  bench_cmd->add_option("--frames", bench_args.frames, "comma list of lengths");
  bench_cmd->add_option("--repeat", bench_args.repeat, "repetitions");
  bench_cmd->add_option("--seed", bench_args.seed, "rng seed");
  bench_cmd->add_option("--out", bench_args.out, "plot-data directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    AppConfig cfg;
    if (!config_path.empty()) {
      cfg = load_app_config(config_path);
    }
    if (sim_cmd->parsed()) return cmd_simulate(sim_args);
    if (int_cmd->parsed()) return cmd_integrate(int_args);
    if (cal_cmd->parsed()) return cmd_calibrate(cal_args, cfg);
    if (fuse_cmd->parsed()) return cmd_fuse(fuse_args, cfg);
    if (eval_cmd->parsed()) return cmd_evaluate(eval_args, cfg);
    if (bench_cmd->parsed()) return cmd_bench(bench_args);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const SolveFailure& e) {
    std::cerr << "solver failure: " << e.what() << " (cost "
              << e.report.final_cost << " after " << e.report.iterations
              << " iterations)\n";
    return 1;
  } catch (const CalibrationDiverged& e) {
    std::cerr << "calibration diverged: " << e.what() << "\n";
    return 1;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
