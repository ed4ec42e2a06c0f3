#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "imukit/correction.hpp"
#include "imukit/types.hpp"

namespace imukit {

/// World-frame reference trajectory with the absolute epoch of its first row.
struct Trajectory {
  std::vector<NavState> states;
  std::int64_t t0_ns = 0;

  std::size_t size() const { return states.size(); }
  bool empty() const { return states.empty(); }
};

struct GpsEpoch {
  double t = 0.0;
  Vec3 p = Vec3::Zero();
  double sigma = 0.0;  // per-axis position std (m)
};

struct GpsSequence {
  std::vector<GpsEpoch> epochs;
};

/// Per-frame correction and uncertainty table, 1:1 with an IMU stream.
struct CorrectionTable {
  std::vector<double> t;
  TabulatedCorrection correction;
  std::vector<NoiseDiag> eta;

  std::size_t size() const { return t.size(); }
};

namespace csv {

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r' && c != ' ' && c != '\t') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

[[noreturn]] inline void fail_row(const std::string& path, std::size_t row,
                                  const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(row) + ": " + what);
}

inline double parse_double(const std::string& s, const std::string& path,
                           std::size_t row) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    fail_row(path, row, "malformed number '" + s + "'");
  }
  return v;
}

inline std::int64_t parse_int64(const std::string& s, const std::string& path,
                                std::size_t row) {
  std::int64_t v = 0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    fail_row(path, row, "malformed integer timestamp '" + s + "'");
  }
  return v;
}

inline bool looks_like_header(const std::string& line) {
  for (char c : line) {
    if (c == ',' || c == '\r' || c == ' ') continue;
    return !(std::isdigit(static_cast<unsigned char>(c)) || c == '-' ||
             c == '+' || c == '.');
  }
  return false;
}

/// Rows of a CSV file with the declared field count; optional header line
/// skipped. Row numbers reported in errors are 1-based file lines.
inline std::vector<std::pair<std::size_t, std::vector<std::string>>> read_rows(
    const std::string& path, std::size_t min_fields, std::size_t max_fields) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error(path + ": cannot open");
  }
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    if (lineno == 1 && looks_like_header(line)) continue;
    auto fields = split_line(line);
    if (fields.size() < min_fields || fields.size() > max_fields) {
      fail_row(path, lineno,
               "expected " + std::to_string(min_fields) + ".." +
                   std::to_string(max_fields) + " fields, got " +
                   std::to_string(fields.size()));
    }
    rows.emplace_back(lineno, std::move(fields));
  }
  return rows;
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace csv

/// EuRoC-style IMU file: `timestamp_ns, wx, wy, wz, ax, ay, az`.
/// Timestamps become seconds relative to the first sample; the absolute
/// origin is kept on the sequence.
inline ImuSequence load_imu_csv(const std::string& path) {
  const auto rows = csv::read_rows(path, 7, 7);
  if (rows.empty()) {
    throw std::runtime_error(path + ": no data rows");
  }
  ImuSequence seq;
  seq.samples.reserve(rows.size());
  std::int64_t prev_ns = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& [lineno, f] = rows[i];
    const std::int64_t ns = csv::parse_int64(f[0], path, lineno);
    if (i == 0) {
      seq.t0_ns = ns;
    } else if (ns <= prev_ns) {
      csv::fail_row(path, lineno, "non-monotone timestamp");
    }
    prev_ns = ns;
    ImuSample s;
    s.t = double(ns - seq.t0_ns) * 1e-9;
    for (int c = 0; c < 3; ++c) {
      s.w[c] = csv::parse_double(f[1 + c], path, lineno);
      s.a[c] = csv::parse_double(f[4 + c], path, lineno);
    }
    if (!s.w.allFinite() || !s.a.allFinite()) {
      csv::fail_row(path, lineno, "non-finite reading");
    }
    seq.samples.push_back(s);
  }
  return seq;
}

inline void save_imu_csv(const std::string& path, const ImuSequence& seq) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot write");
  out << "timestamp_ns,wx,wy,wz,ax,ay,az\n";
  for (const auto& s : seq.samples) {
    const std::int64_t ns = seq.t0_ns + std::llround(s.t * 1e9);
    out << ns;
    for (int c = 0; c < 3; ++c) out << ',' << csv::fmt(s.w[c]);
    for (int c = 0; c < 3; ++c) out << ',' << csv::fmt(s.a[c]);
    out << '\n';
  }
}

/// Ground-truth file: `timestamp_ns, px, py, pz, qw, qx, qy, qz[, vx, vy, vz]`.
/// Quaternions are normalized on load; missing velocities are filled by
/// central differences of position.
inline Trajectory load_groundtruth_csv(const std::string& path) {
  // extra trailing fields (e.g. bias columns in wider exports) are ignored
  const auto rows = csv::read_rows(path, 8, 32);
  if (rows.empty()) {
    throw std::runtime_error(path + ": no data rows");
  }
  Trajectory traj;
  traj.states.reserve(rows.size());
  std::int64_t prev_ns = 0;
  bool has_velocity = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& [lineno, f] = rows[i];
    if (f.size() != 8 && f.size() < 11) {
      csv::fail_row(path, lineno, "expected 8 or >= 11 fields");
    }
    const std::int64_t ns = csv::parse_int64(f[0], path, lineno);
    if (i == 0) {
      traj.t0_ns = ns;
    } else if (ns <= prev_ns) {
      csv::fail_row(path, lineno, "non-monotone timestamp");
    }
    prev_ns = ns;

    NavState x;
    x.t = double(ns - traj.t0_ns) * 1e-9;
    for (int c = 0; c < 3; ++c) {
      x.p[c] = csv::parse_double(f[1 + c], path, lineno);
    }
    Eigen::Quaterniond q(csv::parse_double(f[4], path, lineno),
                         csv::parse_double(f[5], path, lineno),
                         csv::parse_double(f[6], path, lineno),
                         csv::parse_double(f[7], path, lineno));
    if (std::abs(q.norm() - 1.0) > 1e-3) {
      csv::fail_row(path, lineno, "quaternion norm deviates from 1 by > 1e-3");
    }
    x.r = Rotation(q);
    if (f.size() >= 11) {
      for (int c = 0; c < 3; ++c) {
        x.v[c] = csv::parse_double(f[8 + c], path, lineno);
      }
    } else {
      has_velocity = false;
    }
    traj.states.push_back(x);
  }
  if (!has_velocity && traj.states.size() >= 2) {
    auto& xs = traj.states;
    const std::size_t n = xs.size();
    std::vector<Vec3> v(n);
    v[0] = (xs[1].p - xs[0].p) / (xs[1].t - xs[0].t);
    v[n - 1] = (xs[n - 1].p - xs[n - 2].p) / (xs[n - 1].t - xs[n - 2].t);
    for (std::size_t k = 1; k + 1 < n; ++k) {
      v[k] = (xs[k + 1].p - xs[k - 1].p) / (xs[k + 1].t - xs[k - 1].t);
    }
    for (std::size_t k = 0; k < n; ++k) xs[k].v = v[k];
  }
  return traj;
}

inline void save_groundtruth_csv(const std::string& path,
                                 const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot write");
  out << "timestamp_ns,px,py,pz,qw,qx,qy,qz,vx,vy,vz\n";
  for (const auto& x : traj.states) {
    out << traj.t0_ns + std::llround(x.t * 1e9);
    for (int c = 0; c < 3; ++c) out << ',' << csv::fmt(x.p[c]);
    out << ',' << csv::fmt(x.r.q.w()) << ',' << csv::fmt(x.r.q.x()) << ','
        << csv::fmt(x.r.q.y()) << ',' << csv::fmt(x.r.q.z());
    for (int c = 0; c < 3; ++c) out << ',' << csv::fmt(x.v[c]);
    out << '\n';
  }
}

/// Estimate file: `t,px,py,pz,qw,qx,qy,qz,vx,vy,vz`, t in seconds.
inline std::vector<NavState> load_estimate_csv(const std::string& path) {
  const auto rows = csv::read_rows(path, 11, 11);
  if (rows.empty()) {
    throw std::runtime_error(path + ": no data rows");
  }
  std::vector<NavState> states;
  states.reserve(rows.size());
  double prev_t = -1e300;
  for (const auto& [lineno, f] : rows) {
    NavState x;
    x.t = csv::parse_double(f[0], path, lineno);
    if (x.t <= prev_t) {
      csv::fail_row(path, lineno, "non-monotone timestamp");
    }
    prev_t = x.t;
    for (int c = 0; c < 3; ++c) x.p[c] = csv::parse_double(f[1 + c], path, lineno);
    Eigen::Quaterniond q(csv::parse_double(f[4], path, lineno),
                         csv::parse_double(f[5], path, lineno),
                         csv::parse_double(f[6], path, lineno),
                         csv::parse_double(f[7], path, lineno));
    if (std::abs(q.norm() - 1.0) > 1e-3) {
      csv::fail_row(path, lineno, "quaternion norm deviates from 1 by > 1e-3");
    }
    x.r = Rotation(q);
    for (int c = 0; c < 3; ++c) x.v[c] = csv::parse_double(f[8 + c], path, lineno);
    states.push_back(x);
  }
  return states;
}

inline void save_estimate_csv(const std::string& path,
                              const std::vector<NavState>& states) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot write");
  out << "t,px,py,pz,qw,qx,qy,qz,vx,vy,vz\n";
  for (const auto& x : states) {
    out << csv::fmt(x.t);
    for (int c = 0; c < 3; ++c) out << ',' << csv::fmt(x.p[c]);
    out << ',' << csv::fmt(x.r.q.w()) << ',' << csv::fmt(x.r.q.x()) << ','
        << csv::fmt(x.r.q.y()) << ',' << csv::fmt(x.r.q.z());
    for (int c = 0; c < 3; ++c) out << ',' << csv::fmt(x.v[c]);
    out << '\n';
  }
}

/// GPS file: `t, px, py, pz, sigma` with t in seconds.
inline GpsSequence load_gps_csv(const std::string& path) {
  const auto rows = csv::read_rows(path, 5, 5);
  GpsSequence gps;
  gps.epochs.reserve(rows.size());
  double prev_t = -1e300;
  for (const auto& [lineno, f] : rows) {
    GpsEpoch e;
    e.t = csv::parse_double(f[0], path, lineno);
    if (e.t <= prev_t) {
      csv::fail_row(path, lineno, "non-monotone timestamp");
    }
    prev_t = e.t;
    for (int c = 0; c < 3; ++c) {
      e.p[c] = csv::parse_double(f[1 + c], path, lineno);
    }
    e.sigma = csv::parse_double(f[4], path, lineno);
    if (e.sigma < 0.0) {
      csv::fail_row(path, lineno, "negative sigma");
    }
    gps.epochs.push_back(e);
  }
  return gps;
}

inline void save_gps_csv(const std::string& path, const GpsSequence& gps) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot write");
  out << "t,px,py,pz,sigma\n";
  for (const auto& e : gps.epochs) {
    out << csv::fmt(e.t);
    for (int c = 0; c < 3; ++c) out << ',' << csv::fmt(e.p[c]);
    out << ',' << csv::fmt(e.sigma) << '\n';
  }
}

/// Correction/uncertainty file:
/// `t,sg_x,sg_y,sg_z,sa_x,sa_y,sa_z,eg_x,eg_y,eg_z,ea_x,ea_y,ea_z`
/// (sigma in rad/s and m/s^2, eta in variance units), rows 1:1 with the
/// IMU stream it corrects.
inline CorrectionTable load_correction_csv(const std::string& path) {
  const auto rows = csv::read_rows(path, 13, 13);
  CorrectionTable tab;
  for (const auto& [lineno, f] : rows) {
    tab.t.push_back(csv::parse_double(f[0], path, lineno));
    Vec3 sg, sa;
    NoiseDiag eta;
    for (int c = 0; c < 3; ++c) {
      sg[c] = csv::parse_double(f[1 + c], path, lineno);
      sa[c] = csv::parse_double(f[4 + c], path, lineno);
      eta.gyro[c] = csv::parse_double(f[7 + c], path, lineno);
      eta.acc[c] = csv::parse_double(f[10 + c], path, lineno);
    }
    tab.correction.gyro.push_back(sg);
    tab.correction.acc.push_back(sa);
    tab.eta.push_back(eta);
  }
  return tab;
}

inline void save_correction_csv(const std::string& path,
                                const CorrectionTable& tab) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot write");
  out << "t,sg_x,sg_y,sg_z,sa_x,sa_y,sa_z,eg_x,eg_y,eg_z,ea_x,ea_y,ea_z\n";
  for (std::size_t k = 0; k < tab.size(); ++k) {
    out << csv::fmt(tab.t[k]);
    for (int c = 0; c < 3; ++c) out << ',' << csv::fmt(tab.correction.gyro[k][c]);
    for (int c = 0; c < 3; ++c) out << ',' << csv::fmt(tab.correction.acc[k][c]);
    for (int c = 0; c < 3; ++c) out << ',' << csv::fmt(tab.eta[k].gyro[c]);
    for (int c = 0; c < 3; ++c) out << ',' << csv::fmt(tab.eta[k].acc[c]);
    out << '\n';
  }
}

/// Checks the 1:1 timestamp alignment between a correction table and the
/// IMU stream it is applied to.
inline void check_alignment(const CorrectionTable& tab, const ImuSequence& seq,
                            double tol = 1e-6) {
  if (tab.size() != seq.size()) {
    throw std::invalid_argument("correction table row count " +
                                std::to_string(tab.size()) +
                                " does not match IMU stream size " +
                                std::to_string(seq.size()));
  }
  for (std::size_t k = 0; k < seq.size(); ++k) {
    if (std::abs(tab.t[k] - seq[k].t) > tol) {
      throw std::invalid_argument("correction table timestamp mismatch at row " +
                                  std::to_string(k + 1));
    }
  }
}

/// Drops samples falling inside any [t0, t1] mask window.
template <typename Seq>
Seq apply_masks(const Seq& seq, const std::vector<std::array<double, 2>>& masks);

namespace detail {

inline bool masked(double t, const std::vector<std::array<double, 2>>& masks) {
  for (const auto& m : masks) {
    if (t >= m[0] && t <= m[1]) return true;
  }
  return false;
}

}  // namespace detail

template <>
inline ImuSequence apply_masks(const ImuSequence& seq,
                               const std::vector<std::array<double, 2>>& masks) {
  ImuSequence out;
  out.t0_ns = seq.t0_ns;
  for (const auto& s : seq.samples) {
    if (!detail::masked(s.t, masks)) out.samples.push_back(s);
  }
  return out;
}

template <>
inline Trajectory apply_masks(const Trajectory& traj,
                              const std::vector<std::array<double, 2>>& masks) {
  Trajectory out;
  out.t0_ns = traj.t0_ns;
  for (const auto& x : traj.states) {
    if (!detail::masked(x.t, masks)) out.states.push_back(x);
  }
  return out;
}

}  // namespace imukit
