#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

#include <Eigen/Core>

#include "imukit/so3.hpp"

namespace imukit {

using Mat9 = Eigen::Matrix<double, 9, 9>;

struct ScanStats {
  std::size_t layers = 0;    // layers that performed at least one update
  std::size_t updates = 0;   // total element updates
};

/// Number of update layers an N-element scan performs: ceil(log2(N)).
inline std::size_t scan_layer_count(std::size_t n) {
  std::size_t layers = 0;
  for (std::size_t k = 1; k < n; k <<= 1) ++layers;
  return layers;
}

namespace detail {

// One scan layer with stride k: xs[i] = op(xs[i-k], xs[i]) for i in [k, n).
// Descending order reads each xs[i-k] before it is overwritten, so the layer
// sees only pre-layer values in place.
template <typename T, typename Op>
void scan_layer_sequential(std::vector<T>& xs, std::size_t k, Op&& op) {
  for (std::size_t i = xs.size(); i-- > k;) {
    xs[i] = op(xs[i - k], xs[i]);
  }
}

// Chunked variant for wide layers: snapshot the operands first, then update.
// Chunks are disjoint, so the result is identical to the sequential order.
template <typename T, typename Op>
void scan_layer_chunked(std::vector<T>& xs, std::vector<T>& snapshot,
                        std::size_t k, Op&& op, unsigned threads) {
  const std::size_t n = xs.size();
  snapshot.assign(xs.begin(), xs.end() - static_cast<std::ptrdiff_t>(k));
  auto work = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      xs[i] = op(snapshot[i - k], xs[i]);
    }
  };
  const std::size_t span = n - k;
  const std::size_t chunk = (span + threads - 1) / threads;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t lo = k; lo < n; lo += chunk) {
    pool.emplace_back(work, lo, std::min(lo + chunk, n));
  }
  for (auto& t : pool) t.join();
}

}  // namespace detail

/// In-place inclusive scan over an associative op, log-depth layering:
/// layer i combines every element with the one 2^i places earlier, so
/// xs[j] becomes xs[0] op xs[1] op ... op xs[j]. op(a, b) must compose a
/// (earlier) with b (later). Each layer's updates are mutually independent;
/// wide layers are split across threads when more than one core is present.
/// Output is deterministic either way.
template <typename T, typename Op>
void inclusive_scan_inplace(std::vector<T>& xs, Op op,
                            ScanStats* stats = nullptr) {
  static constexpr std::size_t kParallelThreshold = 256;
  const std::size_t n = xs.size();
  const unsigned threads = std::thread::hardware_concurrency();
  std::vector<T> snapshot;
  for (std::size_t k = 1; k < n; k <<= 1) {
    if (threads > 1 && n - k >= kParallelThreshold) {
      detail::scan_layer_chunked(xs, snapshot, k, op, threads);
    } else {
      detail::scan_layer_sequential(xs, k, op);
    }
    if (stats) {
      ++stats->layers;
      stats->updates += n - k;
    }
  }
}

template <typename T, typename Op>
std::vector<T> inclusive_scan(std::vector<T> xs, Op op,
                              ScanStats* stats = nullptr) {
  inclusive_scan_inplace(xs, op, stats);
  return xs;
}

/// Cumulative SO(3) product: out[k] = seq[0] * seq[1] * ... * seq[k].
inline std::vector<Rotation> cumprod_so3(std::vector<Rotation> seq) {
  inclusive_scan_inplace(
      seq, [](const Rotation& a, const Rotation& b) { return a * b; });
  return seq;
}

inline std::vector<Vec3> cumsum_vec3(std::vector<Vec3> seq) {
  inclusive_scan_inplace(seq,
                         [](const Vec3& a, const Vec3& b) { return a + b; });
  return seq;
}

enum class MatmulOrder {
  kPrefix,  // out[k] = seq[0] * seq[1] * ... * seq[k]
  kSuffix,  // out[k] = seq[n-1] * seq[n-2] * ... * seq[k]
};

/// Cumulative 9x9 matrix product. Suffix order stacks the transition
/// products needed by the batched covariance form, where each noise term
/// is pre-multiplied by everything after it.
inline std::vector<Mat9> cummatmul9(std::vector<Mat9> seq,
                                    MatmulOrder order = MatmulOrder::kPrefix) {
  auto mul = [](const Mat9& a, const Mat9& b) -> Mat9 { return a * b; };
  if (order == MatmulOrder::kPrefix) {
    inclusive_scan_inplace(seq, mul);
    return seq;
  }
  std::reverse(seq.begin(), seq.end());
  inclusive_scan_inplace(seq, mul);
  std::reverse(seq.begin(), seq.end());
  return seq;
}

}  // namespace imukit
