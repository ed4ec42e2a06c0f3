#pragma once

#include <cmath>
#include <stdexcept>
#include <variant>
#include <vector>

#include "imukit/covariance.hpp"
#include "imukit/types.hpp"

namespace imukit {

/// Additive per-frame corrections in the body frame. A plugged-in model
/// supplies them; the tabulated variant is the seam for any externally
/// produced correction stream.
struct IdentityCorrection {};

struct ConstantBias {
  Vec3 gyro = Vec3::Zero();  // rad/s
  Vec3 acc = Vec3::Zero();   // m/s^2
};

struct TabulatedCorrection {
  std::vector<Vec3> gyro;  // sigma_gyro per frame
  std::vector<Vec3> acc;   // sigma_acc per frame
};

using CorrectionModel =
    std::variant<IdentityCorrection, ConstantBias, TabulatedCorrection>;

struct ConstantDiag {
  NoiseDiag eta;
};

struct TabulatedUncertainty {
  std::vector<NoiseDiag> eta;
};

using UncertaintyModel = std::variant<ConstantDiag, TabulatedUncertainty>;

/// Variance diagonal from per-axis standard deviations. Continuous-time
/// densities are converted to per-frame variance by dividing by dt.
inline NoiseDiag noise_from_stds(const Vec3& gyro_std, const Vec3& acc_std,
                                 bool continuous = false, double dt = 1.0) {
  NoiseDiag eta;
  eta.gyro = gyro_std.cwiseProduct(gyro_std);
  eta.acc = acc_std.cwiseProduct(acc_std);
  if (continuous) {
    if (!(dt > 0.0)) {
      throw std::invalid_argument("noise_from_stds: dt must be positive");
    }
    eta.gyro /= dt;
    eta.acc /= dt;
  }
  return eta;
}

/// Applies the additive correction: w~ = w + sigma_gyro, a~ = a + sigma_acc.
/// ConstantBias applies sigma = -b uniformly.
inline ImuSequence apply_correction(const ImuSequence& seq,
                                    const CorrectionModel& model) {
  ImuSequence out = seq;
  if (std::holds_alternative<IdentityCorrection>(model)) {
    return out;
  }
  if (const auto* bias = std::get_if<ConstantBias>(&model)) {
    for (auto& s : out.samples) {
      s.w -= bias->gyro;
      s.a -= bias->acc;
    }
    return out;
  }
  const auto& tab = std::get<TabulatedCorrection>(model);
  if (tab.gyro.size() != seq.size() || tab.acc.size() != seq.size()) {
    throw std::invalid_argument(
        "apply_correction: tabulated length does not match stream");
  }
  for (std::size_t k = 0; k < seq.size(); ++k) {
    out.samples[k].w += tab.gyro[k];
    out.samples[k].a += tab.acc[k];
  }
  return out;
}

/// Per-frame noise variances for a stream; ConstantDiag broadcasts.
inline std::vector<NoiseDiag> uncertainty_of(const ImuSequence& seq,
                                             const UncertaintyModel& model) {
  if (const auto* c = std::get_if<ConstantDiag>(&model)) {
    if ((c->eta.gyro.array() < 0.0).any() || (c->eta.acc.array() < 0.0).any()) {
      throw std::invalid_argument("uncertainty_of: negative variance");
    }
    return std::vector<NoiseDiag>(seq.size(), c->eta);
  }
  const auto& tab = std::get<TabulatedUncertainty>(model);
  if (tab.eta.size() != seq.size()) {
    throw std::invalid_argument(
        "uncertainty_of: tabulated length does not match stream");
  }
  for (const auto& e : tab.eta) {
    if ((e.gyro.array() < 0.0).any() || (e.acc.array() < 0.0).any()) {
      throw std::invalid_argument("uncertainty_of: negative variance");
    }
  }
  return tab.eta;
}

}  // namespace imukit
