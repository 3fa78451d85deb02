#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "tuma/codebooks.hpp"
#include "tuma/rng.hpp"
#include "tuma/types.hpp"

namespace tuma {

inline double snr_from_db(double snr_db) { return std::pow(10.0, snr_db / 10.0); }

struct ReceivedSignal {
  Eigen::VectorXd y;
  double power = 1.0;  // P, linear
  int n = 0;

  /// sqrt(n P), the amplitude every codeword is sent with.
  double gain() const { return std::sqrt(static_cast<double>(n) * power); }
};

enum class NoiseMode { gaussian, noiseless };

/// y = sqrt(nP) C k + z with z ~ N(0, I_n). Noiseless mode sets z = 0.
inline ReceivedSignal transmit(const CommCodebook& cb, const MultiplicityVector& k, double power,
                               Rng& rng, NoiseMode noise = NoiseMode::gaussian) {
  if (static_cast<int>(k.size()) != cb.size())
    throw ConfigError("multiplicity vector length must equal codebook size");
  if (!(power > 0.0) || !std::isfinite(power)) throw ConfigError("power must be positive and finite");
  Eigen::VectorXd kv(cb.size());
  for (int i = 0; i < cb.size(); ++i) kv[i] = k[static_cast<std::size_t>(i)];
  ReceivedSignal out;
  out.n = cb.n();
  out.power = power;
  out.y = out.gain() * cb.apply(kv);
  if (noise == NoiseMode::gaussian)
    for (int j = 0; j < out.n; ++j) out.y[j] += rng.normal();
  return out;
}

}  // namespace tuma
