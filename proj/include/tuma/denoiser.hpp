#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "tuma/types.hpp"

namespace tuma {

/// Marginal PMF of one multiplicity K_i over {0, ..., Ka}. Under uniform
/// target placement, a uniformity-preserving quantizer and uniform target
/// selection, every K_i has the same law:
///
///   p(k) = sum_{m=0}^{Ma} Bin(m; Ma, 1/M) Bin(k; Ka, m/Ma)
///
/// where m is the number of targets falling into cell i.
class CountPrior {
 public:
  /// Arbitrary PMF on {0, ..., pmf.size() - 1}. Normalized on construction.
  explicit CountPrior(std::vector<double> pmf) : pmf_(std::move(pmf)) {
    if (pmf_.empty()) throw ConfigError("prior pmf must be non-empty");
    double sum = 0.0;
    for (double p : pmf_) {
      if (!(p >= 0.0) || !std::isfinite(p)) throw ConfigError("prior pmf entries must be finite and >= 0");
      sum += p;
    }
    if (!(sum > 0.0)) throw ConfigError("prior pmf has zero mass");
    raw_mass_ = sum;
    for (double& p : pmf_) p /= sum;
    finalize();
  }

  static CountPrior uniform_model(int ka, int ma, int codebook_size) {
    if (ka < 1 || ma < 1 || codebook_size < 2) throw ConfigError("prior needs Ka, Ma >= 1 and M >= 2");
    const double hit = 1.0 / codebook_size;
    std::vector<double> pmf(static_cast<std::size_t>(ka) + 1, 0.0);
    for (int m = 0; m <= ma; ++m) {
      const double log_cells = log_binomial(m, ma, hit);
      if (log_cells == -inf) continue;
      if (m == 0) {
        pmf[0] += std::exp(log_cells);
        continue;
      }
      const double share = static_cast<double>(m) / ma;
      for (int k = 0; k <= ka; ++k) {
        const double lt = log_cells + log_binomial(k, ka, share);
        if (lt > -745.0) pmf[static_cast<std::size_t>(k)] += std::exp(lt);
      }
    }
    CountPrior prior(std::move(pmf));
    prior.ka_ = ka;
    prior.ma_ = ma;
    prior.codebook_size_ = codebook_size;
    return prior;
  }

  const std::vector<double>& pmf() const noexcept { return pmf_; }
  const std::vector<double>& log_pmf() const noexcept { return log_pmf_; }
  const std::vector<int>& support() const noexcept { return support_; }
  int max_count() const noexcept { return static_cast<int>(pmf_.size()) - 1; }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept { return variance_; }
  /// Total mass of the PMF as given, before normalization.
  double raw_mass() const noexcept { return raw_mass_; }

  // Parameters of the uniform model, zero for an arbitrary PMF.
  int ka() const noexcept { return ka_; }
  int ma() const noexcept { return ma_; }
  int codebook_size() const noexcept { return codebook_size_; }

  /// log Bin(k; trials, p), -inf outside the support.
  static double log_binomial(int k, int trials, double p) {
    if (k < 0 || k > trials) return -inf;
    if (p <= 0.0) return k == 0 ? 0.0 : -inf;
    if (p >= 1.0) return k == trials ? 0.0 : -inf;
    const double log_choose =
        std::lgamma(trials + 1.0) - std::lgamma(k + 1.0) - std::lgamma(trials - k + 1.0);
    return log_choose + k * std::log(p) + (trials - k) * std::log1p(-p);
  }

 private:
  static constexpr double inf = std::numeric_limits<double>::infinity();

  void finalize() {
    log_pmf_.resize(pmf_.size());
    support_.clear();
    mean_ = 0.0;
    for (std::size_t k = 0; k < pmf_.size(); ++k) {
      log_pmf_[k] = pmf_[k] > 0.0 ? std::log(pmf_[k]) : -inf;
      if (pmf_[k] > 0.0) support_.push_back(static_cast<int>(k));
      mean_ += static_cast<double>(k) * pmf_[k];
    }
    variance_ = 0.0;
    for (std::size_t k = 0; k < pmf_.size(); ++k) {
      const double d = static_cast<double>(k) - mean_;
      variance_ += d * d * pmf_[k];
    }
  }

  std::vector<double> pmf_;
  std::vector<double> log_pmf_;
  std::vector<int> support_;
  double mean_ = 0.0;
  double variance_ = 0.0;
  double raw_mass_ = 1.0;
  int ka_ = 0;
  int ma_ = 0;
  int codebook_size_ = 0;
};

inline CountPrior multiplicity_prior(int ka, int ma, int codebook_size) {
  return CountPrior::uniform_model(ka, ma, codebook_size);
}

/// Effective scalar observation r = K + N(0, xi).
struct ScalarChannel {
  double r = 0.0;
  double xi = 1.0;
};

struct PosteriorMoments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Mean and variance of K given r = K + N(0, xi), K ~ prior. The tilted
/// weights are evaluated in the log domain with the maximum exponent
/// subtracted, so tiny xi does not underflow.
inline PosteriorMoments posterior_moments(double r, double xi, const CountPrior& prior) {
  if (!(xi > 0.0) || !std::isfinite(xi) || !std::isfinite(r))
    throw DomainError("posterior moments need finite r and xi > 0");
  const auto& support = prior.support();
  const auto& log_pmf = prior.log_pmf();
  const double inv_two_xi = 0.5 / xi;

  double top = -std::numeric_limits<double>::infinity();
  int mode = 0;
  for (int k : support) {
    const double d = r - k;
    const double e = log_pmf[static_cast<std::size_t>(k)] - d * d * inv_two_xi;
    if (e > top) {
      top = e;
      mode = k;
    }
  }

  double weight_sum = 0.0;
  double first = 0.0;
  double second = 0.0;
  // Moments about the posterior mode; the shift is small whenever the
  // variance is, so second - shift^2 does not cancel catastrophically.
  const double pivot = mode;
  for (int k : support) {
    const double d = r - k;
    const double e = log_pmf[static_cast<std::size_t>(k)] - d * d * inv_two_xi - top;
    if (e < -745.0) continue;
    const double w = std::exp(e);
    const double off = k - pivot;
    weight_sum += w;
    first += w * off;
    second += w * off * off;
  }
  const double shift = first / weight_sum;
  PosteriorMoments out;
  out.mean = pivot + shift;
  out.variance = std::max(0.0, second / weight_sum - shift * shift);
  return out;
}

inline double posterior_mean(double r, double xi, const CountPrior& prior) {
  return posterior_moments(r, xi, prior).mean;
}

inline double posterior_var(double r, double xi, const CountPrior& prior) {
  return posterior_moments(r, xi, prior).variance;
}

/// d/dr of the posterior mean; for a Gaussian likelihood this is var / xi.
inline double posterior_mean_deriv(double r, double xi, const CountPrior& prior) {
  return posterior_moments(r, xi, prior).variance / xi;
}

}  // namespace tuma
