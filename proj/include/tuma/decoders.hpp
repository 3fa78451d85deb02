#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "tuma/channel.hpp"
#include "tuma/codebooks.hpp"
#include "tuma/denoiser.hpp"
#include "tuma/types.hpp"

namespace tuma {

enum class Algorithm { amp, scalar_amp, ep };

inline std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::amp: return "amp";
    case Algorithm::scalar_amp: return "scalar_amp";
    case Algorithm::ep: return "ep";
  }
  return "?";
}

inline Algorithm parse_algorithm(std::string_view name) {
  if (name == "amp") return Algorithm::amp;
  if (name == "scalar_amp" || name == "scalar-amp" || name == "samp") return Algorithm::scalar_amp;
  if (name == "ep") return Algorithm::ep;
  throw ConfigError("unknown decoder: " + std::string(name));
}

/// What EP does with a site or cavity update whose precision comes out <= 0.
enum class NegativeVariance {
  floor,    // variance := variance_floor
  ceiling,  // variance := variance_ceiling (the update carries no information)
  keep,     // keep the previous value of the site or cavity
};

struct DecoderOptions {
  int max_iters = 10;
  Algorithm algorithm = Algorithm::amp;
  double ep_damping = 0.0;        // weight on the previous cavity, in [0, 1)
  double variance_floor = 1e-12;
  double variance_ceiling = 1e12;
  NegativeVariance ep_negative_variance = NegativeVariance::keep;
  bool early_stop = true;  // stop once the rounded estimate repeats

  void validate() const {
    if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
    if (!(ep_damping >= 0.0 && ep_damping < 1.0)) throw ConfigError("ep_damping must be in [0, 1)");
    if (!(variance_floor > 0.0 && variance_ceiling > variance_floor))
      throw ConfigError("bad variance clamp");
  }
};

struct IterationDiagnostics {
  double noise_var = 0.0;      // effective noise variance (mean over coordinates where per-coordinate)
  double residual_norm = 0.0;  // norm of the residual in the normalized domain
};

struct DecoderReport {
  MultiplicityVector k_hat;
  Eigen::VectorXd k_soft;
  int iterations_run = 0;
  std::vector<IterationDiagnostics> trace;
};

/// A decoder iterate became non-finite. Carries the last finite state.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, DecoderReport last)
      : std::runtime_error(what), last_(std::move(last)) {}
  const DecoderReport& last_report() const noexcept { return last_; }

 private:
  DecoderReport last_;
};

/// Nearest integer (halves away from zero), clamped to [0, max_count].
inline MultiplicityVector round_estimate(const Eigen::VectorXd& k_soft, int max_count) {
  MultiplicityVector out(static_cast<std::size_t>(k_soft.size()));
  for (Eigen::Index i = 0; i < k_soft.size(); ++i) {
    const double r = std::round(k_soft[i]);
    out[static_cast<std::size_t>(i)] = static_cast<int>(std::clamp(r, 0.0, static_cast<double>(max_count)));
  }
  return out;
}

/// Empirical distribution of the decoded messages placed at the quantizer
/// centroids. An all-zero k_hat gives an empty measure.
inline DiscreteMeasure estimated_type(const MultiplicityVector& k_hat, const QuantCodebook& qc) {
  if (static_cast<int>(k_hat.size()) != qc.size()) throw ConfigError("k_hat length must equal M");
  std::vector<long long> counts(k_hat.begin(), k_hat.end());
  return DiscreteMeasure::from_counts(counts, qc.centroids());
}

/// The decoded k_hat, repaired when it is all zero: the entry with the
/// largest soft value is set to 1 so a type can still be formed.
inline MultiplicityVector repaired_estimate(const DecoderReport& report, bool* repaired = nullptr) {
  MultiplicityVector k = report.k_hat;
  const bool empty = total_count(k) == 0 && !k.empty();
  if (empty) {
    Eigen::Index best = 0;
    if (report.k_soft.size() == static_cast<Eigen::Index>(k.size())) report.k_soft.maxCoeff(&best);
    k[static_cast<std::size_t>(best)] = 1;
  }
  if (repaired != nullptr) *repaired = empty;
  return k;
}

inline DiscreteMeasure estimated_type(const DecoderReport& report, const QuantCodebook& qc) {
  return estimated_type(repaired_estimate(report), qc);
}

namespace detail {

inline bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

inline void finish(DecoderReport& report, const Eigen::VectorXd& k_soft, int max_count) {
  report.k_soft = k_soft;
  report.k_hat = round_estimate(k_soft, max_count);
}

inline void check_inputs(const Eigen::VectorXd& y, const CommCodebook& cb, double power,
                         const DecoderOptions& opts) {
  opts.validate();
  if (y.size() != cb.n()) throw ConfigError("received signal length must equal n");
  if (!(power > 0.0) || !std::isfinite(power)) throw ConfigError("power must be positive");
}

[[noreturn]] inline void diverged(std::string_view who, DecoderReport& report,
                                  const Eigen::VectorXd& last_soft, int max_count) {
  finish(report, last_soft, max_count);
  throw DivergenceError(std::string(who) + ": non-finite iterate", report);
}

}  // namespace detail

/// AMP on the model y = sqrt(nP) C k + z.
///
/// The denoiser works on the unit-gain scalar channel, so the effective
/// observation C^T z + sqrt(nP) k_hat is divided by sqrt(nP) and the noise
/// level is ||z||^2 / (n nP). The Onsager coefficient is the mean of
/// d f / d r = g / xi in that normalized domain.
inline DecoderReport amp_decode(const Eigen::VectorXd& y, const CommCodebook& cb, double power,
                                const CountPrior& prior, const DecoderOptions& opts = {}) {
  detail::check_inputs(y, cb, power, opts);
  const int n = cb.n();
  const int m = cb.size();
  const double gain = std::sqrt(n * power);
  const double ratio = static_cast<double>(m) / n;
  const int max_count = prior.max_count();

  Eigen::VectorXd k_hat = Eigen::VectorXd::Constant(m, prior.mean());
  Eigen::VectorXd z = y - gain * cb.apply(k_hat);
  Eigen::VectorXd r(m);

  DecoderReport report;
  MultiplicityVector previous;
  for (int t = 1; t <= opts.max_iters; ++t) {
    const double xi = std::clamp(z.squaredNorm() / (n * gain * gain), opts.variance_floor,
                                 opts.variance_ceiling);
    r = cb.adjoint(z) / gain + k_hat;
    if (!detail::all_finite(r)) detail::diverged("amp", report, k_hat, max_count);

    Eigen::VectorXd next(m);
    double deriv_sum = 0.0;
    for (int i = 0; i < m; ++i) {
      const auto pm = posterior_moments(r[i], xi, prior);
      next[i] = pm.mean;
      deriv_sum += pm.variance / xi;
    }
    const double onsager = ratio * deriv_sum / m;
    z = y - gain * cb.apply(next) + onsager * z;
    if (!detail::all_finite(z) || !detail::all_finite(next))
      detail::diverged("amp", report, k_hat, max_count);
    k_hat = std::move(next);

    report.iterations_run = t;
    report.trace.push_back({xi, z.norm() / gain});
    auto rounded = round_estimate(k_hat, max_count);
    if (opts.early_stop && t > 1 && rounded == previous) break;
    previous = std::move(rounded);
  }
  detail::finish(report, k_hat, max_count);
  return report;
}

/// Scalar AMP: the per-coordinate simplification of EP, written in the
/// normalized domain y / sqrt(nP) = C k + N(0, 1/(nP)).
inline DecoderReport scalar_amp_decode(const Eigen::VectorXd& y, const CommCodebook& cb,
                                       double power, const CountPrior& prior,
                                       const DecoderOptions& opts = {}) {
  detail::check_inputs(y, cb, power, opts);
  const int n = cb.n();
  const int m = cb.size();
  const double gain = std::sqrt(n * power);
  const double noise = 1.0 / (n * power);
  const int max_count = prior.max_count();
  const Eigen::VectorXd y_norm = y / gain;

  Eigen::VectorXd k_hat = Eigen::VectorXd::Constant(m, prior.mean());
  Eigen::VectorXd v_hat = Eigen::VectorXd::Constant(m, prior.variance());
  // z^(0) = 0 with v^(0) taken from the prior variance.
  Eigen::VectorXd v = cb.apply_squared(v_hat);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd scaled = (y_norm - z).cwiseQuotient((v.array() + noise).matrix());

  DecoderReport report;
  MultiplicityVector previous;
  for (int t = 1; t <= opts.max_iters; ++t) {
    v = cb.apply_squared(v_hat);
    z = cb.apply(k_hat) - v.cwiseProduct(scaled);
    const Eigen::VectorXd inv_total = (v.array() + noise).inverse().matrix();
    scaled = (y_norm - z).cwiseProduct(inv_total);

    Eigen::VectorXd xi = cb.adjoint_squared(inv_total).cwiseInverse();
    const Eigen::VectorXd r = k_hat + xi.cwiseProduct(cb.adjoint(scaled));
    if (!detail::all_finite(r) || !detail::all_finite(xi))
      detail::diverged("scalar_amp", report, k_hat, max_count);

    for (int i = 0; i < m; ++i) {
      const double xi_i = std::clamp(xi[i], opts.variance_floor, opts.variance_ceiling);
      xi[i] = xi_i;
      const auto pm = posterior_moments(r[i], xi_i, prior);
      k_hat[i] = pm.mean;
      v_hat[i] = pm.variance;
    }

    report.iterations_run = t;
    report.trace.push_back({xi.mean(), (y_norm - cb.apply(k_hat)).norm()});
    auto rounded = round_estimate(k_hat, max_count);
    if (opts.early_stop && t > 1 && rounded == previous) break;
    previous = std::move(rounded);
  }
  detail::finish(report, k_hat, max_count);
  return report;
}

namespace detail {

/// Variance from a precision, with the clamp and the non-positive policy.
/// Returns false when the policy says to keep the previous value.
inline bool variance_from_precision(double precision, const DecoderOptions& opts, double& var) {
  if (precision > 0.0) {
    var = std::clamp(1.0 / precision, opts.variance_floor, opts.variance_ceiling);
    return true;
  }
  switch (opts.ep_negative_variance) {
    case NegativeVariance::floor: var = opts.variance_floor; return true;
    case NegativeVariance::ceiling: var = opts.variance_ceiling; return true;
    case NegativeVariance::keep: return false;
  }
  return false;
}

/// Diagonal and mean of the Gaussian N(k; mu1, Xi1) conditioned on
/// y = gain C k + N(0, I), i.e. covariance (Xi1^-1 + gain^2 C^T C)^-1 and mean
/// cov (Xi1^-1 mu1 + gain C^T y). Solves on the smaller side.
struct GaussianProjection {
  Eigen::MatrixXd c;     // dense codebook, n x M
  Eigen::MatrixXd gram;  // C^T C, only when n > M
  Eigen::VectorXd cty;   // C^T y
  double gain = 1.0;

  void operator()(const Eigen::VectorXd& mu1, const Eigen::VectorXd& xi1, Eigen::VectorXd& mean,
                  Eigen::VectorXd& var) const {
    const Eigen::Index n = c.rows();
    const Eigen::Index m = c.cols();
    const Eigen::VectorXd h = mu1.cwiseQuotient(xi1) + gain * cty;
    if (n <= m) {
      // Woodbury: Xi1 - Xi1 C^T (I/gain^2 + C Xi1 C^T)^-1 C Xi1.
      const Eigen::MatrixXd b = c * xi1.asDiagonal();
      const Eigen::MatrixXd cs = c * xi1.cwiseSqrt().asDiagonal();
      Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) / (gain * gain);
      a.selfadjointView<Eigen::Lower>().rankUpdate(cs);
      const Eigen::LLT<Eigen::MatrixXd> llt(a);
      if (llt.info() != Eigen::Success) {
        mean.setConstant(m, std::numeric_limits<double>::quiet_NaN());
        var = mean;
        return;
      }
      const Eigen::MatrixXd w = llt.matrixL().solve(b);
      var = xi1 - w.colwise().squaredNorm().transpose();
      const Eigen::VectorXd u = xi1.cwiseProduct(h);
      mean = u - b.transpose() * llt.solve(c * u);
    } else {
      Eigen::MatrixXd prec = gain * gain * gram;
      prec.diagonal() += xi1.cwiseInverse();
      const Eigen::LLT<Eigen::MatrixXd> llt(prec);
      if (llt.info() != Eigen::Success) {
        mean.setConstant(m, std::numeric_limits<double>::quiet_NaN());
        var = mean;
        return;
      }
      const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(m, m));
      var = cov.diagonal();
      mean = cov * h;
    }
  }
};

}  // namespace detail

/// Expectation propagation with a factorized prior. Site terms
/// N(k_i; mu_i1, xi_i1) stand in for the prior factors, cavities
/// N(k_i; mu_i0, xi_i0) carry what the channel says about each k_i.
inline DecoderReport ep_decode(const Eigen::VectorXd& y, const CommCodebook& cb, double power,
                               const CountPrior& prior, const DecoderOptions& opts = {}) {
  detail::check_inputs(y, cb, power, opts);
  const int n = cb.n();
  const int m = cb.size();
  const int max_count = prior.max_count();

  detail::GaussianProjection project;
  project.c = cb.to_dense();
  project.gain = std::sqrt(n * power);
  project.cty = project.c.transpose() * y;
  if (n > m) project.gram = project.c.transpose() * project.c;

  const auto clamp_var = [&](double v) {
    return std::clamp(v, opts.variance_floor, opts.variance_ceiling);
  };

  // Sites start at the moment-matched prior, so the first pass is a plain
  // Gaussian projection and every site stays well defined under `keep`.
  Eigen::VectorXd mu1 = Eigen::VectorXd::Constant(m, prior.mean());
  Eigen::VectorXd xi1 = Eigen::VectorXd::Constant(m, clamp_var(prior.variance()));
  Eigen::VectorXd mu0 = mu1;
  Eigen::VectorXd xi0 = xi1;
  Eigen::VectorXd post_mean(m), post_var(m);
  Eigen::VectorXd k_hat = mu1;
  Eigen::VectorXd v_hat = xi1;

  DecoderReport report;
  MultiplicityVector previous;
  for (int t = 1; t <= opts.max_iters; ++t) {
    if (t > 1) {
      for (int i = 0; i < m; ++i) {
        double var = 0.0;
        if (!detail::variance_from_precision(1.0 / v_hat[i] - 1.0 / xi0[i], opts, var)) continue;
        mu1[i] = var * (k_hat[i] / v_hat[i] - mu0[i] / xi0[i]);
        xi1[i] = var;
      }
    }
    project(mu1, xi1, post_mean, post_var);
    if (!detail::all_finite(post_mean) || !detail::all_finite(post_var))
      detail::diverged("ep", report, k_hat, max_count);

    const double d = t > 1 ? opts.ep_damping : 0.0;
    for (int i = 0; i < m; ++i) {
      const double pv = clamp_var(post_var[i]);
      double cav_var = 0.0;
      if (!detail::variance_from_precision(1.0 / pv - 1.0 / xi1[i], opts, cav_var)) continue;
      const double cav_mean = cav_var * (post_mean[i] / pv - mu1[i] / xi1[i]);
      mu0[i] = d * mu0[i] + (1.0 - d) * cav_mean;
      xi0[i] = d * xi0[i] + (1.0 - d) * cav_var;
    }
    if (!detail::all_finite(mu0) || !detail::all_finite(xi0))
      detail::diverged("ep", report, k_hat, max_count);
    for (int i = 0; i < m; ++i) {
      const auto pm = posterior_moments(mu0[i], xi0[i], prior);
      k_hat[i] = pm.mean;
      v_hat[i] = clamp_var(pm.variance);
    }

    report.iterations_run = t;
    report.trace.push_back({xi0.mean(), (y / project.gain - project.c * post_mean).norm()});
    auto rounded = round_estimate(k_hat, max_count);
    if (opts.early_stop && t > 1 && rounded == previous) break;
    previous = std::move(rounded);
  }
  detail::finish(report, k_hat, max_count);
  return report;
}

inline DecoderReport decode(const Eigen::VectorXd& y, const CommCodebook& cb, double power,
                            const CountPrior& prior, const DecoderOptions& opts = {}) {
  switch (opts.algorithm) {
    case Algorithm::amp: return amp_decode(y, cb, power, prior, opts);
    case Algorithm::scalar_amp: return scalar_amp_decode(y, cb, power, prior, opts);
    case Algorithm::ep: return ep_decode(y, cb, power, prior, opts);
  }
  throw ConfigError("unknown algorithm");
}

}  // namespace tuma
