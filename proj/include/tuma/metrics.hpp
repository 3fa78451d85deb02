#pragma once

#include <cmath>
#include <cstdlib>
#include <vector>

#include <Eigen/Dense>

#include "tuma/codebooks.hpp"
#include "tuma/decoders.hpp"
#include "tuma/transport.hpp"
#include "tuma/types.hpp"

namespace tuma {

struct TransportPlan {
  Eigen::MatrixXd e;       // e(i, j): mass moved from atom i of mu to atom j of nu
  double objective = 0.0;  // sum e_ij ||x_i - y_j||^p
};

struct WassersteinResult {
  double distance = 0.0;
  TransportPlan plan;
};

/// p-Wasserstein distance between two discrete measures, by exact optimal
/// transport. When both measures carry integer counts the problem is solved
/// on the counts (scaled to a common total), so marginals are exact.
inline WassersteinResult wasserstein(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                     double p = 2.0) {
  if (mu.empty() || nu.empty()) throw DomainError("wasserstein: empty measure");
  if (!(p >= 1.0)) throw DomainError("wasserstein: p must be >= 1");
  const auto rows = static_cast<Eigen::Index>(mu.size());
  const auto cols = static_cast<Eigen::Index>(nu.size());
  Eigen::MatrixXd cost(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double d = distance(mu.atoms()[i].location, nu.atoms()[j].location);
      cost(i, j) = p == 2.0 ? d * d : std::pow(d, p);
    }

  WassersteinResult out;
  if (mu.has_counts() && nu.has_counts()) {
    std::vector<long long> supply(mu.counts()), demand(nu.counts());
    for (auto& s : supply) s *= nu.total();
    for (auto& d : demand) d *= mu.total();
    const auto sol = solve_transport<long long>(supply, demand, cost);
    const double denom = static_cast<double>(mu.total()) * static_cast<double>(nu.total());
    out.plan.e = sol.flow.cast<double>() / denom;
    out.plan.objective = sol.cost / denom;
  } else {
    std::vector<double> supply, demand;
    for (const auto& a : mu.atoms()) supply.push_back(a.weight);
    for (const auto& a : nu.atoms()) demand.push_back(a.weight);
    const auto sol = solve_transport<double>(supply, demand, cost);
    out.plan.e = sol.flow;
    out.plan.objective = sol.cost;
  }
  out.distance = std::pow(std::max(0.0, out.plan.objective), 1.0 / p);
  return out;
}

/// Half the L1 distance between the normalized histograms of k and k_hat.
/// Evaluated on integers over the common denominator sum(k) * sum(k_hat).
inline double total_variation(const MultiplicityVector& k, const MultiplicityVector& k_hat) {
  if (k.size() != k_hat.size()) throw ConfigError("total_variation: length mismatch");
  const long long a = total_count(k);
  const long long b = total_count(k_hat);
  if (a <= 0 || b <= 0) throw DomainError("total_variation: empty histogram");
  long long diff = 0;
  for (std::size_t i = 0; i < k.size(); ++i)
    diff += std::llabs(static_cast<long long>(k[i]) * b - static_cast<long long>(k_hat[i]) * a);
  return 0.5 * static_cast<double>(diff) / (static_cast<double>(a) * static_cast<double>(b));
}

/// W_p between the true type and the type the receiver would report with
/// error-free communication (k_hat = k). Isolates the quantization loss.
inline double quantization_distortion(const DiscreteMeasure& true_type, const MultiplicityVector& k,
                                      const QuantCodebook& qc, double p = 2.0) {
  return wasserstein(true_type, estimated_type(k, qc), p).distance;
}

}  // namespace tuma
