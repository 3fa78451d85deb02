#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tuma {

/// Invalid parameters or dimensions supplied by the caller.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the domain of a mathematical operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline double distance(const Point& a, const Point& b) noexcept {
  return std::hypot(a.x - b.x, a.y - b.y);
}

/// K_i = number of sensors transmitting message i.
using MultiplicityVector = std::vector<int>;

inline long long total_count(const MultiplicityVector& k) {
  return std::accumulate(k.begin(), k.end(), 0LL);
}

inline bool is_power_of_two(std::uint64_t v) noexcept {
  return v != 0 && (v & (v - 1)) == 0;
}

inline int log2_exact(std::uint64_t v) {
  if (!is_power_of_two(v)) throw ConfigError("value is not a power of 2: " + std::to_string(v));
  int b = 0;
  while ((std::uint64_t{1} << b) != v) ++b;
  return b;
}

struct SystemConfig {
  int n = 250;          // channel uses
  int ka = 50;          // active sensors
  int ma = 50;          // targets
  int bits = 10;        // log2 of the codebook size M
  double snr_db = -12;  // per-channel-use power P in dB
  double p_order = 2.0;
  int max_iters = 10;
  int trials = 200;
  std::uint64_t seed = 1;

  int codebook_size() const { return 1 << bits; }

  void validate() const {
    if (n < 1) throw ConfigError("n must be >= 1");
    if (ka < 1) throw ConfigError("ka must be >= 1");
    if (ma < 1) throw ConfigError("ma must be >= 1");
    if (bits < 1 || bits > 24) throw ConfigError("bits must be in 1..24");
    if (!(p_order >= 1.0)) throw ConfigError("p_order must be >= 1");
    if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (!std::isfinite(snr_db)) throw ConfigError("snr_db must be finite");
  }
};

struct Atom {
  double weight = 0.0;
  Point location;
};

/// Probability measure with finitely many atoms. Optionally remembers the
/// integer masses it was built from, so transport can run on exact counts.
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;

  /// Weights must be positive and sum to one within 1e-12.
  static DiscreteMeasure from_weights(std::vector<Atom> atoms) {
    double sum = 0.0;
    for (const auto& a : atoms) {
      if (!(a.weight > 0.0)) throw DomainError("measure weights must be positive");
      sum += a.weight;
    }
    if (!atoms.empty() && std::abs(sum - 1.0) > 1e-12)
      throw DomainError("measure weights must sum to 1");
    DiscreteMeasure m;
    m.atoms_ = std::move(atoms);
    return m;
  }

  /// Atoms with zero count are dropped.
  static DiscreteMeasure from_counts(const std::vector<long long>& counts,
                                     const std::vector<Point>& locations) {
    if (counts.size() != locations.size())
      throw ConfigError("counts and locations differ in length");
    long long total = 0;
    for (auto c : counts) {
      if (c < 0) throw DomainError("negative count");
      total += c;
    }
    DiscreteMeasure m;
    if (total == 0) return m;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (counts[i] == 0) continue;
      m.atoms_.push_back({static_cast<double>(counts[i]) / static_cast<double>(total), locations[i]});
      m.counts_.push_back(counts[i]);
    }
    m.total_ = total;
    return m;
  }

  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  std::size_t size() const noexcept { return atoms_.size(); }
  bool empty() const noexcept { return atoms_.empty(); }

  bool has_counts() const noexcept { return total_ > 0; }
  const std::vector<long long>& counts() const noexcept { return counts_; }
  long long total() const noexcept { return total_; }

 private:
  std::vector<Atom> atoms_;
  std::vector<long long> counts_;
  long long total_ = 0;
};

}  // namespace tuma
