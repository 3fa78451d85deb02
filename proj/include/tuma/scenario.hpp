#pragma once

#include <vector>

#include "tuma/codebooks.hpp"
#include "tuma/rng.hpp"
#include "tuma/types.hpp"

namespace tuma {

/// Positions of the targets, one per target, in the unit square.
using TargetStates = std::vector<Point>;

/// assignment[k] is the (0-based) index of the target tracked by sensor k.
using SensorAssignment = std::vector<int>;

/// Targets placed i.i.d. uniformly on [0,1]^2.
inline TargetStates draw_targets(Rng& rng, int num_targets) {
  if (num_targets < 1) throw ConfigError("need at least one target");
  TargetStates states(static_cast<std::size_t>(num_targets));
  for (auto& s : states) {
    s.x = rng.uniform();
    s.y = rng.uniform();
  }
  return states;
}

/// Each sensor picks its target uniformly at random.
inline SensorAssignment assign_sensors(Rng& rng, int num_sensors, int num_targets) {
  if (num_sensors < 1 || num_targets < 1) throw ConfigError("need at least one sensor and target");
  SensorAssignment a(static_cast<std::size_t>(num_sensors));
  for (auto& o : a) o = static_cast<int>(rng.below(static_cast<std::uint64_t>(num_targets)));
  return a;
}

/// Number of sensors tracking each target.
inline std::vector<long long> target_counts(const TargetStates& states,
                                            const SensorAssignment& assignment) {
  std::vector<long long> counts(states.size(), 0);
  for (int o : assignment) {
    if (o < 0 || static_cast<std::size_t>(o) >= states.size())
      throw ConfigError("sensor assigned to a nonexistent target");
    ++counts[static_cast<std::size_t>(o)];
  }
  return counts;
}

/// Empirical distribution of the reported states. Targets nobody tracks are
/// left out.
inline DiscreteMeasure true_type(const TargetStates& states, const SensorAssignment& assignment) {
  return DiscreteMeasure::from_counts(target_counts(states, assignment), states);
}

inline MultiplicityVector true_multiplicity(const SensorAssignment& assignment,
                                            const TargetStates& states,
                                            const QuantCodebook& quantizer) {
  MultiplicityVector k(static_cast<std::size_t>(quantizer.size()), 0);
  for (int o : assignment) {
    if (o < 0 || static_cast<std::size_t>(o) >= states.size())
      throw ConfigError("sensor assigned to a nonexistent target");
    ++k[static_cast<std::size_t>(quantizer.quantize(states[static_cast<std::size_t>(o)]))];
  }
  return k;
}

}  // namespace tuma
