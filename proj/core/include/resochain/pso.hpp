#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace resochain {

struct PsoConfig {
  std::size_t swarm_size = 50;
  double inertia = 0.72;
  double cognitive = 1.49;
  double social = 1.49;
  std::size_t iterations = 100;
  /// Stop early after this many iterations without improving the best value
  /// by more than stall_tolerance (relative); 0 disables.
  std::size_t stall_iterations = 0;
  double stall_tolerance = 1e-9;
  /// Velocity limit as a fraction of each bound's width.
  double max_velocity_fraction = 0.5;

  void validate() const;
};

struct PsoResult {
  std::vector<double> best;
  double value;
  std::size_t evaluations = 0;
  std::size_t iterations = 0;
};

using Objective = std::function<double(std::span<const double>)>;

/// Global-best particle swarm minimization over the box [lower, upper];
/// positions leaving the box are clamped. Deterministic for a given seed.
PsoResult pso_minimize(const Objective& f, std::span<const double> lower,
                       std::span<const double> upper, const PsoConfig& cfg,
                       std::uint64_t seed, std::span<const std::vector<double>> seeds = {});

}  // namespace resochain
