#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "resochain/chain.hpp"

namespace resochain {

/// Harmonic displacement imposed on the main resonator of unit 1:
///   v1(tau) = amplitude * sum_i sin(frequencies[i] * tau + phases[i])
/// with tau = omega1 * t.
struct Excitation {
  double amplitude = 0.0;
  std::vector<double> frequencies{1.0};
  std::vector<double> phases;  ///< empty means all zero

  void validate() const;
  double displacement(double tau) const;
  double velocity(double tau) const;
};

struct SimConfig {
  double dt = 0.02;
  double t_end = 1500.0;
  double transient_fraction = 1.0 / 3.0;
  std::vector<std::size_t> record_units{100};  ///< 1-based unit numbers
  bool record_internal = false;                ///< also store v2 series
  std::size_t record_stride = 1;               ///< keep every k-th step
  double overflow_guard = 1e8;
  std::optional<ChainState> initial;           ///< zero state when empty
  /// Skip units the excitation front has not reached yet and units that can
  /// no longer influence a recorded unit before t_end. Only applies to runs
  /// starting from rest.
  bool light_cone_pruning = true;

  void validate() const;
};

struct SimResult {
  std::vector<double> tau;
  std::map<std::size_t, std::vector<double>> v1;  ///< keyed by unit number
  std::map<std::size_t, std::vector<double>> v2;
  std::map<std::size_t, double> rms;              ///< post-transient RMS of v1
  std::size_t window_begin = 0;                   ///< first sample in the RMS window
  /// max |E(tau) - E(0)| / E(0), only for undamped and unforced runs.
  std::optional<double> energy_drift;
  std::size_t steps = 0;
};

SimResult simulate(const ChainSpec& chain, const Excitation& exc,
                   const SimConfig& cfg);

/// sqrt(mean(x^2)) over series[begin, end).
double rms(std::span<const double> series, std::size_t begin, std::size_t end);
double rms(std::span<const double> series);

struct SpectrumLine {
  double omega_bar;
  double magnitude;  ///< single-sided amplitude; a unit sine peaks near 1
};

/// Discrete Fourier magnitudes of a uniformly sampled series, frequency axis
/// in the same nondimensional units as the sampling step.
std::vector<SpectrumLine> spectrum(std::span<const double> series, double dt);

/// Magnitude of the strongest line within +-half_width of omega_bar.
double spectral_peak(std::span<const SpectrumLine> lines, double omega_bar,
                     double half_width);

/// CSV with header tau,v1_<i>,v2_<i>,... for every recorded unit.
void write_trajectory_csv(std::ostream& os, const SimResult& result);

}  // namespace resochain
