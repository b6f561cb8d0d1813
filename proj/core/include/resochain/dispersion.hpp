#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "resochain/chain.hpp"

namespace resochain {

enum class Branch { kAcoustic, kOptical };
std::string to_string(Branch b);

struct HBConfig {
  std::size_t n_harmonics = 1;        ///< M
  std::size_t quadrature_points = 0;  ///< per period; 0 selects 32 * M
  double newton_tol = 1e-10;
  std::size_t max_newton_iters = 50;
  std::size_t continuation_steps = 50;  ///< kL grid over (0, pi]
  std::size_t eta_ramp_steps = 5;

  std::size_t quadrature() const {
    return quadrature_points == 0 ? 32 * n_harmonics : quadrature_points;
  }
  void validate() const;
};

/// Traveling-wave solution u^(j) = A sum_i c_i cos(i(j kL - tau)) + s_i sin(...)
/// with lambda = [c11 s11 ... c1M s1M c21 s21 ... c2M s2M] and max |lambda| = 1.
struct HarmonicSolution {
  double kL = 0.0;
  double omega_bar = 0.0;
  double amplitude = 0.0;
  Eigen::VectorXd lambda;
  Branch branch = Branch::kAcoustic;
  double residual_norm = 0.0;
  std::size_t iterations = 0;
};

struct BandGap {
  double low = 0.0;   ///< top of the acoustic branch
  double high = 0.0;  ///< bottom of the optical branch
  bool open() const { return low < high; }
  double width() const { return high - low; }
};

/// Closed-form roots (ascending) of the undamped linear dispersion relation
/// (2(1 - cos kL) - w^2)(alpha - epsilon w^2) - alpha epsilon w^2 = 0.
std::pair<double, double> linear_dispersion(double alpha, double epsilon, double kL);

/// Galerkin residual per unit amplitude, length 4M, normalized by 1/pi.
/// Integrals use the periodic trapezoid rule with cfg.quadrature() points.
Eigen::VectorXd galerkin_residual(const NondimUnit& unit, double amplitude, double kL,
                                  double omega_bar, const Eigen::VectorXd& lambda,
                                  const HBConfig& cfg);

/// Throws NumericalError if doubling the quadrature changes the residual.
void check_quadrature(const NondimUnit& unit, double amplitude, double kL, double omega_bar,
                      const Eigen::VectorXd& lambda, const HBConfig& cfg);

/// Linear eigenpair at kL packed as a HarmonicSolution (eta ignored).
HarmonicSolution linear_solution(const NondimUnit& unit, double kL, Branch branch,
                                 const HBConfig& cfg);

/// Newton solve for (omega_bar, lambda) at fixed amplitude and kL, starting
/// from `guess` (linear eigenpair when empty) and ramping eta from 0.
HarmonicSolution solve_branch(const NondimUnit& unit, double amplitude, double kL,
                              Branch branch, const HBConfig& cfg,
                              const std::optional<HarmonicSolution>& guess = std::nullopt);

struct DispersionCurve {
  double amplitude = 0.0;
  double eta = 0.0;
  std::vector<double> kL;
  std::vector<HarmonicSolution> acoustic, optical;
  BandGap gap;
};

/// Both branches on the grid kL_i = i pi / continuation_steps, i = 1..n.
DispersionCurve dispersion_curve(const NondimUnit& unit, double amplitude, const HBConfig& cfg);

BandGap band_gap(const NondimUnit& unit, double amplitude, const HBConfig& cfg);

}  // namespace resochain
