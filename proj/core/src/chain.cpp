#include "resochain/chain.hpp"

#include <cmath>
#include <string>

#include "resochain/errors.hpp"

namespace resochain {

void NondimUnit::validate() const {
  const bool finite = std::isfinite(alpha) && std::isfinite(epsilon) &&
                      std::isfinite(eta) && std::isfinite(xi1) &&
                      std::isfinite(xi2);
  if (!finite || alpha < 0.0 || epsilon <= 0.0 || eta < 0.0 || xi1 < 0.0 ||
      xi2 < 0.0) {
    throw std::invalid_argument(
        "NondimUnit: require alpha>=0, epsilon>0, eta>=0, xi1>=0, xi2>=0 (got alpha=" +
        std::to_string(alpha) + ", epsilon=" + std::to_string(epsilon) +
        ", eta=" + std::to_string(eta) + ")");
  }
}

double reference_frequency(const DimensionalUnit& unit) {
  if (!(unit.m1 > 0.0) || !(unit.k1 > 0.0)) {
    throw std::invalid_argument("reference_frequency: m1 and k1 must be positive");
  }
  return std::sqrt(unit.k1 / unit.m1);
}

NondimUnit nondimensionalize(const DimensionalUnit& unit) {
  if (!(unit.m1 > 0.0) || !(unit.k1 > 0.0) || !(unit.L > 0.0)) {
    throw std::invalid_argument("nondimensionalize: m1, k1 and L must be positive");
  }
  if (!(unit.m2 > 0.0) || unit.k2 < 0.0 || unit.kn < 0.0 || unit.c1 < 0.0 ||
      unit.c2 < 0.0) {
    throw std::invalid_argument(
        "nondimensionalize: require m2>0 and k2, kn, c1, c2 >= 0");
  }
  const double omega1 = reference_frequency(unit);
  NondimUnit out;
  out.alpha = unit.k2 / unit.k1;
  out.epsilon = unit.m2 / unit.m1;
  out.eta = unit.kn * unit.L * unit.L / (unit.m1 * omega1 * omega1);
  out.xi1 = unit.c1 / (unit.m1 * omega1);
  out.xi2 = unit.c2 / (unit.m1 * omega1);
  return out;
}

ChainSpec::ChainSpec(std::vector<NondimUnit> units) : units_(std::move(units)) {
  if (units_.size() < 2) {
    throw std::invalid_argument("ChainSpec: a chain needs at least 2 units");
  }
  for (const auto& u : units_) u.validate();
}

ChainSpec ChainSpec::uniform(const NondimUnit& unit, std::size_t n_units) {
  return ChainSpec(std::vector<NondimUnit>(n_units, unit));
}

bool ChainSpec::undamped() const {
  for (const auto& u : units_) {
    if (u.xi1 != 0.0 || u.xi2 != 0.0) return false;
  }
  return true;
}

ChainState ChainState::zeros(std::size_t n_units) {
  ChainState s;
  s.v1.assign(n_units, 0.0);
  s.v2.assign(n_units, 0.0);
  s.v1dot.assign(n_units, 0.0);
  s.v2dot.assign(n_units, 0.0);
  return s;
}

void accelerations_into(const ChainSpec& chain, std::span<const double> v1,
                        std::span<const double> v2,
                        std::span<const double> v1dot,
                        std::span<const double> v2dot, std::span<double> a1,
                        std::span<double> a2) {
  const std::size_t n = chain.size();
  const auto& units = chain.units();
  // Internal resonators and the unit's own coupling to them.
  for (std::size_t j = 0; j < n; ++j) {
    const NondimUnit& u = units[j];
    const double rel = v2[j] - v1[j];
    const double rel_dot = v2dot[j] - v1dot[j];
    const double f = u.alpha * rel + u.xi2 * rel_dot + u.eta * rel * rel * rel;
    a2[j] = -f / u.epsilon;
    a1[j] = f;
  }
  // Main-chain links; link j joins units j and j+1 with unit stiffness and
  // damping xi1 of unit j.
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const double f = (v1[j] - v1[j + 1]) + units[j].xi1 * (v1dot[j] - v1dot[j + 1]);
    a1[j] -= f;
    a1[j + 1] += f;
  }
  a1[0] = 0.0;
}

Accelerations eom_rhs(const ChainSpec& chain, const ChainState& state,
                      const PrescribedMotion& prescribed) {
  const std::size_t n = chain.size();
  if (state.v1.size() != n || state.v2.size() != n || state.v1dot.size() != n ||
      state.v2dot.size() != n) {
    throw std::invalid_argument("eom_rhs: state dimensions do not match chain");
  }
  if (prescribed.index != 0) {
    throw std::invalid_argument(
        "eom_rhs: the driven DOF must be the main resonator of unit 1");
  }
  auto finite = [](const std::vector<double>& v) {
    for (double x : v) {
      if (!std::isfinite(x)) return false;
    }
    return true;
  };
  if (!finite(state.v1) || !finite(state.v2) || !finite(state.v1dot) ||
      !finite(state.v2dot) || !std::isfinite(prescribed.displacement) ||
      !std::isfinite(prescribed.velocity)) {
    throw NumericalError("eom_rhs: non-finite state");
  }
  std::vector<double> v1 = state.v1;
  std::vector<double> v1dot = state.v1dot;
  v1[0] = prescribed.displacement;
  v1dot[0] = prescribed.velocity;
  Accelerations acc{std::vector<double>(n), std::vector<double>(n)};
  accelerations_into(chain, v1, state.v2, v1dot, state.v2dot, acc.a1, acc.a2);
  return acc;
}

double total_energy(const ChainSpec& chain, std::span<const double> v1,
                    std::span<const double> v2, std::span<const double> v1dot,
                    std::span<const double> v2dot) {
  const std::size_t n = chain.size();
  double e = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const NondimUnit& u = chain[j];
    const double rel = v2[j] - v1[j];
    const double rel2 = rel * rel;
    e += 0.5 * v1dot[j] * v1dot[j] + 0.5 * u.epsilon * v2dot[j] * v2dot[j];
    e += 0.5 * u.alpha * rel2 + 0.25 * u.eta * rel2 * rel2;
    if (j + 1 < n) {
      const double d = v1[j + 1] - v1[j];
      e += 0.5 * d * d;
    }
  }
  return e;
}

}  // namespace resochain
