#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "resochain/chain.hpp"
#include "resochain/field.hpp"
#include "resochain/optimizer.hpp"
#include "resochain/simulate.hpp"

namespace resochain {

enum class ParameterMode { kConstant, kField };

/// Maps an optimizer point (design values followed by aleatory values) to a
/// chain and an excitation.
///
/// Constant mode design names: alpha, epsilon, eta, xi1, xi2.
/// Field mode design names: <property>.a1, <property>.a2, <property>.a3 for
/// property in alpha, epsilon, eta. Aleatory names: amplitude, omega1,
/// omega2, ... (omegaK replaces frequency K of the base excitation).
struct ChainModel {
  ParameterMode mode = ParameterMode::kConstant;
  std::size_t n_units = 1000;
  NondimUnit reference;
  Excitation excitation;
  SimConfig sim;
  std::size_t response_unit = 100;
  std::vector<std::string> design_names;
  std::vector<std::string> aleatory_names;

  /// Throws ConfigError on unknown or duplicate names.
  void validate() const;
  ChainSpec chain(std::span<const double> design) const;
  Excitation excitation_at(std::span<const double> aleatory) const;
  /// RMS displacement of the response unit's main resonator.
  double response(std::span<const double> x) const;
  SimResult run(std::span<const double> x) const;
  Model as_model() const;
};

/// Field coefficients for one property assembled from a design vector;
/// properties without design entries keep their reference value.
FieldSpec field_for(const ChainModel& m, const std::string& property,
                    std::span<const double> design);

}  // namespace resochain
