#pragma once

#include <cstddef>
#include <vector>

#include "resochain/chain.hpp"

namespace resochain {

/// One squared-sine term b * sin^2(c * x).
struct FieldTerm {
  double amplitude = 0.0;  ///< b
  double rate = 0.0;       ///< c, in 1/unit-index
};

/// Property field theta(x) = offset + sum_j b_j sin^2(c_j x) over unit
/// positions x (the 1-based unit index).
struct FieldSpec {
  double offset = 0.0;
  std::vector<FieldTerm> terms;

  static FieldSpec constant(double value) { return {value, {}}; }
  /// Single-term form a1 + a2 sin^2(a3 x).
  static FieldSpec single(double a1, double a2, double a3) {
    return {a1, {{a2, a3}}};
  }

  double operator()(double x) const;
  /// offset + sum of non-negative amplitudes; an upper bound when all
  /// coefficients are non-negative.
  double upper_bound() const;
};

double field_eval(const FieldSpec& field, double x);

/// Builds an N-unit chain whose unit j (1-based) takes
/// (alpha(j), epsilon(j), eta(j), xi1, xi2).
ChainSpec expand_to_chain(const FieldSpec& alpha, const FieldSpec& epsilon,
                          const FieldSpec& eta, std::size_t n_units,
                          double xi1 = 0.0, double xi2 = 0.0);

}  // namespace resochain
