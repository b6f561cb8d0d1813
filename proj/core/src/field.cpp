#include "resochain/field.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace resochain {

double FieldSpec::operator()(double x) const {
  double value = offset;
  for (const auto& t : terms) {
    if (t.amplitude == 0.0) continue;
    const double s = std::sin(t.rate * x);
    value += t.amplitude * s * s;
  }
  return value;
}

double FieldSpec::upper_bound() const {
  double value = offset;
  for (const auto& t : terms) value += std::max(t.amplitude, 0.0);
  return value;
}

double field_eval(const FieldSpec& field, double x) { return field(x); }

ChainSpec expand_to_chain(const FieldSpec& alpha, const FieldSpec& epsilon,
                          const FieldSpec& eta, std::size_t n_units, double xi1,
                          double xi2) {
  if (n_units < 2) {
    throw std::invalid_argument("expand_to_chain: a chain needs at least 2 units");
  }
  std::vector<NondimUnit> units(n_units);
  for (std::size_t j = 0; j < n_units; ++j) {
    const double x = static_cast<double>(j + 1);
    NondimUnit& u = units[j];
    u.alpha = alpha(x);
    u.epsilon = epsilon(x);
    u.eta = eta(x);
    u.xi1 = xi1;
    u.xi2 = xi2;
    if (!(u.epsilon > 0.0)) {
      throw std::invalid_argument("expand_to_chain: epsilon field is not positive at unit " +
                                  std::to_string(j + 1));
    }
  }
  return ChainSpec(std::move(units));
}

}  // namespace resochain
