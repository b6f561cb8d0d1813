#include "resochain/model.hpp"

#include <algorithm>
#include <set>

#include "resochain/errors.hpp"

namespace resochain {

namespace {

const std::vector<std::string> kConstantNames{"alpha", "epsilon", "eta", "xi1", "xi2"};
const std::vector<std::string> kFieldProperties{"alpha", "epsilon", "eta"};

double reference_value(const NondimUnit& u, const std::string& name) {
  if (name == "alpha") return u.alpha;
  if (name == "epsilon") return u.epsilon;
  if (name == "eta") return u.eta;
  if (name == "xi1") return u.xi1;
  return u.xi2;
}

void assign(NondimUnit& u, const std::string& name, double v) {
  if (name == "alpha") u.alpha = v;
  else if (name == "epsilon") u.epsilon = v;
  else if (name == "eta") u.eta = v;
  else if (name == "xi1") u.xi1 = v;
  else u.xi2 = v;
}

// Index K of "omegaK", or 0 when the name does not have that form.
std::size_t omega_index(const std::string& name) {
  if (name.rfind("omega", 0) != 0 || name.size() == 5) return 0;
  const std::string digits = name.substr(5);
  if (!std::all_of(digits.begin(), digits.end(), ::isdigit)) return 0;
  return static_cast<std::size_t>(std::stoul(digits));
}

}  // namespace

void ChainModel::validate() const {
  if (n_units < 2) throw ConfigError("model: chain needs at least 2 units");
  if (response_unit < 1 || response_unit > n_units) {
    throw ConfigError("model: response_unit must lie in [1, n_units]");
  }
  std::set<std::string> seen;
  for (const auto& n : design_names) {
    if (!seen.insert(n).second) throw ConfigError("model: duplicate design variable '" + n + "'");
    if (mode == ParameterMode::kConstant) {
      if (std::find(kConstantNames.begin(), kConstantNames.end(), n) == kConstantNames.end()) {
        throw ConfigError("model: unknown constant-mode design variable '" + n + "'");
      }
    } else {
      const auto dot = n.find('.');
      const std::string prop = n.substr(0, dot);
      const std::string coef = dot == std::string::npos ? "" : n.substr(dot + 1);
      if (std::find(kFieldProperties.begin(), kFieldProperties.end(), prop) ==
              kFieldProperties.end() ||
          (coef != "a1" && coef != "a2" && coef != "a3")) {
        throw ConfigError("model: field design variables are <alpha|epsilon|eta>.<a1|a2|a3>, got '" +
                          n + "'");
      }
    }
  }
  for (const auto& n : aleatory_names) {
    if (!seen.insert(n).second) throw ConfigError("model: duplicate variable '" + n + "'");
    if (n == "amplitude") continue;
    const std::size_t k = omega_index(n);
    if (k == 0 || k > excitation.frequencies.size()) {
      throw ConfigError("model: aleatory variable '" + n +
                        "' must be 'amplitude' or omegaK with K <= number of frequencies");
    }
  }
  try {
    excitation.validate();
    sim.validate();
    reference.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
}

FieldSpec field_for(const ChainModel& m, const std::string& property,
                    std::span<const double> design) {
  double a[3] = {reference_value(m.reference, property), 0.0, 0.0};
  for (std::size_t i = 0; i < m.design_names.size(); ++i) {
    const std::string& n = m.design_names[i];
    if (n.rfind(property + ".", 0) != 0) continue;
    const char c = n.back();
    a[c - '1'] = design[i];
  }
  return FieldSpec::single(a[0], a[1], a[2]);
}

ChainSpec ChainModel::chain(std::span<const double> design) const {
  if (design.size() != design_names.size()) {
    throw std::invalid_argument("ChainModel::chain: wrong number of design values");
  }
  if (mode == ParameterMode::kConstant) {
    NondimUnit u = reference;
    for (std::size_t i = 0; i < design.size(); ++i) assign(u, design_names[i], design[i]);
    return ChainSpec::uniform(u, n_units);
  }
  return expand_to_chain(field_for(*this, "alpha", design), field_for(*this, "epsilon", design),
                         field_for(*this, "eta", design), n_units, reference.xi1, reference.xi2);
}

Excitation ChainModel::excitation_at(std::span<const double> aleatory) const {
  if (aleatory.size() != aleatory_names.size()) {
    throw std::invalid_argument("ChainModel::excitation_at: wrong number of aleatory values");
  }
  Excitation e = excitation;
  for (std::size_t i = 0; i < aleatory.size(); ++i) {
    if (aleatory_names[i] == "amplitude") {
      e.amplitude = aleatory[i];
    } else {
      e.frequencies[omega_index(aleatory_names[i]) - 1] = aleatory[i];
    }
  }
  return e;
}

SimResult ChainModel::run(std::span<const double> x) const {
  const std::size_t nd = design_names.size();
  if (x.size() != nd + aleatory_names.size()) {
    throw std::invalid_argument("ChainModel: point has the wrong dimension");
  }
  SimConfig cfg = sim;
  if (std::find(cfg.record_units.begin(), cfg.record_units.end(), response_unit) ==
      cfg.record_units.end()) {
    cfg.record_units.push_back(response_unit);
  }
  return simulate(chain(x.first(nd)), excitation_at(x.subspan(nd)), cfg);
}

double ChainModel::response(std::span<const double> x) const {
  SimConfig cfg = sim;
  cfg.record_units = {response_unit};
  cfg.record_internal = false;
  const std::size_t nd = design_names.size();
  if (x.size() != nd + aleatory_names.size()) {
    throw std::invalid_argument("ChainModel: point has the wrong dimension");
  }
  return simulate(chain(x.first(nd)), excitation_at(x.subspan(nd)), cfg).rms.at(response_unit);
}

Model ChainModel::as_model() const {
  validate();
  return [m = *this](std::span<const double> x) { return m.response(x); };
}

}  // namespace resochain
