#include "resochain/uncertainty.hpp"

#include <algorithm>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "resochain/errors.hpp"

namespace resochain {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw std::domain_error("normal_quantile: p outside [0, 1]");
  }
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

RandomVariable::RandomVariable(Kind kind, double mu, double sigma, double lo, double hi)
    : kind_(kind), mu_(mu), sigma_(sigma), lower_(lo), upper_(hi) {}

RandomVariable RandomVariable::truncated_normal(double mu, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(mu)) {
    throw std::invalid_argument("truncated_normal: sigma must be positive");
  }
  return {Kind::kTruncatedNormal, mu, sigma, mu - kTruncationSigmas * sigma,
          mu + kTruncationSigmas * sigma};
}

RandomVariable RandomVariable::uniform(double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("uniform: require lo < hi");
  return {Kind::kUniform, 0.5 * (lo + hi), (hi - lo) / std::sqrt(12.0), lo, hi};
}

double RandomVariable::mean() const { return mu_; }

namespace {
const double kPhiLo = normal_cdf(-kTruncationSigmas);
const double kPhiMass = normal_cdf(kTruncationSigmas) - normal_cdf(-kTruncationSigmas);
}  // namespace

double RandomVariable::cdf(double x) const {
  if (x <= lower_) return 0.0;
  if (x >= upper_) return 1.0;
  if (kind_ == Kind::kUniform) return (x - lower_) / (upper_ - lower_);
  return (normal_cdf((x - mu_) / sigma_) - kPhiLo) / kPhiMass;
}

double RandomVariable::quantile_unchecked(double u) const {
  u = std::clamp(u, 0.0, 1.0);
  if (kind_ == Kind::kUniform) return lower_ + u * (upper_ - lower_);
  if (u == 0.0) return lower_;
  if (u == 1.0) return upper_;
  const double z = normal_quantile(kPhiLo + u * kPhiMass);
  return std::clamp(mu_ + sigma_ * z, lower_, upper_);
}

double RandomVariable::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0)) {
    throw std::domain_error("RandomVariable::quantile: u must lie in (0, 1)");
  }
  return quantile_unchecked(u);
}

double sample(const RandomVariable& rv, double u) { return rv.quantile(u); }

std::pair<double, double> feasible_mu_bounds(double raw_lo, double raw_hi, double cov) {
  if (!(cov >= 0.0) || !(kTruncationSigmas * cov < 1.0)) {
    throw std::invalid_argument("feasible_mu_bounds: require 0 <= 3*cov < 1");
  }
  const double lo = raw_lo / (1.0 - kTruncationSigmas * cov);
  const double hi = raw_hi / (1.0 + kTruncationSigmas * cov);
  if (lo > hi) {
    throw ConfigError("feasible_mu_bounds: no feasible mean in [" + std::to_string(raw_lo) +
                      ", " + std::to_string(raw_hi) + "] at cov " + std::to_string(cov));
  }
  return {lo, hi};
}

RandomVariable DesignVariable::at(double mu) const {
  return RandomVariable::truncated_normal(mu, sigma(mu));
}

bool ExpandedSpace::contains(std::span<const double> x, double rel_tol) const {
  if (x.size() != dim()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double slack = rel_tol * std::max(std::abs(lower[i]), std::abs(upper[i]));
    if (x[i] < lower[i] - slack || x[i] > upper[i] + slack) return false;
  }
  return true;
}

void ExpandedSpace::to_unit(std::span<const double> x, std::span<double> out) const {
  for (std::size_t i = 0; i < dim(); ++i) out[i] = (x[i] - lower[i]) / (upper[i] - lower[i]);
}

void ExpandedSpace::from_unit(std::span<const double> u, std::span<double> out) const {
  for (std::size_t i = 0; i < dim(); ++i) out[i] = lower[i] + u[i] * (upper[i] - lower[i]);
}

std::vector<double> ExpandedSpace::to_unit(std::span<const double> x) const {
  std::vector<double> out(dim());
  to_unit(x, out);
  return out;
}

std::vector<double> ExpandedSpace::from_unit(std::span<const double> u) const {
  std::vector<double> out(dim());
  from_unit(u, out);
  return out;
}

void ProblemSpec::validate() const {
  if (design.empty()) throw ConfigError("problem: at least one design variable is required");
  for (const auto& d : design) {
    if (!(d.mu_min < d.mu_max)) {
      throw ConfigError("problem: design variable '" + d.name + "' needs mu_min < mu_max");
    }
    if (!(d.cov > 0.0) || !(kTruncationSigmas * d.cov < 1.0)) {
      throw ConfigError("problem: design variable '" + d.name + "' needs 0 < 3*cov < 1");
    }
    if (!(d.mu_min > 0.0)) {
      throw ConfigError("problem: design variable '" + d.name +
                        "' needs a positive mean (sigma = cov * mu)");
    }
  }
  for (const auto& a : aleatory) {
    if (!(a.lo < a.hi)) {
      throw ConfigError("problem: aleatory variable '" + a.name + "' needs lo < hi");
    }
  }
}

ExpandedSpace ProblemSpec::expanded_space() const {
  ExpandedSpace s;
  for (const auto& d : design) {
    s.lower.push_back(d.mu_min - kTruncationSigmas * d.sigma(d.mu_min));
    s.upper.push_back(d.mu_max + kTruncationSigmas * d.sigma(d.mu_max));
  }
  for (const auto& a : aleatory) {
    s.lower.push_back(a.lo);
    s.upper.push_back(a.hi);
  }
  return s;
}

bool ProblemSpec::feasible(std::span<const double> mu) const {
  if (mu.size() != design.size()) return false;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double tol = 1e-12 * std::abs(design[i].mu_max);
    if (mu[i] < design[i].mu_min - tol || mu[i] > design[i].mu_max + tol) return false;
  }
  return true;
}

std::vector<RandomVariable> ProblemSpec::marginals(std::span<const double> mu) const {
  if (mu.size() != design.size()) {
    throw std::invalid_argument("ProblemSpec::marginals: wrong number of design means");
  }
  std::vector<RandomVariable> out;
  out.reserve(dim());
  for (std::size_t i = 0; i < design.size(); ++i) out.push_back(design[i].at(mu[i]));
  for (const auto& a : aleatory) out.push_back(a.distribution());
  return out;
}

StandardNormalMap::StandardNormalMap(std::vector<RandomVariable> marginals)
    : marginals_(std::move(marginals)) {}

std::vector<double> StandardNormalMap::to_standard_normal(std::span<const double> x) const {
  if (x.size() != dim()) throw std::invalid_argument("to_standard_normal: dimension mismatch");
  std::vector<double> z(dim());
  for (std::size_t i = 0; i < dim(); ++i) {
    const auto& rv = marginals_[i];
    if (x[i] < rv.lower() || x[i] > rv.upper()) {
      throw std::domain_error("to_standard_normal: point outside the distribution support");
    }
    z[i] = normal_quantile(rv.cdf(x[i]));
  }
  return z;
}

std::vector<double> StandardNormalMap::to_standard_normal_clamped(std::span<const double> x,
                                                                  double z_clamp) const {
  std::vector<double> z(dim());
  for (std::size_t i = 0; i < dim(); ++i) {
    const auto& rv = marginals_[i];
    const double p = rv.cdf(x[i]);
    const double zi = normal_quantile(p);
    z[i] = std::clamp(zi, -z_clamp, z_clamp);
  }
  return z;
}

std::vector<double> StandardNormalMap::from_standard_normal(std::span<const double> z) const {
  if (z.size() != dim()) {
    throw std::invalid_argument("from_standard_normal: dimension mismatch");
  }
  std::vector<double> x(dim());
  for (std::size_t i = 0; i < dim(); ++i) {
    x[i] = marginals_[i].quantile_unchecked(normal_cdf(z[i]));
  }
  return x;
}

}  // namespace resochain
