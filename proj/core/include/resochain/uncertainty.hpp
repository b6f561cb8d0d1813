#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace resochain {

/// Standard normal CDF and its inverse.
double normal_cdf(double z);
double normal_quantile(double p);

/// A scalar random variable: either a normal truncated to mu +- 3 sigma
/// (renormalized) or a uniform on [lo, hi].
class RandomVariable {
 public:
  enum class Kind { kTruncatedNormal, kUniform };

  static RandomVariable truncated_normal(double mu, double sigma);
  static RandomVariable uniform(double lo, double hi);

  Kind kind() const { return kind_; }
  double lower() const { return lower_; }
  double upper() const { return upper_; }
  double mean() const;
  double mu() const { return mu_; }
  double sigma() const { return sigma_; }

  double cdf(double x) const;
  /// Inverse CDF; u must lie strictly inside (0, 1).
  double quantile(double u) const;
  /// Same as quantile without the range check; u is clamped to [0, 1].
  double quantile_unchecked(double u) const;

 private:
  RandomVariable(Kind kind, double mu, double sigma, double lo, double hi);
  Kind kind_;
  double mu_, sigma_, lower_, upper_;
};

double sample(const RandomVariable& rv, double u);

inline constexpr double kTruncationSigmas = 3.0;

/// Feasible range of a mean whose realizations (sigma = cov * mu, truncated
/// at +-3 sigma) must stay inside [raw_lo, raw_hi].
std::pair<double, double> feasible_mu_bounds(double raw_lo, double raw_hi, double cov);

struct DesignVariable {
  std::string name;
  double mu_min = 0.0;
  double mu_max = 1.0;
  double cov = 0.02;

  double sigma(double mu) const { return cov * mu; }
  RandomVariable at(double mu) const;
};

struct AleatoryVariable {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;

  RandomVariable distribution() const { return RandomVariable::uniform(lo, hi); }
};

/// Box over design x aleatory dimensions (design first) that contains every
/// realization reachable from any feasible design mean.
struct ExpandedSpace {
  std::vector<double> lower, upper;

  std::size_t dim() const { return lower.size(); }
  bool contains(std::span<const double> x, double rel_tol = 1e-12) const;
  void to_unit(std::span<const double> x, std::span<double> out) const;
  void from_unit(std::span<const double> u, std::span<double> out) const;
  std::vector<double> to_unit(std::span<const double> x) const;
  std::vector<double> from_unit(std::span<const double> u) const;
};

struct ProblemSpec {
  std::vector<DesignVariable> design;
  std::vector<AleatoryVariable> aleatory;
  std::size_t response_unit = 100;

  std::size_t n_design() const { return design.size(); }
  std::size_t dim() const { return design.size() + aleatory.size(); }
  void validate() const;
  ExpandedSpace expanded_space() const;
  bool feasible(std::span<const double> mu) const;
  /// Joint distribution of one realization: design variables around mu,
  /// aleatory variables uniform.
  std::vector<RandomVariable> marginals(std::span<const double> mu) const;
};

/// Per-dimension map between a physical point and standard-normal space:
/// z_i = Phi^-1(F_i(x_i)).
class StandardNormalMap {
 public:
  explicit StandardNormalMap(std::vector<RandomVariable> marginals);

  std::size_t dim() const { return marginals_.size(); }
  const std::vector<RandomVariable>& marginals() const { return marginals_; }

  /// Throws std::domain_error when x lies outside the marginals' support.
  std::vector<double> to_standard_normal(std::span<const double> x) const;
  /// As above but clamps points outside the support to |z| <= z_clamp.
  std::vector<double> to_standard_normal_clamped(std::span<const double> x,
                                                 double z_clamp = 6.0) const;
  std::vector<double> from_standard_normal(std::span<const double> z) const;

 private:
  std::vector<RandomVariable> marginals_;
};

}  // namespace resochain
