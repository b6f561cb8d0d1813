#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "resochain/errors.hpp"
#include "resochain/random.hpp"
#include "resochain/uncertainty.hpp"

using namespace resochain;

namespace {

double phi(double z) { return 0.5 * (1.0 + std::erf(z / std::sqrt(2.0))); }

// Two-sided Kolmogorov-Smirnov statistic against an oracle CDF.
template <class Cdf>
double ks_statistic(std::vector<double> x, Cdf cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

}  // namespace

TEST_SUITE("uncertainty") {
  TEST_CASE("feasible mean bounds keep +-3 sigma realizations inside the raw range") {
    const auto [lo, hi] = feasible_mu_bounds(1e-6, 5e-4, 0.02);
    CHECK(hi == doctest::Approx(4.717e-4).epsilon(1e-3));
    CHECK(lo == doctest::Approx(1e-6 / 0.94));
    CHECK(feasible_mu_bounds(1e-6, 0.5, 0.02).second == doctest::Approx(0.4717).epsilon(1e-3));
    CHECK(hi * 1.06 == doctest::Approx(5e-4));
    CHECK_THROWS_AS(feasible_mu_bounds(1.0, 1.01, 0.02), ConfigError);
    CHECK_THROWS(feasible_mu_bounds(0.0, 1.0, 0.5));
  }

  TEST_CASE("normal quantile inverts the CDF") {
    for (double p : {1e-10, 0.001, 0.3, 0.5, 0.77, 0.999999}) {
      CHECK(phi(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-10));
    }
    CHECK(normal_cdf(1.0) == doctest::Approx(phi(1.0)).epsilon(1e-14));
    CHECK_THROWS(normal_quantile(1.5));
  }

  TEST_CASE("truncated normal samples pass a KS test") {
    const double mu = 0.3, sigma = 0.006;
    const auto rv = RandomVariable::truncated_normal(mu, sigma);
    CHECK(rv.lower() == doctest::Approx(mu - 3 * sigma));
    CHECK(rv.upper() == doctest::Approx(mu + 3 * sigma));
    Rng rng(11);
    std::vector<double> xs(4000);
    for (auto& x : xs) x = sample(rv, rng.uniform_open());
    const double mass = phi(3.0) - phi(-3.0);
    auto oracle = [&](double x) { return (phi((x - mu) / sigma) - phi(-3.0)) / mass; };
    // 1% critical value 1.63 / sqrt(n).
    CHECK(ks_statistic(xs, oracle) < 1.63 / std::sqrt(4000.0));
    for (double x : xs) {
      CHECK(x >= rv.lower());
      CHECK(x <= rv.upper());
    }
  }

  TEST_CASE("uniform samples pass a KS test") {
    const auto rv = RandomVariable::uniform(8.0, 12.0);
    Rng rng(12);
    std::vector<double> xs(4000);
    for (auto& x : xs) x = sample(rv, rng.uniform_open());
    CHECK(ks_statistic(xs, [](double x) { return std::clamp((x - 8.0) / 4.0, 0.0, 1.0); }) <
          1.63 / std::sqrt(4000.0));
    CHECK(rv.mean() == 10.0);
    CHECK_THROWS(RandomVariable::uniform(1.0, 1.0));
  }

  TEST_CASE("standard normal map round trip") {
    ProblemSpec p;
    p.design = {{"alpha", 0.01, 0.47, 0.02}, {"eta", 1e-6, 4.7e-4, 0.02}};
    p.aleatory = {{"amplitude", 8.0, 12.0}, {"omega1", 1.23, 1.27}};
    const std::vector<double> mu{0.2, 3e-4};
    const StandardNormalMap map(p.marginals(mu));
    Rng rng(5);
    double worst = 0.0;
    for (int i = 0; i < 500; ++i) {
      std::vector<double> z(4);
      for (auto& v : z) v = 5.0 * (rng.uniform() - 0.5);
      z[0] = std::clamp(z[0], -2.9, 2.9);
      z[1] = std::clamp(z[1], -2.9, 2.9);
      const auto x = map.from_standard_normal(z);
      const auto back = map.to_standard_normal(x);
      const auto x2 = map.from_standard_normal(back);
      for (std::size_t k = 0; k < 4; ++k) worst = std::max(worst, std::abs(x2[k] - x[k]) / std::abs(x[k]));
    }
    CHECK(worst < 1e-10);
    CHECK_THROWS_AS(map.to_standard_normal(std::vector<double>{0.2, 3e-4, 13.0, 1.25}), std::domain_error);
    const auto zc = map.to_standard_normal_clamped(std::vector<double>{0.2, 3e-4, 13.0, 1.25}, 6.0);
    CHECK(zc[2] == 6.0);
  }

  TEST_CASE("expanded space covers every reachable realization") {
    ProblemSpec p;
    p.design = {{"eta", 1e-6 / 0.94, 5e-4 / 1.06, 0.02}};
    p.aleatory = {{"amplitude", 8.0, 12.0}};
    const auto s = p.expanded_space();
    CHECK(s.lower[0] == doctest::Approx(1e-6));
    CHECK(s.upper[0] == doctest::Approx(5e-4));
    CHECK(s.lower[1] == 8.0);
    const std::vector<double> x{2e-4, 9.0};
    const auto u = s.to_unit(x);
    const auto back = s.from_unit(u);
    CHECK(back[0] == doctest::Approx(x[0]));
    CHECK(back[1] == doctest::Approx(x[1]));
    CHECK(s.contains(x));
    CHECK_FALSE(p.feasible(std::vector<double>{6e-4}));
    CHECK(p.feasible(std::vector<double>{2e-4}));
  }

  TEST_CASE("Latin hypercube strata") {
    Rng rng(3);
    const auto pts = latin_hypercube(20, 3, rng);
    REQUIRE(pts.size() == 20);
    for (std::size_t k = 0; k < 3; ++k) {
      std::set<int> strata;
      for (const auto& p : pts) strata.insert(static_cast<int>(p[k] * 20.0));
      CHECK(strata.size() == 20);
    }
  }

  TEST_CASE("derived seeds differ per stream and are reproducible") {
    CHECK(derive_seed(1, 2) == derive_seed(1, 2));
    CHECK(derive_seed(1, 2) != derive_seed(1, 3));
    CHECK(derive_seed(1, 2) != derive_seed(2, 2));
    Rng a(9), b(9);
    for (int i = 0; i < 10; ++i) CHECK(a.uniform() == b.uniform());
  }
}
