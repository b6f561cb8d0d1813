#include <doctest.h>

#include <cmath>
#include <numbers>

#include "resochain/dispersion.hpp"
#include "resochain/errors.hpp"

using namespace resochain;

namespace {

// Roots of (2(1 - cos q) - w^2)(a - e w^2) - a e w^2 = 0 as a quadratic in w^2.
std::pair<double, double> oracle_roots(double a, double e, double q) {
  const double s = 2.0 * (1.0 - std::cos(q));
  // e w^4 - (a + s e + a e) w^2 + a s = 0
  const double b = a + s * e + a * e;
  const double disc = std::sqrt(b * b - 4.0 * e * a * s);
  return {std::sqrt((b - disc) / (2.0 * e)), std::sqrt((b + disc) / (2.0 * e))};
}

const double kPi = std::numbers::pi;

}  // namespace

TEST_SUITE("dispersion") {
  TEST_CASE("closed-form linear roots") {
    const auto [lo, hi] = linear_dispersion(0.5, 0.5, kPi);
    CHECK(lo == doctest::Approx(0.928731).epsilon(1e-6));
    CHECK(hi == doctest::Approx(2.153476).epsilon(1e-6));
    for (double q : {1e-6, 0.01, 0.7, 2.0, kPi}) {
      for (auto [a, e] : {std::pair{0.5, 0.5}, std::pair{0.2, 1.7}, std::pair{1e-3, 0.3}}) {
        const auto o = oracle_roots(a, e, q);
        const auto r = linear_dispersion(a, e, q);
        CHECK(r.first == doctest::Approx(o.first).epsilon(1e-9));
        CHECK(r.second == doctest::Approx(o.second).epsilon(1e-9));
      }
    }
    // Optical cutoff sqrt(alpha (1 + eps) / eps) as kL -> 0.
    CHECK(linear_dispersion(0.5, 0.5, 1e-7).second == doctest::Approx(std::sqrt(1.5)).epsilon(1e-9));
    CHECK_THROWS(linear_dispersion(0.5, 0.5, 0.0));
    CHECK_THROWS(linear_dispersion(0.5, 0.5, 4.0));
  }

  TEST_CASE("linear eigenpair has zero residual and HB recovers it at eta = 0") {
    HBConfig cfg;
    const NondimUnit u{0.5, 0.5, 0.0, 0.0, 0.0};
    for (Branch b : {Branch::kAcoustic, Branch::kOptical}) {
      const auto s = linear_solution(u, 1.3, b, cfg);
      CHECK(galerkin_residual(u, 5.0, 1.3, s.omega_bar, s.lambda, cfg).norm() < 1e-12);
      const auto h = solve_branch(u, 5.0, 1.3, b, cfg);
      const auto r = linear_dispersion(0.5, 0.5, 1.3);
      CHECK(h.omega_bar == doctest::Approx(b == Branch::kAcoustic ? r.first : r.second).epsilon(1e-9));
      CHECK(h.lambda.cwiseAbs().maxCoeff() == doctest::Approx(1.0));
    }
  }

  TEST_CASE("residual of the linear eigenpair scales like eta A^2") {
    HBConfig cfg;
    const double q = 2.0;
    auto res = [&](double eta, double a) {
      const NondimUnit u{0.5, 0.5, eta, 0.0, 0.0};
      const auto s = linear_solution(u, q, Branch::kOptical, cfg);
      return galerkin_residual(u, a, q, s.omega_bar, s.lambda, cfg).norm();
    };
    const double base = res(1e-4, 2.0);
    CHECK(base > 0.0);
    CHECK(std::log(res(1e-4, 4.0) / base) / std::log(2.0) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(std::log(res(4e-4, 2.0) / base) / std::log(4.0) == doctest::Approx(1.0).epsilon(1e-9));
  }

  TEST_CASE("cubic stiffness excites odd harmonics only") {
    HBConfig cfg;
    cfg.n_harmonics = 3;
    const NondimUnit u{0.5, 0.5, 5e-3, 0.0, 0.0};
    const auto s = solve_branch(u, 10.0, 2.5, Branch::kOptical, cfg);
    REQUIRE(s.lambda.size() == 12);
    for (int dof = 0; dof < 2; ++dof) {
      CHECK(std::abs(s.lambda[dof * 6 + 2]) < 1e-8);
      CHECK(std::abs(s.lambda[dof * 6 + 3]) < 1e-8);
    }
    const double third = std::hypot(s.lambda[4], s.lambda[5]) + std::hypot(s.lambda[10], s.lambda[11]);
    CHECK(third > 1e-6);
    HBConfig one;
    const auto s1 = solve_branch(u, 10.0, 2.5, Branch::kOptical, one);
    CHECK(s.omega_bar == doctest::Approx(s1.omega_bar).epsilon(1e-2));
    CHECK(s.residual_norm < 1e-9);
  }

  TEST_CASE("default quadrature is resolved") {
    HBConfig cfg;
    cfg.n_harmonics = 3;
    const NondimUnit u{0.5, 0.5, 5e-4, 0.0, 0.0};
    const auto s = solve_branch(u, 10.0, 1.0, Branch::kAcoustic, cfg);
    CHECK_NOTHROW(check_quadrature(u, 10.0, 1.0, s.omega_bar, s.lambda, cfg));
    HBConfig coarse = cfg;
    coarse.quadrature_points = 20;
    CHECK_THROWS(coarse.validate());
  }

  TEST_CASE("hardening raises both branches") {
    HBConfig cfg;
    const NondimUnit lin{0.5, 0.5, 0.0, 0.0, 0.0};
    const NondimUnit hard{0.5, 0.5, 5e-4, 0.0, 0.0};
    for (Branch b : {Branch::kAcoustic, Branch::kOptical}) {
      const double w0 = solve_branch(lin, 10.0, 2.0, b, cfg).omega_bar;
      const double w1 = solve_branch(hard, 10.0, 2.0, b, cfg).omega_bar;
      CHECK(w1 > w0);
    }
  }

  TEST_CASE("linear band gap on the default grid") {
    HBConfig cfg;
    const auto gap = band_gap(NondimUnit{0.5, 0.5, 0.0, 0.0, 0.0}, 0.0, cfg);
    CHECK(gap.open());
    CHECK(gap.low == doctest::Approx(0.928731).epsilon(1e-6));
    CHECK(std::abs(gap.high - std::sqrt(1.5)) < 1e-3);
  }

  TEST_CASE("damped units are rejected") {
    HBConfig cfg;
    CHECK_THROWS(solve_branch(NondimUnit{0.5, 0.5, 0.0, 0.1, 0.0}, 1.0, 1.0, Branch::kAcoustic, cfg));
  }
}
