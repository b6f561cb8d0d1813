#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "resochain/chain.hpp"
#include "resochain/field.hpp"

using namespace resochain;

TEST_SUITE("chain") {
  TEST_CASE("nondimensional groups") {
    DimensionalUnit d{2.0, 1.0, 8.0, 4.0, 3.0, 0.4, 0.2, 0.5};
    const NondimUnit u = nondimensionalize(d);
    const double w1 = std::sqrt(8.0 / 2.0);
    CHECK(reference_frequency(d) == doctest::Approx(w1));
    CHECK(u.alpha == doctest::Approx(0.5));
    CHECK(u.epsilon == doctest::Approx(0.5));
    CHECK(u.eta == doctest::Approx(3.0 * 0.25 / (2.0 * w1 * w1)));
    CHECK(u.xi1 == doctest::Approx(0.4 / (2.0 * w1)));
    CHECK(u.xi2 == doctest::Approx(0.2 / (2.0 * w1)));
  }

  TEST_CASE("invalid units are rejected") {
    CHECK_THROWS_AS(NondimUnit({-0.1, 0.5, 0, 0, 0}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(NondimUnit({0.5, 0.0, 0, 0, 0}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(ChainSpec::uniform(NondimUnit{}, 1), std::invalid_argument);
    DimensionalUnit bad;
    bad.m1 = 0.0;
    CHECK_THROWS(nondimensionalize(bad));
  }

  TEST_CASE("rhs of a three-unit chain matches hand-derived forces") {
    const NondimUnit u{0.5, 0.25, 0.1, 0.0, 0.0};
    const auto chain = ChainSpec::uniform(u, 3);
    ChainState s = ChainState::zeros(3);
    s.v1 = {0.1, 0.3, -0.2};
    s.v2 = {0.0, 0.1, 0.4};
    PrescribedMotion p{0.1, 0.0, 0};
    const auto acc = eom_rhs(chain, s, p);
    // Unit 2 (index 1): neighbours 0.1 and -0.2, internal spring stretch 0.1 - 0.3.
    const double r1 = s.v2[1] - s.v1[1];
    const double a1 = (s.v1[0] - 2 * s.v1[1] + s.v1[2]) + u.alpha * r1 + u.eta * r1 * r1 * r1;
    CHECK(acc.a1[1] == doctest::Approx(a1).epsilon(1e-14));
    CHECK(acc.a2[1] == doctest::Approx(-(u.alpha * r1 + u.eta * r1 * r1 * r1) / u.epsilon).epsilon(1e-14));
    // Free end: unit 3 has only its left neighbour.
    const double r2 = s.v2[2] - s.v1[2];
    CHECK(acc.a1[2] == doctest::Approx((s.v1[1] - s.v1[2]) + u.alpha * r2 + u.eta * r2 * r2 * r2).epsilon(1e-14));
    CHECK(acc.a1[0] == 0.0);
  }

  TEST_CASE("energy is positive and counts the quartic term") {
    const NondimUnit u{0.5, 0.5, 0.2, 0.0, 0.0};
    const auto chain = ChainSpec::uniform(u, 2);
    std::vector<double> v1{0.0, 0.0}, v2{0.0, 1.0}, z{0.0, 0.0};
    // Only the internal spring of unit 2 is stretched by 1.
    CHECK(total_energy(chain, v1, v2, z, z) == doctest::Approx(0.5 * 0.5 + 0.25 * 0.2));
  }
}

TEST_SUITE("field") {
  TEST_CASE("single-term field") {
    const auto f = FieldSpec::single(0.2, 0.3, 0.5);
    for (double x : {1.0, 2.0, 17.0}) {
      const double s = std::sin(0.5 * x);
      CHECK(f(x) == doctest::Approx(0.2 + 0.3 * s * s));
      CHECK(field_eval(f, x) == f(x));
    }
    CHECK(f.upper_bound() == doctest::Approx(0.5));
    CHECK(FieldSpec::constant(0.7)(123.0) == 0.7);
  }

  TEST_CASE("chain expansion uses 1-based unit positions") {
    const auto chain = expand_to_chain(FieldSpec::single(0.1, 0.2, 0.3), FieldSpec::constant(0.5),
                                       FieldSpec::constant(0.0), 5);
    REQUIRE(chain.size() == 5);
    for (std::size_t j = 0; j < 5; ++j) {
      const double s = std::sin(0.3 * static_cast<double>(j + 1));
      CHECK(chain[j].alpha == doctest::Approx(0.1 + 0.2 * s * s));
      CHECK(chain[j].epsilon == 0.5);
    }
  }

  TEST_CASE("non-positive mass ratios are rejected") {
    CHECK_THROWS(expand_to_chain(FieldSpec::constant(0.5), FieldSpec::constant(0.0),
                                 FieldSpec::constant(0.0), 4));
  }
}
