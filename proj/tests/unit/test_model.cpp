#include <doctest.h>

#include <cmath>

#include "resochain/errors.hpp"
#include "resochain/model.hpp"

using namespace resochain;

namespace {

ChainModel small_model() {
  ChainModel m;
  m.n_units = 120;
  m.response_unit = 10;
  m.sim.t_end = 40.0;
  m.excitation.amplitude = 1.0;
  m.excitation.frequencies = {0.5, 1.25};
  m.design_names = {"alpha", "eta"};
  m.aleatory_names = {"amplitude", "omega2"};
  return m;
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("constant design and aleatory mapping") {
    const auto m = small_model();
    CHECK_NOTHROW(m.validate());
    const std::vector<double> design{0.3, 2e-4};
    const auto chain = m.chain(design);
    CHECK(chain.size() == 120);
    CHECK(chain[7].alpha == 0.3);
    CHECK(chain[7].eta == 2e-4);
    CHECK(chain[7].epsilon == m.reference.epsilon);
    const auto e = m.excitation_at(std::vector<double>{9.0, 1.26});
    CHECK(e.amplitude == 9.0);
    CHECK(e.frequencies == std::vector<double>{0.5, 1.26});
  }

  TEST_CASE("field design mapping") {
    ChainModel m = small_model();
    m.mode = ParameterMode::kField;
    m.design_names = {"alpha.a1", "alpha.a2", "alpha.a3", "epsilon.a1"};
    m.aleatory_names = {"amplitude"};
    const std::vector<double> d{0.1, 0.2, 0.3, 0.8};
    const auto chain = m.chain(d);
    for (std::size_t j : {0u, 4u, 99u}) {
      const double s = std::sin(0.3 * static_cast<double>(j + 1));
      CHECK(chain[j].alpha == doctest::Approx(0.1 + 0.2 * s * s));
      CHECK(chain[j].epsilon == doctest::Approx(0.8));
      CHECK(chain[j].eta == m.reference.eta);
    }
    const auto f = field_for(m, "epsilon", d);
    CHECK(f.offset == 0.8);
    const auto g = field_for(m, "eta", d);
    CHECK(g(5.0) == m.reference.eta);
  }

  TEST_CASE("unknown, duplicate and misplaced names are rejected") {
    ChainModel m = small_model();
    m.design_names = {"alpha", "alpha"};
    CHECK_THROWS_AS(m.validate(), ConfigError);
    m.design_names = {"stiffness"};
    CHECK_THROWS_AS(m.validate(), ConfigError);
    m.design_names = {"alpha.a1"};
    CHECK_THROWS_AS(m.validate(), ConfigError);
    m = small_model();
    m.aleatory_names = {"omega3"};
    CHECK_THROWS_AS(m.validate(), ConfigError);
  }

  TEST_CASE("response is the RMS of the response unit") {
    const auto m = small_model();
    const std::vector<double> x{0.5, 1e-4, 1.0, 1.25};
    const double f = m.response(x);
    const auto r = m.run(x);
    CHECK(f == r.rms.at(10));
    CHECK(f > 0.0);
    CHECK(m.as_model()(x) == f);
    CHECK_THROWS(m.response(std::vector<double>{0.5}));
  }
}
