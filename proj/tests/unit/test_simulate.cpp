#include <doctest.h>

#include <cmath>
#include <numbers>

#include "resochain/errors.hpp"
#include "resochain/simulate.hpp"

using namespace resochain;

namespace {

SimConfig short_run(double t_end, std::vector<std::size_t> units) {
  SimConfig c;
  c.t_end = t_end;
  c.record_units = std::move(units);
  return c;
}

}  // namespace

TEST_SUITE("simulate") {
  TEST_CASE("excitation sums sines") {
    Excitation e;
    e.amplitude = 2.0;
    e.frequencies = {0.5, 1.25};
    e.phases = {0.0, 0.3};
    const double t = 1.7;
    CHECK(e.displacement(t) == doctest::Approx(2.0 * (std::sin(0.5 * t) + std::sin(1.25 * t + 0.3))));
    CHECK(e.velocity(t) ==
          doctest::Approx(2.0 * (0.5 * std::cos(0.5 * t) + 1.25 * std::cos(1.25 * t + 0.3))));
    e.phases = {0.0};
    CHECK_THROWS(e.validate());
  }

  TEST_CASE("rms helper") {
    const std::vector<double> x{3.0, -4.0, 3.0, -4.0};
    CHECK(rms(x) == doctest::Approx(std::sqrt(12.5)));
    CHECK(rms(x, 1, 2) == doctest::Approx(4.0));
  }

  TEST_CASE("RK4 energy drift of a free undamped nonlinear chain is small") {
    const auto chain = ChainSpec::uniform(NondimUnit{0.5, 0.5, 5e-4, 0.0, 0.0}, 50);
    SimConfig cfg = short_run(200.0, {10});
    ChainState init = ChainState::zeros(50);
    for (std::size_t j = 1; j < 50; ++j) {
      init.v1[j] = std::sin(0.3 * static_cast<double>(j));
      init.v2[j] = 0.5 * std::cos(0.2 * static_cast<double>(j));
    }
    cfg.initial = init;
    Excitation none;
    const auto r = simulate(chain, none, cfg);
    REQUIRE(r.energy_drift.has_value());
    CHECK(*r.energy_drift < 1e-6);
  }

  TEST_CASE("linear chain response is linear in the amplitude") {
    const auto chain = ChainSpec::uniform(NondimUnit{0.5, 0.5, 0.0, 0.0, 0.0}, 80);
    Excitation e1;
    e1.amplitude = 1.0;
    e1.frequencies = {0.7};
    Excitation e3 = e1;
    e3.amplitude = 3.0;
    const auto cfg = short_run(60.0, {5});
    const auto a = simulate(chain, e1, cfg).v1.at(5);
    const auto b = simulate(chain, e3, cfg).v1.at(5);
    double err = 0.0, mag = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      err = std::max(err, std::abs(b[i] - 3.0 * a[i]));
      mag = std::max(mag, std::abs(b[i]));
    }
    CHECK(mag > 0.1);
    CHECK(err < 1e-10 * mag);
  }

  TEST_CASE("RK4 converges at fourth order in dt") {
    const auto chain = ChainSpec::uniform(NondimUnit{0.5, 0.5, 1e-2, 0.0, 0.0}, 30);
    Excitation e;
    e.amplitude = 1.0;
    e.frequencies = {1.1};
    auto final_value = [&](double dt) {
      SimConfig c = short_run(20.0, {3});
      c.dt = dt;
      c.light_cone_pruning = false;
      return simulate(chain, e, c).v1.at(3).back();
    };
    const double ref = final_value(0.0025);
    const double e1 = std::abs(final_value(0.04) - ref);
    const double e2 = std::abs(final_value(0.02) - ref);
    CHECK(e1 / e2 > 10.0);
    CHECK(e1 / e2 < 24.0);
  }

  TEST_CASE("distant units stay at rest before the wave arrives") {
    const auto chain = ChainSpec::uniform(NondimUnit{0.5, 0.5, 5e-4, 0.0, 0.0}, 400);
    Excitation e;
    e.amplitude = 10.0;
    e.frequencies = {1.25};
    SimConfig c = short_run(50.0, {300});
    c.light_cone_pruning = false;
    const auto r = simulate(chain, e, c);
    double peak = 0.0;
    for (double v : r.v1.at(300)) peak = std::max(peak, std::abs(v));
    CHECK(peak < 1e-12);
  }

  TEST_CASE("light-cone pruning does not change the recorded response") {
    const auto chain = ChainSpec::uniform(NondimUnit{0.5, 0.5, 5e-4, 0.0, 0.0}, 600);
    Excitation e;
    e.amplitude = 10.0;
    e.frequencies = {0.5, 1.25};
    SimConfig c = short_run(300.0, {1, 100});
    const auto pruned = simulate(chain, e, c);
    c.light_cone_pruning = false;
    const auto full = simulate(chain, e, c);
    CHECK(pruned.rms.at(100) == doctest::Approx(full.rms.at(100)).epsilon(1e-12));
    const auto& a = pruned.v1.at(100);
    const auto& b = full.v1.at(100);
    REQUIRE(a.size() == b.size());
    double err = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) err = std::max(err, std::abs(a[i] - b[i]));
    CHECK(err < 1e-12);
  }

  TEST_CASE("unit 1 follows the prescribed motion and the RMS window starts after the transient") {
    const auto chain = ChainSpec::uniform(NondimUnit{}, 20);
    Excitation e;
    e.amplitude = 2.0;
    e.frequencies = {0.9};
    SimConfig c = short_run(30.0, {1});
    const auto r = simulate(chain, e, c);
    for (std::size_t i = 0; i < r.tau.size(); i += 97) {
      CHECK(r.v1.at(1)[i] == doctest::Approx(e.displacement(r.tau[i])).epsilon(1e-12));
    }
    CHECK(r.tau[r.window_begin] >= 10.0 - 1e-9);
    CHECK(r.tau[r.window_begin] < 10.0 + 0.03);
  }

  TEST_CASE("spectrum of a pure sine peaks at its frequency") {
    const double dt = 0.05;
    const std::size_t n = 8192;
    // On a DFT bin the single-sided magnitude is exactly the amplitude.
    const double w_bin = 2.0 * std::numbers::pi * 80.0 / (dt * static_cast<double>(n));
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(w_bin * dt * static_cast<double>(i));
    auto lines = spectrum(x, dt);
    CHECK(spectral_peak(lines, w_bin, 0.02) == doctest::Approx(1.0).epsilon(1e-9));
    // Off-bin: rectangular-window scalloping costs at most 4 dB.
    for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(1.25 * dt * static_cast<double>(i));
    lines = spectrum(x, dt);
    const double peak = spectral_peak(lines, 1.25, 0.02);
    CHECK(peak > 0.63);
    CHECK(peak <= 1.0);
    CHECK(spectral_peak(lines, 0.5, 0.02) < 0.05 * peak);
  }

  TEST_CASE("bad settings are rejected") {
    const auto chain = ChainSpec::uniform(NondimUnit{}, 10);
    Excitation e;
    SimConfig c;
    c.record_units = {11};
    CHECK_THROWS(simulate(chain, e, c));
    c.record_units = {1};
    c.dt = -1.0;
    CHECK_THROWS(c.validate());
  }

  TEST_CASE("overflow guard raises a numerical error") {
    const auto chain = ChainSpec::uniform(NondimUnit{0.5, 0.5, 50.0, 0.0, 0.0}, 10);
    Excitation e;
    e.amplitude = 50.0;
    e.frequencies = {1.0};
    SimConfig c = short_run(100.0, {5});
    c.dt = 0.5;
    c.overflow_guard = 1e6;
    CHECK_THROWS_AS(simulate(chain, e, c), NumericalError);
  }
}
