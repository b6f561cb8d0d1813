#include "resochain/simulate.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <iomanip>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>

#include "resochain/errors.hpp"

namespace resochain {

void Excitation::validate() const {
  if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) {
    throw std::invalid_argument("Excitation: amplitude must be finite and >= 0");
  }
  if (frequencies.empty()) {
    throw std::invalid_argument("Excitation: at least one frequency is required");
  }
  for (double w : frequencies) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("Excitation: frequencies must be positive");
    }
  }
  if (!phases.empty() && phases.size() != frequencies.size()) {
    throw std::invalid_argument("Excitation: phases and frequencies differ in length");
  }
}

double Excitation::displacement(double tau) const {
  double s = 0.0;
  for (std::size_t i = 0; i < frequencies.size(); ++i) {
    const double phi = phases.empty() ? 0.0 : phases[i];
    s += std::sin(frequencies[i] * tau + phi);
  }
  return amplitude * s;
}

double Excitation::velocity(double tau) const {
  double s = 0.0;
  for (std::size_t i = 0; i < frequencies.size(); ++i) {
    const double phi = phases.empty() ? 0.0 : phases[i];
    s += frequencies[i] * std::cos(frequencies[i] * tau + phi);
  }
  return amplitude * s;
}

void SimConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("SimConfig: dt must be positive");
  if (!(t_end > dt)) throw std::invalid_argument("SimConfig: t_end must exceed dt");
  if (!(transient_fraction >= 0.0 && transient_fraction < 1.0)) {
    throw std::invalid_argument("SimConfig: transient_fraction must lie in [0, 1)");
  }
  if (record_stride == 0) {
    throw std::invalid_argument("SimConfig: record_stride must be >= 1");
  }
}

namespace {

// Per-unit coefficients laid out for the integration kernel.
struct Coefficients {
  explicit Coefficients(const ChainSpec& chain) {
    const std::size_t n = chain.size();
    alpha.resize(n);
    inv_eps.resize(n);
    eta.resize(n);
    xi1.resize(n);
    xi2.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      alpha[j] = chain[j].alpha;
      inv_eps[j] = 1.0 / chain[j].epsilon;
      eta[j] = chain[j].eta;
      xi1[j] = chain[j].xi1;
      xi2[j] = chain[j].xi2;
    }
    damped = !chain.undamped();
  }
  std::vector<double> alpha, inv_eps, eta, xi1, xi2;
  bool damped = false;
};

// Packed state layout: [v1 | v2 | v1dot | v2dot], each block of length n.
// Writes the time derivative of y into dy for units [0, active); units past
// `active` are at rest and stay untouched.
void derivative(const Coefficients& c, std::size_t n, std::size_t active,
                std::vector<double>& y, double disp, double vel,
                std::vector<double>& dy) {
  y[0] = disp;
  y[2 * n] = vel;
  const double* v1 = y.data();
  const double* v2 = v1 + n;
  const double* w1 = v1 + 2 * n;
  const double* w2 = v1 + 3 * n;
  double* d1 = dy.data();
  double* d2 = d1 + n;
  double* a1 = d1 + 2 * n;
  double* a2 = d1 + 3 * n;
  const std::size_t m = std::min(active, n);
  for (std::size_t j = 0; j < m; ++j) {
    d1[j] = w1[j];
    d2[j] = w2[j];
  }
  if (!c.damped) {
    for (std::size_t j = 0; j < m; ++j) {
      const double rel = v2[j] - v1[j];
      const double f = rel * (c.alpha[j] + c.eta[j] * rel * rel);
      const double left = j > 0 ? v1[j - 1] : v1[j];
      const double right = j + 1 < n ? v1[j + 1] : v1[j];
      a2[j] = -f * c.inv_eps[j];
      a1[j] = f + left + right - 2.0 * v1[j];
    }
  } else {
    for (std::size_t j = 0; j < m; ++j) {
      const double rel = v2[j] - v1[j];
      const double rel_dot = w2[j] - w1[j];
      const double f = rel * (c.alpha[j] + c.eta[j] * rel * rel) + c.xi2[j] * rel_dot;
      a2[j] = -f * c.inv_eps[j];
      double a = f;
      if (j > 0) a += (v1[j - 1] - v1[j]) + c.xi1[j - 1] * (w1[j - 1] - w1[j]);
      if (j + 1 < n) a += (v1[j + 1] - v1[j]) + c.xi1[j] * (w1[j + 1] - w1[j]);
      a1[j] = a;
    }
  }
  a1[0] = 0.0;
}

}  // namespace

SimResult simulate(const ChainSpec& chain, const Excitation& exc,
                   const SimConfig& cfg) {
  exc.validate();
  cfg.validate();
  const std::size_t n = chain.size();
  for (std::size_t u : cfg.record_units) {
    if (u < 1 || u > n) {
      throw std::invalid_argument("simulate: record unit " + std::to_string(u) +
                                  " outside 1.." + std::to_string(n));
    }
  }

  std::vector<double> y(4 * n, 0.0), tmp(4 * n, 0.0), k1(4 * n, 0.0),
      k2(4 * n, 0.0), k3(4 * n, 0.0), k4(4 * n, 0.0);
  if (cfg.initial) {
    const ChainState& s = *cfg.initial;
    if (s.v1.size() != n || s.v2.size() != n || s.v1dot.size() != n ||
        s.v2dot.size() != n) {
      throw std::invalid_argument("simulate: initial state does not match chain");
    }
    std::copy(s.v1.begin(), s.v1.end(), y.begin());
    std::copy(s.v2.begin(), s.v2.end(), y.begin() + n);
    std::copy(s.v1dot.begin(), s.v1dot.end(), y.begin() + 2 * n);
    std::copy(s.v2dot.begin(), s.v2dot.end(), y.begin() + 3 * n);
  }
  const double t0 = cfg.initial ? cfg.initial->tau : 0.0;
  y[0] = exc.displacement(t0);
  y[2 * n] = exc.velocity(t0);

  const auto steps = static_cast<std::size_t>(std::llround((cfg.t_end - t0) / cfg.dt));
  const double dt = cfg.dt;
  const Coefficients coef(chain);

  SimResult res;
  res.steps = steps;
  const std::size_t n_samples = steps / cfg.record_stride + 1;
  res.tau.reserve(n_samples);
  for (std::size_t u : cfg.record_units) {
    res.v1[u].reserve(n_samples);
    if (cfg.record_internal) res.v2[u].reserve(n_samples);
  }
  auto record = [&](double tau) {
    res.tau.push_back(tau);
    for (std::size_t u : cfg.record_units) {
      res.v1[u].push_back(y[u - 1]);
      if (cfg.record_internal) res.v2[u].push_back(y[n + u - 1]);
    }
  };

  const bool track_energy = chain.undamped() && exc.amplitude == 0.0;
  auto energy = [&] {
    std::span<const double> all(y);
    return total_energy(chain, all.subspan(0, n), all.subspan(n, n),
                        all.subspan(2 * n, n), all.subspan(3 * n, n));
  };
  const double e0 = track_energy ? energy() : 0.0;
  double drift = 0.0;

  // Starting from rest, a disturbance cannot outrun the main-chain signal
  // speed (1 unit per unit time) by more than a slowly widening dispersive
  // tail. Units ahead of the front are still at rest, and units too far away
  // to send a reflection back to a recorded unit before t_end can be frozen.
  const bool prune = cfg.light_cone_pruning && !cfg.initial && !track_energy;
  std::size_t last_recorded = 1;
  for (std::size_t u : cfg.record_units) last_recorded = std::max(last_recorded, u);
  auto active_units = [&](double tau) -> std::size_t {
    if (!prune) return n;
    auto reach = [](double t) { return t + 40.0 + 12.0 * std::cbrt(std::max(t, 0.0)); };
    const double front = reach(tau + dt) + 2.0;
    const double back = static_cast<double>(last_recorded) + reach(cfg.t_end - tau) + 2.0;
    const double m = std::min(front, back);
    return m >= static_cast<double>(n) ? n : static_cast<std::size_t>(m);
  };

  record(t0);
  const std::size_t check_every = 200;
  for (std::size_t step = 1; step <= steps; ++step) {
    const double t = t0 + static_cast<double>(step - 1) * dt;
    const double th = t + 0.5 * dt;
    const double t1 = t + dt;
    const std::size_t m = active_units(t);
    auto stage = [&](const std::vector<double>& k, double h) {
      for (std::size_t b = 0; b < 4; ++b) {
        const std::size_t off = b * n;
        for (std::size_t j = 0; j < m; ++j) tmp[off + j] = y[off + j] + h * k[off + j];
      }
    };
    derivative(coef, n, m, y, exc.displacement(t), exc.velocity(t), k1);
    stage(k1, 0.5 * dt);
    const double dh = exc.displacement(th);
    const double vh = exc.velocity(th);
    derivative(coef, n, m, tmp, dh, vh, k2);
    stage(k2, 0.5 * dt);
    derivative(coef, n, m, tmp, dh, vh, k3);
    stage(k3, dt);
    const double d1 = exc.displacement(t1);
    const double v1 = exc.velocity(t1);
    derivative(coef, n, m, tmp, d1, v1, k4);
    const double w = dt / 6.0;
    for (std::size_t b = 0; b < 4; ++b) {
      const std::size_t off = b * n;
      for (std::size_t j = 0; j < m; ++j) {
        const std::size_t i = off + j;
        y[i] += w * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
      }
    }
    y[0] = d1;
    y[2 * n] = v1;

    if (step % check_every == 0 || step == steps) {
      double vmax = 0.0;
      for (double x : y) {
        // std::max would drop NaN.
        if (!(std::abs(x) <= vmax)) vmax = std::isnan(x) ? std::numeric_limits<double>::infinity() : std::abs(x);
      }
      if (!(vmax <= cfg.overflow_guard)) {
        std::ostringstream msg;
        msg << "simulate: response exceeded overflow guard " << cfg.overflow_guard
            << " by step " << step << " (tau=" << t1 << "); try a smaller dt than "
            << dt;
        throw NumericalError(msg.str());
      }
      if (track_energy && e0 > 0.0) {
        drift = std::max(drift, std::abs(energy() - e0) / e0);
      }
    }
    if (step % cfg.record_stride == 0) record(t1);
  }

  if (track_energy) res.energy_drift = drift;
  const std::size_t total = res.tau.size();
  res.window_begin = std::min(
      total - 1, static_cast<std::size_t>(std::floor(cfg.transient_fraction *
                                                     static_cast<double>(total))));
  for (const auto& [u, series] : res.v1) {
    res.rms[u] = rms(series, res.window_begin, total);
  }
  return res;
}

double rms(std::span<const double> series, std::size_t begin, std::size_t end) {
  if (end > series.size() || begin >= end) {
    throw std::invalid_argument("rms: empty or out-of-range window");
  }
  double acc = 0.0;
  for (std::size_t i = begin; i < end; ++i) acc += series[i] * series[i];
  return std::sqrt(acc / static_cast<double>(end - begin));
}

double rms(std::span<const double> series) { return rms(series, 0, series.size()); }

std::vector<SpectrumLine> spectrum(std::span<const double> series, double dt) {
  const std::size_t n = series.size();
  if (n < 4) throw std::invalid_argument("spectrum: need at least 4 samples");
  if (!(dt > 0.0)) throw std::invalid_argument("spectrum: dt must be positive");
  const std::size_t n_out = n / 2 + 1;
  std::vector<double> in(series.begin(), series.end());
  std::unique_ptr<fftw_complex[], decltype(&fftw_free)> out(
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n_out)),
      &fftw_free);
  fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(), out.get(),
                                        FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);

  std::vector<SpectrumLine> lines(n_out);
  const double dn = static_cast<double>(n);
  const double d_omega = 2.0 * std::numbers::pi / (dn * dt);
  for (std::size_t k = 0; k < n_out; ++k) {
    const double mag = std::hypot(out[k][0], out[k][1]);
    const bool edge = (k == 0) || (n % 2 == 0 && k == n_out - 1);
    lines[k] = {static_cast<double>(k) * d_omega, (edge ? 1.0 : 2.0) * mag / dn};
  }
  return lines;
}

double spectral_peak(std::span<const SpectrumLine> lines, double omega_bar,
                     double half_width) {
  double best = 0.0;
  for (const auto& l : lines) {
    if (std::abs(l.omega_bar - omega_bar) <= half_width) best = std::max(best, l.magnitude);
  }
  return best;
}

void write_trajectory_csv(std::ostream& os, const SimResult& result) {
  os << "tau";
  for (const auto& [u, _] : result.v1) {
    os << ",v1_" << u;
    if (result.v2.count(u)) os << ",v2_" << u;
  }
  os << '\n';
  os << std::setprecision(10);
  for (std::size_t i = 0; i < result.tau.size(); ++i) {
    os << result.tau[i];
    for (const auto& [u, series] : result.v1) {
      os << ',' << series[i];
      if (auto it = result.v2.find(u); it != result.v2.end()) os << ',' << it->second[i];
    }
    os << '\n';
  }
}

}  // namespace resochain
