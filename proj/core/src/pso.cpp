#include "resochain/pso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "resochain/random.hpp"

namespace resochain {

void PsoConfig::validate() const {
  if (swarm_size < 10) throw std::invalid_argument("PsoConfig: swarm_size must be >= 10");
  if (!(inertia > 0.0 && cognitive > 0.0 && social > 0.0)) {
    throw std::invalid_argument("PsoConfig: weights must be positive");
  }
  if (iterations == 0) throw std::invalid_argument("PsoConfig: iterations must be >= 1");
}

PsoResult pso_minimize(const Objective& f, std::span<const double> lower,
                       std::span<const double> upper, const PsoConfig& cfg,
                       std::uint64_t seed, std::span<const std::vector<double>> seeds) {
  cfg.validate();
  const std::size_t d = lower.size();
  if (upper.size() != d || d == 0) throw std::invalid_argument("pso_minimize: bad bounds");
  for (std::size_t k = 0; k < d; ++k) {
    if (!std::isfinite(lower[k]) || !std::isfinite(upper[k]) || !(lower[k] <= upper[k])) {
      throw std::invalid_argument("pso_minimize: bounds must be finite with lower <= upper");
    }
  }
  Rng rng(seed);
  const std::size_t m = cfg.swarm_size;
  std::vector<std::vector<double>> pos(m, std::vector<double>(d)), vel = pos, pbest;
  std::vector<double> pbest_val(m);
  std::vector<double> vmax(d);
  for (std::size_t k = 0; k < d; ++k) vmax[k] = cfg.max_velocity_fraction * (upper[k] - lower[k]);

  PsoResult res{std::vector<double>(d), std::numeric_limits<double>::infinity()};
  auto evaluate = [&](const std::vector<double>& x) {
    ++res.evaluations;
    const double v = f(x);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };

  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      pos[i][k] = rng.uniform(lower[k], upper[k]);
      vel[i][k] = 0.5 * rng.uniform(-vmax[k], vmax[k]);
    }
    if (i < seeds.size()) {
      for (std::size_t k = 0; k < d; ++k) pos[i][k] = std::clamp(seeds[i][k], lower[k], upper[k]);
    }
  }
  pbest = pos;
  for (std::size_t i = 0; i < m; ++i) {
    pbest_val[i] = evaluate(pos[i]);
    if (pbest_val[i] < res.value) {
      res.value = pbest_val[i];
      res.best = pos[i];
    }
  }

  std::size_t stall = 0;
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const double before = res.value;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t k = 0; k < d; ++k) {
        const double r1 = rng.uniform(), r2 = rng.uniform();
        double v = cfg.inertia * vel[i][k] + cfg.cognitive * r1 * (pbest[i][k] - pos[i][k]) +
                   cfg.social * r2 * (res.best[k] - pos[i][k]);
        v = std::clamp(v, -vmax[k], vmax[k]);
        double x = pos[i][k] + v;
        if (x < lower[k]) { x = lower[k]; v = 0.0; }
        if (x > upper[k]) { x = upper[k]; v = 0.0; }
        vel[i][k] = v;
        pos[i][k] = x;
      }
      const double val = evaluate(pos[i]);
      if (val < pbest_val[i]) {
        pbest_val[i] = val;
        pbest[i] = pos[i];
        if (val < res.value) {
          res.value = val;
          res.best = pos[i];
        }
      }
    }
    res.iterations = it + 1;
    if (cfg.stall_iterations > 0) {
      const double gain = before - res.value;
      if (gain <= cfg.stall_tolerance * std::max(std::abs(before), 1e-300)) {
        if (++stall >= cfg.stall_iterations) break;
      } else {
        stall = 0;
      }
    }
  }
  return res;
}

}  // namespace resochain
