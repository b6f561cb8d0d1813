#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace resochain {

/// Seeded 64-bit generator with platform-independent uniform draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform on the open interval (0, 1).
  double uniform_open() {
    return (static_cast<double>(engine_() >> 12) + 0.5) * 0x1.0p-52;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t next() { return engine_(); }
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }
  /// Independent child stream.
  Rng split() { return Rng(engine_() ^ 0x9e3779b97f4a7c15ULL); }

 private:
  std::mt19937_64 engine_;
};

/// n points of a Latin hypercube in [0,1)^d, row-major (n x d).
std::vector<std::vector<double>> latin_hypercube(std::size_t n, std::size_t d, Rng& rng);

/// Derives a reproducible seed for a named sub-task.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace resochain
