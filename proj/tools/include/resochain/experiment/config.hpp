#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "resochain/chain.hpp"
#include "resochain/dispersion.hpp"
#include "resochain/model.hpp"
#include "resochain/optimizer.hpp"
#include "resochain/uncertainty.hpp"

namespace resochain::experiment {

inline constexpr int kSchemaVersion = 1;

/// Design variable as written in a config: either raw realization bounds
/// (lo, hi), from which the feasible mean range is derived, or the mean
/// range itself (mu_min, mu_max).
struct DesignEntry {
  std::string name;
  std::optional<double> lo, hi;
  std::optional<double> mu_min, mu_max;
  double cov = 0.02;

  DesignVariable resolve() const;
};

struct ProblemBlock {
  ParameterMode mode = ParameterMode::kConstant;
  std::vector<DesignEntry> design;
  std::vector<AleatoryVariable> aleatory;
};

struct SimBlock {
  double dt = 0.02;
  double t_end = 1500.0;
  double transient_fraction = 1.0 / 3.0;
  std::size_t response_unit = 100;
  double overflow_guard = 1e8;
  bool light_cone_pruning = true;
};

struct SweepBlock {
  std::string parameter;  ///< a design name of the problem mode
  std::vector<double> values;
};

/// Inputs of the `simulate` subcommand beyond the reference chain.
struct SimulateBlock {
  std::map<std::string, double> design;  ///< overrides of the reference design
  std::vector<std::size_t> record_units{1, 100};
  bool write_trajectory = false;
  bool write_spectrum = false;
  std::size_t record_stride = 1;
  std::optional<SweepBlock> sweep;
};

struct OptimizerBlock {
  std::uint64_t seed = 1;
  std::size_t doe_size = 10;
  std::size_t max_iterations = 30;
  std::size_t n_mc = 10000;
  std::size_t n_mc_search = 1000;
  double convergence_tol = 1e-2;
  std::size_t convergence_window = 5;
  std::size_t pso_swarm = 50;
  std::size_t pso_iterations = 100;
  std::size_t pso_stall_iterations = 0;
  double svm_C = 100.0;
  std::optional<double> svm_sigma;
  double maxmin_p = 100.0;
  double maxmin_tolerance = 1e-3;
  double single_cluster_ratio = 4.0;

  OptimizerConfig resolve() const;
};

struct ValidationBlock {
  std::size_t n_histogram_runs = 100;
  std::size_t n_mc = 10000;
  std::size_t n_mc_true = 200;
  std::size_t bins = 20;
};

struct RobustnessBlock {
  std::size_t n_samples = 200;
  std::size_t bins = 20;
};

struct DispersionBlock {
  std::size_t n_harmonics = 1;
  std::size_t quadrature_points = 0;
  double newton_tol = 1e-10;
  std::size_t max_newton_iters = 50;
  std::size_t continuation_steps = 50;
  std::vector<double> amplitudes{0.0, 2.5, 5.0, 7.5, 10.0};
  std::vector<double> etas{0.0, 1e-4, 5e-4};

  HBConfig resolve() const;
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  std::string name;
  std::size_t n_units = 1000;
  NondimUnit reference;
  std::optional<DimensionalUnit> dimensional;
  Excitation excitation;
  SimBlock sim;
  ProblemBlock problem;
  SimulateBlock simulate;
  OptimizerBlock optimizer;
  ValidationBlock validation;
  RobustnessBlock robustness;
  DispersionBlock dispersion;
  std::string output_dir = "out";

  /// Resolved views; throw ConfigError on inconsistent input.
  ProblemSpec problem_spec() const;
  ChainModel chain_model() const;
  SimConfig sim_config() const;
  void validate() const;

  /// Shrinks chain length, time window and budgets by `factor` in (0, 1].
  void apply_scale(double factor);
};

/// Parses a config document; unknown keys and type mismatches raise
/// ConfigError naming the offending path.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig parse_config_text(const std::string& text, const std::string& source = "<string>");
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& cfg);

/// FNV-1a 64-bit hash of the canonical serialization.
std::string config_hash(const ExperimentConfig& cfg);

/// Full-scale configurations of the three reproduction problems (1, 2, 3).
ExperimentConfig preset(int problem);

}  // namespace resochain::experiment
