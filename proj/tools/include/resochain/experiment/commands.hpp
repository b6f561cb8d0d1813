#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "resochain/experiment/config.hpp"

namespace resochain::experiment {

struct RunOptions {
  std::optional<std::uint64_t> seed;
  double scale = 1.0;
  std::optional<std::filesystem::path> out;
  /// Optimization result for validate/robustness; defaults to
  /// <out>/result.json.
  std::optional<std::filesystem::path> state;
  std::ostream* log = nullptr;
};

struct RunReport {
  std::filesystem::path out;
  std::vector<std::string> files;
  nlohmann::json summary;
};

RunReport cmd_simulate(ExperimentConfig cfg, const RunOptions& opts);
RunReport cmd_dispersion(ExperimentConfig cfg, const RunOptions& opts);
RunReport cmd_optimize(ExperimentConfig cfg, const RunOptions& opts);
RunReport cmd_validate(ExperimentConfig cfg, const RunOptions& opts);
RunReport cmd_robustness(ExperimentConfig cfg, const RunOptions& opts);

/// Design vector of the config's problem with every entry at its reference
/// value (field offsets at the reference property, amplitudes and rates 0),
/// then overridden by `overrides`.
std::vector<double> reference_design(const ExperimentConfig& cfg,
                                     const std::map<std::string, double>& overrides = {});

/// Aleatory vector matching the config's excitation block.
std::vector<double> nominal_aleatory(const ExperimentConfig& cfg);

}  // namespace resochain::experiment
