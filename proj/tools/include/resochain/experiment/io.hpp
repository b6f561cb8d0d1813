#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "resochain/optimizer.hpp"

namespace resochain::experiment {

nlohmann::json to_json(const Evaluation& e);
nlohmann::json to_json(const IterationRecord& r);
nlohmann::json to_json(const OptState& s);
OptState opt_state_from_json(const nlohmann::json& j);

/// Model snapshot: expanded space, SVM support vectors and Kriging training
/// data with hyperparameters. Loading rebuilds the models exactly.
nlohmann::json to_json(const SurrogateEnsemble& ens);
SurrogateEnsemble ensemble_from_json(const nlohmann::json& j);

/// Collects output files of one run and writes them under a directory.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path root);
  const std::filesystem::path& root() const { return root_; }
  /// Writes atomically (temporary file then rename) and records the path.
  void write(const std::string& name, const std::string& content);
  const std::vector<std::string>& files() const { return files_; }

 private:
  std::filesystem::path root_;
  std::vector<std::string> files_;
};

/// Equal-width histogram of `values` as CSV rows bin_lo,bin_hi,count.
std::string histogram_csv(const std::vector<double>& values, std::size_t bins);
/// Empirical CDF as CSV rows value,probability.
std::string ecdf_csv(const std::vector<double>& values);

}  // namespace resochain::experiment
