#pragma once

#include <optional>
#include <span>
#include <vector>

namespace resochain {

/// Two-cluster split of scalar responses. Label -1 marks the cluster with
/// the lower mean.
struct Clustering {
  std::vector<int> labels;
  double low_mean = 0.0, high_mean = 0.0;
  double low_std = 0.0, high_std = 0.0;
  std::size_t n_low = 0, n_high = 0;
  double wcss = 0.0;  ///< within-cluster sum of squares

  /// (high_mean - low_mean) / max(low_std, high_std); infinite when both
  /// clusters are constant.
  double separation_ratio() const;
};

/// Two-means split of 1-D data. The optimal partition is a threshold on the
/// sorted responses, so every cut is scored exactly with prefix sums; the
/// result is the global WCSS minimum (a fixed point of Lloyd's iteration).
/// Returns nullopt when all responses are identical.
std::optional<Clustering> kmeans2(std::span<const double> responses);

}  // namespace resochain
