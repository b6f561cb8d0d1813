#include "resochain/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>


namespace resochain {

double Clustering::separation_ratio() const {
  const double s = std::max(low_std, high_std);
  const double gap = high_mean - low_mean;
  if (s == 0.0) return gap > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return gap / s;
}

std::optional<Clustering> kmeans2(std::span<const double> responses) {
  const std::size_t n = responses.size();
  if (n < 2) throw std::invalid_argument("kmeans2: need at least 2 responses");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return responses[a] < responses[b]; });
  if (!(responses[order.back()] > responses[order.front()])) return std::nullopt;

  // Prefix sums of the sorted values and their squares.
  std::vector<double> s1(n + 1, 0.0), s2(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = responses[order[i]];
    s1[i + 1] = s1[i] + v;
    s2[i + 1] = s2[i] + v * v;
  }
  auto sse = [&](std::size_t b, std::size_t e) {
    const double m = static_cast<double>(e - b);
    const double sum = s1[e] - s1[b];
    return std::max(0.0, (s2[e] - s2[b]) - sum * sum / m);
  };
  std::size_t best_cut = 0;
  double best_wcss = std::numeric_limits<double>::infinity();
  for (std::size_t cut = 1; cut < n; ++cut) {
    // Equal values must share a cluster.
    if (responses[order[cut]] == responses[order[cut - 1]]) continue;
    const double w = sse(0, cut) + sse(cut, n);
    if (w < best_wcss) {
      best_wcss = w;
      best_cut = cut;
    }
  }
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[order[i]] = i < best_cut ? 0 : 1;

  Clustering c;
  double s[2] = {0, 0}, ss[2] = {0, 0};
  std::size_t cnt[2] = {0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    const int l = labels[i];
    s[l] += responses[i];
    ss[l] += responses[i] * responses[i];
    ++cnt[l];
  }
  if (cnt[0] == 0 || cnt[1] == 0) return std::nullopt;
  double mean[2], sd[2];
  for (int k = 0; k < 2; ++k) {
    mean[k] = s[k] / static_cast<double>(cnt[k]);
    sd[k] = std::sqrt(std::max(0.0, ss[k] / static_cast<double>(cnt[k]) - mean[k] * mean[k]));
  }
  const int low = mean[0] <= mean[1] ? 0 : 1;
  c.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) c.labels[i] = labels[i] == low ? -1 : 1;
  c.low_mean = mean[low];
  c.high_mean = mean[1 - low];
  c.low_std = sd[low];
  c.high_std = sd[1 - low];
  c.n_low = cnt[low];
  c.n_high = cnt[1 - low];
  c.wcss = best_wcss;
  return c;
}

}  // namespace resochain
