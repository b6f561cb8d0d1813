#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "resochain/kmeans.hpp"
#include "resochain/kriging.hpp"
#include "resochain/pso.hpp"
#include "resochain/svm.hpp"
#include "resochain/uncertainty.hpp"

namespace resochain {

/// Black-box response F(x) at a physical point x = (design realization,
/// aleatory values). Throwing marks the evaluation as failed.
using Model = std::function<double(std::span<const double>)>;

struct EnsembleOptions {
  SvmOptions svm;
  KrigingOptions kriging;
  /// Responses whose two k-means clusters are separated by less than this
  /// many within-cluster standard deviations are treated as one cluster.
  double single_cluster_ratio = 4.0;
  std::size_t min_cluster_size = 2;
};

/// SVM-partitioned pair of Kriging models over the unit cube of the
/// expanded space. In single-cluster mode there is no SVM and both Krigings
/// are the same model.
class SurrogateEnsemble {
 public:
  ExpandedSpace space;
  std::optional<SvmModel> svm;
  KrigingModel kriging_low;   ///< used where s(x) <= 0
  KrigingModel kriging_high;  ///< used where s(x) > 0
  std::optional<Clustering> clustering;

  bool single_cluster() const { return !svm.has_value(); }
  /// s(u) at a unit-cube point; -1 in single-cluster mode.
  double decision_unit(std::span<const double> u) const;
  double predict_unit(std::span<const double> u) const;
  /// Larger of the two Kriging variances.
  double variance_unit(std::span<const double> u) const;
  double predict(std::span<const double> x) const;
};

/// Clusters y, trains the SVM on the labels and one Kriging per label.
/// Rows of x are physical points inside `space`.
SurrogateEnsemble fit_ensemble(const ExpandedSpace& space, const Eigen::MatrixXd& x,
                               const Eigen::VectorXd& y, const EnsembleOptions& opts = {});

/// n x dim matrix of open-interval uniforms driving Monte-Carlo estimates.
Eigen::MatrixXd mc_uniforms(std::size_t n, std::size_t dim, std::uint64_t seed);

/// Mixture estimate of E(F) at design mean mu: each row of u is mapped
/// through the marginals at mu and routed to kriging_low when s <= 0, else
/// kriging_high. Throws ConfigError when mu is infeasible.
double expected_value(const SurrogateEnsemble& ens, std::span<const double> mu,
                      const ProblemSpec& problem, const Eigen::MatrixXd& u);
double expected_value(const SurrogateEnsemble& ens, std::span<const double> mu,
                      const ProblemSpec& problem, std::size_t n_mc, std::uint64_t seed);

/// Aleatory point maximizing the larger Kriging variance at design mu.
std::vector<double> max_variance_aleatory(const SurrogateEnsemble& ens,
                                          std::span<const double> mu,
                                          const ProblemSpec& problem, const PsoConfig& pso,
                                          std::uint64_t seed);

struct MaxMinOptions {
  double p = 100.0;
  double tolerance = 1e-3;  ///< on |s| in unit-cube space
  double z_bound = 4.0;     ///< search box in standard-normal space
  PsoConfig pso;
};

struct MaxMinResult {
  std::vector<double> x;  ///< physical point
  double s = 0.0;
  double objective = 0.0;
  bool fallback = false;  ///< no boundary available; pure space filling
};

/// Point on s(x) = 0 far from the archive and likely under the joint
/// density at design mean mu, found by penalized PSO in standard-normal
/// space. Archive rows are physical points.
MaxMinResult maxmin_sample(const SurrogateEnsemble& ens, const Eigen::MatrixXd& archive,
                           std::span<const double> mu, const ProblemSpec& problem,
                           const MaxMinOptions& opts, std::uint64_t seed);

/// Value of the max-min criterion at standard-normal point z against
/// standardized archive rows.
double maxmin_objective(std::span<const double> z, const Eigen::MatrixXd& archive_z, double p);

struct OptimizerConfig {
  std::size_t doe_size = 10;
  std::size_t max_iterations = 30;
  std::size_t n_mc = 10000;         ///< reported estimate
  std::size_t n_mc_search = 1000;   ///< inside the PSO objective
  double convergence_tol = 1e-2;
  std::size_t convergence_window = 5;
  PsoConfig pso;
  PsoConfig aleatory_pso{.swarm_size = 20, .iterations = 50};
  MaxMinOptions maxmin;
  EnsembleOptions ensemble;
  std::size_t threads = 0;

  void validate(const ProblemSpec& problem) const;
};

struct Evaluation {
  std::vector<double> x;
  double f = 0.0;
  bool failed = false;
  std::string error;
  std::size_t iteration = 0;
  std::string origin;  ///< "doe", "iterate" or "maxmin"
};

struct IterationRecord {
  std::size_t iteration = 0;
  std::vector<double> mu;
  double e_hat = 0.0;
  double best_e_hat = 0.0;  ///< minimum over this and earlier iterations
  bool single_cluster = false;
  bool maxmin_fallback = false;
  std::size_t n_low = 0, n_high = 0;
  std::size_t evaluations = 0;  ///< successful archive size when trained
  std::size_t pso_evaluations = 0;
};

struct OptState {
  std::vector<Evaluation> archive;
  std::vector<IterationRecord> history;
  std::vector<double> mu_star;
  double e_hat = 0.0;
  bool converged = false;
  std::uint64_t seed = 0;
  std::size_t model_evaluations() const { return archive.size(); }
  /// Successful evaluations as matrix rows and responses.
  void training_data(Eigen::MatrixXd& x, Eigen::VectorXd& y) const;
};

/// Evaluates the model at each row, catching failures.
std::vector<Evaluation> evaluate_batch(const Model& model, const std::vector<std::vector<double>>& points,
                                       std::size_t iteration, const std::string& origin,
                                       std::size_t threads);

/// Called after each iteration record; useful for logging.
using IterationCallback = std::function<void(const OptState&)>;

OptState optimize(const ProblemSpec& problem, const Model& model, const OptimizerConfig& cfg,
                  std::uint64_t seed, const IterationCallback& on_iteration = {});

/// Surrogate rebuilt from the final archive of a finished run.
SurrogateEnsemble final_ensemble(const OptState& state, const ProblemSpec& problem,
                                 const OptimizerConfig& cfg);

struct ValidationResult {
  double e_hat = 0.0;      ///< the run's final estimate
  double corrected = 0.0;  ///< mean of the histogram estimates
  double true_e = 0.0;     ///< Monte-Carlo mean of the actual model
  double relative_error = 0.0;
  std::vector<double> estimates;  ///< one surrogate estimate per run
  std::vector<double> true_samples;
  std::size_t failed = 0;
};

struct ValidationOptions {
  std::size_t n_histogram_runs = 100;
  std::size_t n_mc = 10000;
  std::size_t n_mc_true = 200;
  std::size_t threads = 0;
};

/// Compares the surrogate estimate at the optimum with an actual-model
/// Monte-Carlo run (Latin-hypercube draws through the marginals at mu*).
ValidationResult validate_optimum(const OptState& state, const ProblemSpec& problem,
                                  const Model& model, const OptimizerConfig& cfg,
                                  const ValidationOptions& vopts, std::uint64_t seed);

}  // namespace resochain
