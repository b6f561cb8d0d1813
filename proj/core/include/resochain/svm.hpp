#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace resochain {

struct SvmOptions {
  double C = 100.0;
  /// Gaussian kernel width; defaults to the median pairwise distance.
  std::optional<double> sigma;
  double tolerance = 1e-5;  ///< KKT violation at termination
  std::size_t max_iterations = 1'000'000;
};

/// Soft-margin SVM with kernel K(a, b) = exp(-|a - b|^2 / (2 sigma^2)).
/// Decision value s(x) = b + sum_i lambda_i y_i K(x_i, x); only support
/// vectors (lambda_i > 0) are retained.
class SvmModel {
 public:
  SvmModel() = default;
  SvmModel(Eigen::MatrixXd support, Eigen::VectorXd coef, double bias, double sigma,
           double C, std::vector<double> multipliers);

  double eval(std::span<const double> x) const;
  int classify(std::span<const double> x) const { return eval(x) > 0.0 ? 1 : -1; }

  double bias() const { return bias_; }
  double sigma() const { return sigma_; }
  double C() const { return C_; }
  const Eigen::MatrixXd& support_vectors() const { return support_; }
  /// lambda_i * y_i for each support vector.
  const Eigen::VectorXd& coefficients() const { return coef_; }
  /// lambda_i for every training point, in training order.
  const std::vector<double>& multipliers() const { return multipliers_; }
  std::size_t dim() const { return static_cast<std::size_t>(support_.cols()); }

  double training_accuracy = 0.0;
  std::size_t iterations = 0;

 private:
  Eigen::MatrixXd support_;
  Eigen::VectorXd coef_;
  double bias_ = 0.0;
  double sigma_ = 1.0;
  double C_ = 0.0;
  double gamma_ = 0.5;
  std::vector<double> multipliers_;
};

/// Median Euclidean distance between distinct rows.
double median_pairwise_distance(const Eigen::MatrixXd& x);

/// Trains on rows of x with labels +-1 (both classes required) by SMO with
/// second-order working-set selection.
SvmModel svm_train(const Eigen::MatrixXd& x, std::span<const int> labels,
                   const SvmOptions& opts = {});

double svm_eval(const SvmModel& model, std::span<const double> x);

}  // namespace resochain
