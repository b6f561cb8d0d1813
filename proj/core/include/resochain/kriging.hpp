#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace resochain {

struct KrigingOptions {
  double nugget = 1e-8;
  /// Largest nugget tried when the correlation matrix is not positive definite.
  double max_nugget = 1e-6;
  /// Fixed correlation parameters (one per dimension); fitted by maximum
  /// likelihood when empty.
  std::optional<std::vector<double>> theta;
  double log10_theta_min = -2.0;
  double log10_theta_max = 3.0;
  std::size_t restarts = 3;
  std::uint64_t seed = 7;
};

struct KrigingPrediction {
  double mean;
  double variance;
};

/// Ordinary Kriging with constant trend and anisotropic Gaussian correlation
/// R(a, b) = exp(-sum_k theta_k (a_k - b_k)^2).
class KrigingModel {
 public:
  KrigingModel() = default;

  KrigingPrediction predict(std::span<const double> x) const;
  double mean(std::span<const double> x) const;
  double variance(std::span<const double> x) const { return predict(x).variance; }

  const Eigen::MatrixXd& inputs() const { return x_; }
  const Eigen::VectorXd& outputs() const { return y_; }
  const std::vector<double>& theta() const { return theta_; }
  double beta() const { return beta_; }
  double process_variance() const { return sigma2_; }
  double nugget() const { return nugget_; }
  double neg_log_likelihood() const { return nll_; }
  std::size_t size() const { return static_cast<std::size_t>(x_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(x_.cols()); }

 private:
  friend KrigingModel kriging_fit(const Eigen::MatrixXd&, const Eigen::VectorXd&,
                                  const KrigingOptions&);
  friend KrigingModel kriging_build(Eigen::MatrixXd, Eigen::VectorXd, std::vector<double>,
                                    double);
  void correlations(std::span<const double> x, Eigen::VectorXd& r) const;

  Eigen::MatrixXd x_;
  Eigen::VectorXd y_;
  std::vector<double> theta_;
  double beta_ = 0.0;
  double sigma2_ = 0.0;
  double nugget_ = 0.0;
  double nll_ = 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd weights_;   ///< R^-1 (y - beta 1)
  Eigen::VectorXd rinv_one_;  ///< R^-1 1
  double one_rinv_one_ = 1.0;
};

/// Fits to rows of x. Duplicate rows are merged by averaging their outputs.
KrigingModel kriging_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         const KrigingOptions& opts = {});

/// Assembles a model for fixed theta and nugget without likelihood search.
/// Throws NumericalError when the correlation matrix is not positive definite.
KrigingModel kriging_build(Eigen::MatrixXd x, Eigen::VectorXd y, std::vector<double> theta,
                           double nugget);

KrigingPrediction kriging_predict(const KrigingModel& model, std::span<const double> x);

}  // namespace resochain
