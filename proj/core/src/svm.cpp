#include "resochain/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "resochain/errors.hpp"

namespace resochain {

SvmModel::SvmModel(Eigen::MatrixXd support, Eigen::VectorXd coef, double bias, double sigma,
                   double C, std::vector<double> multipliers)
    : support_(std::move(support)),
      coef_(std::move(coef)),
      bias_(bias),
      sigma_(sigma),
      C_(C),
      gamma_(1.0 / (2.0 * sigma * sigma)),
      multipliers_(std::move(multipliers)) {}

double SvmModel::eval(std::span<const double> x) const {
  const Eigen::Index n = support_.rows();
  const Eigen::Index d = support_.cols();
  double s = bias_;
  for (Eigen::Index i = 0; i < n; ++i) {
    double r2 = 0.0;
    for (Eigen::Index k = 0; k < d; ++k) {
      const double diff = support_(i, k) - x[static_cast<std::size_t>(k)];
      r2 += diff * diff;
    }
    s += coef_[i] * std::exp(-gamma_ * r2);
  }
  return s;
}

double svm_eval(const SvmModel& model, std::span<const double> x) { return model.eval(x); }

double median_pairwise_distance(const Eigen::MatrixXd& x) {
  std::vector<double> d;
  const Eigen::Index n = x.rows();
  d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dist = (x.row(i) - x.row(j)).norm();
      if (dist > 0.0) d.push_back(dist);
    }
  }
  if (d.empty()) return 1.0;
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid;
}

SvmModel svm_train(const Eigen::MatrixXd& x, std::span<const int> labels,
                   const SvmOptions& opts) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (labels.size() != n) throw std::invalid_argument("svm_train: label count mismatch");
  bool has_pos = false, has_neg = false;
  for (int l : labels) {
    if (l == 1) has_pos = true;
    else if (l == -1) has_neg = true;
    else throw std::invalid_argument("svm_train: labels must be +-1");
  }
  if (!has_pos || !has_neg) throw std::invalid_argument("svm_train: both classes are required");
  if (!(opts.C > 0.0)) throw std::invalid_argument("svm_train: C must be positive");

  const double sigma = opts.sigma.value_or(median_pairwise_distance(x));
  if (!(sigma > 0.0)) throw std::invalid_argument("svm_train: sigma must be positive");
  const double gamma = 1.0 / (2.0 * sigma * sigma);
  const double C = opts.C;

  Eigen::MatrixXd K(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    K(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = std::exp(-gamma * (x.row(i) - x.row(j)).squaredNorm());
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = labels[i];

  // Dual: min 0.5 a'Qa - e'a, 0 <= a <= C, y'a = 0, Q_ij = y_i y_j K_ij.
  std::vector<double> alpha(n, 0.0), grad(n, -1.0);
  auto in_up = [&](std::size_t t) {
    return (y[t] > 0 && alpha[t] < C) || (y[t] < 0 && alpha[t] > 0);
  };
  auto in_low = [&](std::size_t t) {
    return (y[t] > 0 && alpha[t] > 0) || (y[t] < 0 && alpha[t] < C);
  };
  constexpr double kTau = 1e-12;

  std::size_t iter = 0;
  for (; iter < opts.max_iterations; ++iter) {
    double g_max = -std::numeric_limits<double>::infinity();
    std::size_t i_sel = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (in_up(t) && -y[t] * grad[t] > g_max) {
        g_max = -y[t] * grad[t];
        i_sel = t;
      }
    }
    double g_min = std::numeric_limits<double>::infinity();
    std::size_t j_sel = n;
    double best_obj = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t) {
      if (!in_low(t)) continue;
      g_min = std::min(g_min, -y[t] * grad[t]);
      if (i_sel == n) continue;
      const double b = g_max + y[t] * grad[t];
      if (b > 0.0) {
        double a = K(i_sel, i_sel) + K(t, t) - 2.0 * K(i_sel, t);
        if (a <= 0.0) a = kTau;
        const double obj = -(b * b) / a;
        if (obj <= best_obj) {
          best_obj = obj;
          j_sel = t;
        }
      }
    }
    if (i_sel == n || j_sel == n || g_max - g_min < opts.tolerance) break;

    const std::size_t i = i_sel, j = j_sel;
    const double old_ai = alpha[i], old_aj = alpha[j];
    double quad = K(i, i) + K(j, j) - 2.0 * K(i, j);
    if (quad <= 0.0) quad = kTau;
    if (y[i] != y[j]) {
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0 && alpha[j] < 0) { alpha[j] = 0; alpha[i] = diff; }
      else if (diff <= 0 && alpha[i] < 0) { alpha[i] = 0; alpha[j] = -diff; }
      if (diff > 0 && alpha[i] > C) { alpha[i] = C; alpha[j] = C - diff; }
      else if (diff <= 0 && alpha[j] > C) { alpha[j] = C; alpha[i] = C + diff; }
    } else {
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C && alpha[i] > C) { alpha[i] = C; alpha[j] = sum - C; }
      else if (sum <= C && alpha[j] < 0) { alpha[j] = 0; alpha[i] = sum; }
      if (sum > C && alpha[j] > C) { alpha[j] = C; alpha[i] = sum - C; }
      else if (sum <= C && alpha[i] < 0) { alpha[i] = 0; alpha[j] = sum; }
    }
    const double dai = alpha[i] - old_ai, daj = alpha[j] - old_aj;
    for (std::size_t t = 0; t < n; ++t) {
      grad[t] += y[t] * (y[i] * K(t, i) * dai + y[j] * K(t, j) * daj);
    }
  }
  if (iter >= opts.max_iterations) {
    throw NumericalError("svm_train: SMO did not reach the KKT tolerance within " +
                         std::to_string(opts.max_iterations) + " iterations");
  }

  // rho from free multipliers, else the midpoint of the feasible interval.
  double sum_free = 0.0;
  std::size_t n_free = 0;
  double ub = std::numeric_limits<double>::infinity(), lb = -ub;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (alpha[t] > 0.0 && alpha[t] < C) {
      sum_free += yg;
      ++n_free;
    } else if ((alpha[t] >= C && y[t] < 0) || (alpha[t] <= 0.0 && y[t] > 0)) {
      ub = std::min(ub, yg);
    } else {
      lb = std::max(lb, yg);
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : 0.5 * (ub + lb);
  const double bias = -rho;

  std::vector<Eigen::Index> sv;
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] > 0.0) sv.push_back(static_cast<Eigen::Index>(t));
  }
  Eigen::MatrixXd support(static_cast<Eigen::Index>(sv.size()), x.cols());
  Eigen::VectorXd coef(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t k = 0; k < sv.size(); ++k) {
    support.row(static_cast<Eigen::Index>(k)) = x.row(sv[k]);
    coef[static_cast<Eigen::Index>(k)] = alpha[static_cast<std::size_t>(sv[k])] *
                                         y[static_cast<std::size_t>(sv[k])];
  }
  SvmModel model(std::move(support), std::move(coef), bias, sigma, C, alpha);
  model.iterations = iter;

  std::size_t correct = 0;
  std::vector<double> row(static_cast<std::size_t>(x.cols()));
  for (std::size_t t = 0; t < n; ++t) {
    for (Eigen::Index k = 0; k < x.cols(); ++k) row[static_cast<std::size_t>(k)] = x(t, k);
    if (model.classify(row) == labels[t]) ++correct;
  }
  model.training_accuracy = static_cast<double>(correct) / static_cast<double>(n);
  return model;
}

}  // namespace resochain
