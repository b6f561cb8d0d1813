#include "resochain/kriging.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "resochain/errors.hpp"
#include "resochain/random.hpp"

namespace resochain {

namespace {

Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& x, const std::vector<double>& theta,
                                   double nugget) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  Eigen::MatrixXd r(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    r(i, i) = 1.0 + nugget;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < d; ++k) {
        const double diff = x(i, k) - x(j, k);
        s += theta[static_cast<std::size_t>(k)] * diff * diff;
      }
      const double v = std::exp(-s);
      r(i, j) = v;
      r(j, i) = v;
    }
  }
  return r;
}

// Concentrated negative log-likelihood n log(sigma^2) + log|R|, or +inf when
// R is not positive definite.
double concentrated_nll(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                        const std::vector<double>& theta, double nugget) {
  const Eigen::Index n = x.rows();
  Eigen::LLT<Eigen::MatrixXd> llt(correlation_matrix(x, theta, nugget));
  if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd ri1 = llt.solve(ones);
  const double beta = ri1.dot(y) / ri1.sum();
  const Eigen::VectorXd res = y.array() - beta;
  const double sigma2 = std::max(res.dot(llt.solve(res)) / static_cast<double>(n), 1e-300);
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  if (!std::isfinite(logdet)) return std::numeric_limits<double>::infinity();
  return static_cast<double>(n) * std::log(sigma2) + logdet;
}

struct MleContext {
  const Eigen::MatrixXd* x;
  const Eigen::VectorXd* y;
  double nugget;
  double lo, hi;
};

double mle_objective(const gsl_vector* v, void* params) {
  const auto* ctx = static_cast<const MleContext*>(params);
  const std::size_t d = v->size;
  std::vector<double> theta(d);
  double penalty = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    double l = gsl_vector_get(v, k);
    if (l < ctx->lo) { penalty += (ctx->lo - l) * (ctx->lo - l); l = ctx->lo; }
    if (l > ctx->hi) { penalty += (l - ctx->hi) * (l - ctx->hi); l = ctx->hi; }
    theta[k] = std::pow(10.0, l);
  }
  const double f = concentrated_nll(*ctx->x, *ctx->y, theta, ctx->nugget);
  if (!std::isfinite(f)) return 1e300;
  return f + 1e3 * penalty;
}

std::pair<std::vector<double>, double> nelder_mead(MleContext& ctx, std::vector<double> start) {
  const std::size_t d = start.size();
  static const bool handler_off = [] {
    gsl_set_error_handler_off();
    return true;
  }();
  (void)handler_off;
  gsl_multimin_function fn{&mle_objective, d, &ctx};
  gsl_vector* x0 = gsl_vector_alloc(d);
  gsl_vector* step = gsl_vector_alloc(d);
  for (std::size_t k = 0; k < d; ++k) {
    gsl_vector_set(x0, k, start[k]);
    gsl_vector_set(step, k, 0.5);
  }
  gsl_multimin_fminimizer* s =
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, d);
  gsl_multimin_fminimizer_set(s, &fn, x0, step);
  const std::size_t max_iter = 100 + 60 * d;
  for (std::size_t it = 0; it < max_iter; ++it) {
    if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), 1e-3) == GSL_SUCCESS) break;
  }
  std::vector<double> best(d);
  for (std::size_t k = 0; k < d; ++k) {
    best[k] = std::clamp(gsl_vector_get(s->x, k), ctx.lo, ctx.hi);
  }
  const double f = s->fval;
  gsl_multimin_fminimizer_free(s);
  gsl_vector_free(step);
  gsl_vector_free(x0);
  return {best, f};
}

}  // namespace

void KrigingModel::correlations(std::span<const double> x, Eigen::VectorXd& r) const {
  const Eigen::Index n = x_.rows();
  const Eigen::Index d = x_.cols();
  r.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < d; ++k) {
      const double diff = x_(i, k) - x[static_cast<std::size_t>(k)];
      s += theta_[static_cast<std::size_t>(k)] * diff * diff;
    }
    r[i] = std::exp(-s);
  }
}

double KrigingModel::mean(std::span<const double> x) const {
  const Eigen::Index n = x_.rows();
  const Eigen::Index d = x_.cols();
  double m = beta_;
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < d; ++k) {
      const double diff = x_(i, k) - x[static_cast<std::size_t>(k)];
      s += theta_[static_cast<std::size_t>(k)] * diff * diff;
    }
    m += weights_[i] * std::exp(-s);
  }
  return m;
}

KrigingPrediction KrigingModel::predict(std::span<const double> x) const {
  if (x.size() != dim()) throw std::invalid_argument("kriging_predict: dimension mismatch");
  Eigen::VectorXd r;
  correlations(x, r);
  const double m = beta_ + r.dot(weights_);
  const Eigen::VectorXd rinv_r = llt_.solve(r);
  const double u = 1.0 - rinv_one_.dot(r);
  double var = sigma2_ * (1.0 - r.dot(rinv_r) + u * u / one_rinv_one_);
  if (!(var > 0.0)) var = 0.0;
  return {m, var};
}

KrigingPrediction kriging_predict(const KrigingModel& model, std::span<const double> x) {
  return model.predict(x);
}

KrigingModel kriging_build(Eigen::MatrixXd x, Eigen::VectorXd y, std::vector<double> theta,
                           double nugget) {
  KrigingModel m;
  const Eigen::Index n = x.rows();
  m.x_ = std::move(x);
  m.y_ = std::move(y);
  m.theta_ = std::move(theta);
  m.nugget_ = nugget;
  m.llt_.compute(correlation_matrix(m.x_, m.theta_, nugget));
  if (m.llt_.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "kriging: correlation matrix is ill-conditioned with nugget " << nugget
        << "; increase the nugget (e.g. to " << nugget * 100.0 << ")";
    throw NumericalError(msg.str());
  }
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  m.rinv_one_ = m.llt_.solve(ones);
  m.one_rinv_one_ = m.rinv_one_.sum();
  m.beta_ = m.rinv_one_.dot(m.y_) / m.one_rinv_one_;
  const Eigen::VectorXd res = m.y_.array() - m.beta_;
  m.weights_ = m.llt_.solve(res);
  m.sigma2_ = n > 1 ? std::max(res.dot(m.weights_) / static_cast<double>(n), 0.0) : 0.0;
  const double logdet = 2.0 * m.llt_.matrixL().toDenseMatrix().diagonal().array().log().sum();
  m.nll_ = static_cast<double>(n) * std::log(std::max(m.sigma2_, 1e-300)) + logdet;
  return m;
}

KrigingModel kriging_fit(const Eigen::MatrixXd& x_in, const Eigen::VectorXd& y_in,
                         const KrigingOptions& opts) {
  if (x_in.rows() != y_in.size()) throw std::invalid_argument("kriging_fit: size mismatch");
  if (x_in.rows() < 1) throw std::invalid_argument("kriging_fit: no training data");
  const auto d = static_cast<std::size_t>(x_in.cols());

  // Merge duplicate inputs.
  std::map<std::vector<double>, std::pair<double, int>> groups;
  std::vector<std::vector<double>> order;
  for (Eigen::Index i = 0; i < x_in.rows(); ++i) {
    std::vector<double> key(d);
    for (std::size_t k = 0; k < d; ++k) key[k] = x_in(i, static_cast<Eigen::Index>(k));
    auto [it, inserted] = groups.try_emplace(key, 0.0, 0);
    if (inserted) order.push_back(key);
    it->second.first += y_in[i];
    it->second.second += 1;
  }
  const auto n = static_cast<Eigen::Index>(order.size());
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(d));
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& key = order[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < d; ++k) x(i, static_cast<Eigen::Index>(k)) = key[k];
    const auto& g = groups.at(key);
    y[i] = g.first / g.second;
  }

  std::vector<double> theta;
  if (opts.theta) {
    if (opts.theta->size() != d) throw std::invalid_argument("kriging_fit: theta size mismatch");
    theta = *opts.theta;
  } else if (n == 1) {
    theta.assign(d, 1.0);
  } else {
    MleContext ctx{&x, &y, opts.nugget, opts.log10_theta_min, opts.log10_theta_max};
    // Isotropic scan for a starting point, then simplex refinement from it
    // and from random starts.
    std::vector<double> best_start(d, 0.0);
    double best_f = std::numeric_limits<double>::infinity();
    for (double l = opts.log10_theta_min; l <= opts.log10_theta_max + 1e-12; l += 0.5) {
      const double f = concentrated_nll(x, y, std::vector<double>(d, std::pow(10.0, l)),
                                        opts.nugget);
      if (f < best_f) {
        best_f = f;
        best_start.assign(d, l);
      }
    }
    Rng rng(opts.seed);
    std::vector<double> best_log = best_start;
    for (std::size_t r = 0; r < std::max<std::size_t>(opts.restarts, 1); ++r) {
      std::vector<double> start = best_start;
      if (r > 0) {
        for (auto& v : start) v = rng.uniform(opts.log10_theta_min, opts.log10_theta_max);
      }
      auto [cand, f] = nelder_mead(ctx, start);
      if (f < best_f) {
        best_f = f;
        best_log = cand;
      }
    }
    theta.resize(d);
    for (std::size_t k = 0; k < d; ++k) theta[k] = std::pow(10.0, best_log[k]);
  }

  double nugget = opts.nugget;
  for (;;) {
    try {
      return kriging_build(x, y, theta, nugget);
    } catch (const NumericalError&) {
      if (nugget * 10.0 > opts.max_nugget * (1.0 + 1e-12)) throw;
      nugget *= 10.0;
    }
  }
}

}  // namespace resochain
