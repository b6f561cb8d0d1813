#include "resochain/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "resochain/errors.hpp"
#include "resochain/parallel.hpp"
#include "resochain/random.hpp"

namespace resochain {

namespace {

std::vector<double> row(const Eigen::MatrixXd& m, Eigen::Index i) {
  std::vector<double> out(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index k = 0; k < m.cols(); ++k) out[static_cast<std::size_t>(k)] = m(i, k);
  return out;
}

// Monte-Carlo draws with the design part stored as standardized offsets, so
// a realization at mean mu is mu * (1 + cov * z) without re-inverting CDFs.
class McDraws {
 public:
  McDraws(const ProblemSpec& problem, const Eigen::MatrixXd& u) : nd_(problem.n_design()) {
    const Eigen::Index n = u.rows();
    const std::size_t dim = problem.dim();
    if (static_cast<std::size_t>(u.cols()) != dim) {
      throw std::invalid_argument("expected_value: uniform draws have the wrong dimension");
    }
    values_.resize(n, static_cast<Eigen::Index>(dim));
    cov_.resize(nd_);
    for (std::size_t k = 0; k < nd_; ++k) {
      cov_[k] = problem.design[k].cov;
      // Standardized truncated-normal quantile: the variable at mu=1, sigma=1.
      const auto unit_rv = RandomVariable::truncated_normal(0.0, 1.0);
      for (Eigen::Index i = 0; i < n; ++i) {
        values_(i, static_cast<Eigen::Index>(k)) =
            unit_rv.quantile_unchecked(u(i, static_cast<Eigen::Index>(k)));
      }
    }
    for (std::size_t k = nd_; k < dim; ++k) {
      const auto rv = problem.aleatory[k - nd_].distribution();
      for (Eigen::Index i = 0; i < n; ++i) {
        values_(i, static_cast<Eigen::Index>(k)) = rv.quantile_unchecked(u(i, static_cast<Eigen::Index>(k)));
      }
    }
  }

  double mean(const SurrogateEnsemble& ens, std::span<const double> mu) const {
    const Eigen::Index n = values_.rows();
    const std::size_t dim = static_cast<std::size_t>(values_.cols());
    std::vector<double> x(dim), unit(dim);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < dim; ++k) {
        const double v = values_(i, static_cast<Eigen::Index>(k));
        x[k] = k < nd_ ? mu[k] * (1.0 + cov_[k] * v) : v;
      }
      ens.space.to_unit(x, unit);
      sum += ens.predict_unit(unit);
    }
    return sum / static_cast<double>(n);
  }

 private:
  std::size_t nd_;
  std::vector<double> cov_;
  Eigen::MatrixXd values_;
};

void require_feasible(const ProblemSpec& problem, std::span<const double> mu) {
  if (!problem.feasible(mu)) {
    std::ostringstream msg;
    msg << "expected_value: design mean outside the feasible bounds (";
    for (std::size_t i = 0; i < mu.size(); ++i) msg << (i ? ", " : "") << mu[i];
    msg << ")";
    throw ConfigError(msg.str());
  }
}

}  // namespace

double SurrogateEnsemble::decision_unit(std::span<const double> u) const {
  return svm ? svm->eval(u) : -1.0;
}

double SurrogateEnsemble::predict_unit(std::span<const double> u) const {
  if (!svm) return kriging_low.mean(u);
  return svm->eval(u) <= 0.0 ? kriging_low.mean(u) : kriging_high.mean(u);
}

double SurrogateEnsemble::variance_unit(std::span<const double> u) const {
  const double a = kriging_low.variance(u);
  if (!svm) return a;
  return std::max(a, kriging_high.variance(u));
}

double SurrogateEnsemble::predict(std::span<const double> x) const {
  return predict_unit(space.to_unit(x));
}

SurrogateEnsemble fit_ensemble(const ExpandedSpace& space, const Eigen::MatrixXd& x,
                               const Eigen::VectorXd& y, const EnsembleOptions& opts) {
  if (x.rows() != y.size() || x.rows() < 2) {
    throw std::invalid_argument("fit_ensemble: need at least 2 samples with matching outputs");
  }
  if (static_cast<std::size_t>(x.cols()) != space.dim()) {
    throw std::invalid_argument("fit_ensemble: sample dimension does not match the space");
  }
  SurrogateEnsemble ens;
  ens.space = space;
  Eigen::MatrixXd u(x.rows(), x.cols());
  std::vector<double> buf(space.dim());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto xi = row(x, i);
    space.to_unit(xi, buf);
    for (Eigen::Index k = 0; k < x.cols(); ++k) u(i, k) = buf[static_cast<std::size_t>(k)];
  }
  std::vector<double> resp(y.data(), y.data() + y.size());
  ens.clustering = kmeans2(resp);
  const auto& cl = ens.clustering;
  const bool single = !cl || cl->n_low < opts.min_cluster_size ||
                      cl->n_high < opts.min_cluster_size ||
                      cl->separation_ratio() < opts.single_cluster_ratio;
  if (single) {
    ens.kriging_low = kriging_fit(u, y, opts.kriging);
    ens.kriging_high = ens.kriging_low;
    return ens;
  }
  ens.svm = svm_train(u, cl->labels, opts.svm);
  std::vector<Eigen::Index> lo, hi;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    (cl->labels[static_cast<std::size_t>(i)] < 0 ? lo : hi).push_back(i);
  }
  ens.kriging_low = kriging_fit(u(lo, Eigen::all), y(lo), opts.kriging);
  ens.kriging_high = kriging_fit(u(hi, Eigen::all), y(hi), opts.kriging);
  return ens;
}

Eigen::MatrixXd mc_uniforms(std::size_t n, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd u(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    for (Eigen::Index k = 0; k < u.cols(); ++k) u(i, k) = rng.uniform_open();
  }
  return u;
}

double expected_value(const SurrogateEnsemble& ens, std::span<const double> mu,
                      const ProblemSpec& problem, const Eigen::MatrixXd& u) {
  require_feasible(problem, mu);
  if (u.rows() == 0) throw std::invalid_argument("expected_value: N_MC must be positive");
  return McDraws(problem, u).mean(ens, mu);
}

double expected_value(const SurrogateEnsemble& ens, std::span<const double> mu,
                      const ProblemSpec& problem, std::size_t n_mc, std::uint64_t seed) {
  return expected_value(ens, mu, problem, mc_uniforms(n_mc, problem.dim(), seed));
}

std::vector<double> max_variance_aleatory(const SurrogateEnsemble& ens,
                                          std::span<const double> mu,
                                          const ProblemSpec& problem, const PsoConfig& pso,
                                          std::uint64_t seed) {
  const std::size_t nd = problem.n_design();
  const std::size_t na = problem.aleatory.size();
  if (mu.size() != nd) throw std::invalid_argument("max_variance_aleatory: wrong design size");
  if (na == 0) return {};
  std::vector<double> lo(na), hi(na);
  for (std::size_t k = 0; k < na; ++k) {
    lo[k] = problem.aleatory[k].lo;
    hi[k] = problem.aleatory[k].hi;
  }
  std::vector<double> x(nd + na), unit(nd + na);
  std::copy(mu.begin(), mu.end(), x.begin());
  auto objective = [&](std::span<const double> xa) {
    std::copy(xa.begin(), xa.end(), x.begin() + static_cast<std::ptrdiff_t>(nd));
    ens.space.to_unit(x, unit);
    return -ens.variance_unit(unit);
  };
  return pso_minimize(objective, lo, hi, pso, seed).best;
}

double maxmin_objective(std::span<const double> z, const Eigen::MatrixXd& archive_z, double p) {
  const std::size_t d = z.size();
  double zz = 0.0;
  for (double v : z) zz += v * v;
  const double log_fx =
      -0.5 * zz - 0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi);
  if (archive_z.rows() == 0) return log_fx / static_cast<double>(d);
  std::vector<double> dist(static_cast<std::size_t>(archive_z.rows()));
  double dmin = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < archive_z.rows(); ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double diff = z[k] - archive_z(i, static_cast<Eigen::Index>(k));
      s += diff * diff;
    }
    dist[static_cast<std::size_t>(i)] = std::sqrt(s);
    dmin = std::min(dmin, dist[static_cast<std::size_t>(i)]);
  }
  if (dmin == 0.0) return -std::numeric_limits<double>::infinity();
  // -(1/p) log sum d_i^-p, factored around the nearest point for stability.
  double acc = 0.0;
  for (double di : dist) acc += std::pow(di / dmin, -p);
  return log_fx / static_cast<double>(d) + std::log(dmin) - std::log(acc) / p;
}

MaxMinResult maxmin_sample(const SurrogateEnsemble& ens, const Eigen::MatrixXd& archive,
                           std::span<const double> mu, const ProblemSpec& problem,
                           const MaxMinOptions& opts, std::uint64_t seed) {
  if (archive.rows() < 1) throw std::invalid_argument("maxmin_sample: empty archive");
  const std::size_t dim = problem.dim();
  const StandardNormalMap map(problem.marginals(mu));
  Eigen::MatrixXd archive_z(archive.rows(), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < archive.rows(); ++i) {
    const auto z = map.to_standard_normal_clamped(row(archive, i));
    for (std::size_t k = 0; k < dim; ++k) archive_z(i, static_cast<Eigen::Index>(k)) = z[k];
  }
  const std::vector<double> lo(dim, -opts.z_bound), hi(dim, opts.z_bound);
  std::vector<double> unit(dim);
  auto s_of = [&](std::span<const double> z) {
    const auto x = map.from_standard_normal(z);
    ens.space.to_unit(x, unit);
    return ens.decision_unit(unit);
  };
  auto finish = [&](std::vector<double> z, bool fallback) {
    MaxMinResult r;
    r.x = map.from_standard_normal(z);
    r.s = s_of(z);
    r.objective = maxmin_objective(z, archive_z, opts.p);
    r.fallback = fallback;
    return r;
  };
  auto unconstrained = [&]() {
    auto f = [&](std::span<const double> z) { return -maxmin_objective(z, archive_z, opts.p); };
    return finish(pso_minimize(f, lo, hi, opts.pso, seed).best, true);
  };
  if (ens.single_cluster()) return unconstrained();

  auto f = [&](std::span<const double> z) {
    const double s = std::abs(s_of(z));
    if (s > opts.tolerance) return 1e6 + s;
    return -maxmin_objective(z, archive_z, opts.p);
  };
  std::vector<double> best = pso_minimize(f, lo, hi, opts.pso, seed).best;
  double s_best = s_of(best);
  if (std::abs(s_best) <= opts.tolerance) return finish(best, false);

  // Project onto the boundary by bisection towards the nearest archive point
  // whose decision value has the opposite sign.
  Eigen::Index partner = -1;
  double partner_dist = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < archive_z.rows(); ++i) {
    const auto zi = row(archive_z, i);
    if (s_of(zi) * s_best >= 0.0) continue;
    double d2 = 0.0;
    for (std::size_t k = 0; k < dim; ++k) d2 += (zi[k] - best[k]) * (zi[k] - best[k]);
    if (d2 < partner_dist) {
      partner_dist = d2;
      partner = i;
    }
  }
  if (partner < 0) return unconstrained();
  std::vector<double> a = best, b = row(archive_z, partner), mid(dim);
  double sa = s_best;
  for (int it = 0; it < 200; ++it) {
    for (std::size_t k = 0; k < dim; ++k) mid[k] = 0.5 * (a[k] + b[k]);
    const double sm = s_of(mid);
    if (std::abs(sm) <= opts.tolerance) return finish(mid, false);
    if (sm * sa > 0.0) {
      a = mid;
      sa = sm;
    } else {
      b = mid;
    }
  }
  return unconstrained();
}

void OptimizerConfig::validate(const ProblemSpec& problem) const {
  if (doe_size < 2 * problem.dim()) {
    throw ConfigError("optimizer: doe_size must be at least twice the problem dimension (" +
                      std::to_string(2 * problem.dim()) + ")");
  }
  if (n_mc == 0 || n_mc_search == 0) throw ConfigError("optimizer: n_mc must be positive");
  if (!(convergence_tol > 0.0) || convergence_window == 0) {
    throw ConfigError("optimizer: convergence_tol and convergence_window must be positive");
  }
  if (!(maxmin.p > 0.0) || !(maxmin.tolerance > 0.0)) {
    throw ConfigError("optimizer: maxmin p and tolerance must be positive");
  }
  try {
    pso.validate();
    aleatory_pso.validate();
    maxmin.pso.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

void OptState::training_data(Eigen::MatrixXd& x, Eigen::VectorXd& y) const {
  std::size_t n = 0;
  for (const auto& e : archive) n += e.failed ? 0 : 1;
  const std::size_t dim = archive.empty() ? 0 : archive.front().x.size();
  x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  y.resize(static_cast<Eigen::Index>(n));
  Eigen::Index i = 0;
  for (const auto& e : archive) {
    if (e.failed) continue;
    for (std::size_t k = 0; k < dim; ++k) x(i, static_cast<Eigen::Index>(k)) = e.x[k];
    y[i++] = e.f;
  }
}

std::vector<Evaluation> evaluate_batch(const Model& model,
                                       const std::vector<std::vector<double>>& points,
                                       std::size_t iteration, const std::string& origin,
                                       std::size_t threads) {
  std::vector<Evaluation> out(points.size());
  parallel_for(
      points.size(),
      [&](std::size_t i) {
        Evaluation& e = out[i];
        e.x = points[i];
        e.iteration = iteration;
        e.origin = origin;
        try {
          e.f = model(e.x);
          if (!std::isfinite(e.f)) {
            e.failed = true;
            e.error = "non-finite response";
          }
        } catch (const std::exception& ex) {
          e.failed = true;
          e.error = ex.what();
        }
      },
      threads);
  return out;
}

OptState optimize(const ProblemSpec& problem, const Model& model, const OptimizerConfig& cfg,
                  std::uint64_t seed, const IterationCallback& on_iteration) {
  problem.validate();
  cfg.validate(problem);
  const std::size_t dim = problem.dim();
  const std::size_t nd = problem.n_design();
  const ExpandedSpace space = problem.expanded_space();

  OptState state;
  state.seed = seed;
  {
    Rng rng(derive_seed(seed, 1));
    std::vector<std::vector<double>> doe;
    for (const auto& u : latin_hypercube(cfg.doe_size, dim, rng)) doe.push_back(space.from_unit(u));
    state.archive = evaluate_batch(model, doe, 0, "doe", cfg.threads);
  }

  std::vector<double> mu_lo(nd), mu_hi(nd);
  for (std::size_t k = 0; k < nd; ++k) {
    mu_lo[k] = problem.design[k].mu_min;
    mu_hi[k] = problem.design[k].mu_max;
  }

  for (std::size_t it = 0;; ++it) {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    state.training_data(x, y);
    if (x.rows() < 2) {
      throw NumericalError("optimize: fewer than 2 successful model evaluations in the archive");
    }
    const SurrogateEnsemble ens = fit_ensemble(space, x, y, cfg.ensemble);

    const McDraws draws(problem, mc_uniforms(cfg.n_mc_search, dim, derive_seed(seed, 100 + it)));
    auto objective = [&](std::span<const double> mu) { return draws.mean(ens, mu); };
    std::vector<std::vector<double>> warm;
    if (!state.mu_star.empty()) warm.push_back(state.mu_star);
    const PsoResult pr =
        pso_minimize(objective, mu_lo, mu_hi, cfg.pso, derive_seed(seed, 200 + it), warm);
    state.mu_star = pr.best;
    state.e_hat = expected_value(ens, state.mu_star, problem, cfg.n_mc, derive_seed(seed, 300 + it));

    IterationRecord rec;
    rec.iteration = it;
    rec.mu = state.mu_star;
    rec.e_hat = state.e_hat;
    rec.best_e_hat =
        state.history.empty() ? rec.e_hat : std::min(rec.e_hat, state.history.back().best_e_hat);
    rec.single_cluster = ens.single_cluster();
    if (ens.clustering) {
      rec.n_low = ens.clustering->n_low;
      rec.n_high = ens.clustering->n_high;
    }
    rec.evaluations = static_cast<std::size_t>(x.rows());
    rec.pso_evaluations = pr.evaluations;
    state.history.push_back(rec);

    const std::size_t h = state.history.size();
    if (h > cfg.convergence_window) {
      bool stable = true;
      for (std::size_t k = h - cfg.convergence_window; k < h; ++k) {
        const double prev = state.history[k - 1].e_hat;
        const double rel = std::abs(state.history[k].e_hat - prev) /
                           std::max(std::abs(prev), std::numeric_limits<double>::min());
        if (!(rel < cfg.convergence_tol)) stable = false;
      }
      state.converged = stable;
    }
    if (state.converged || it >= cfg.max_iterations) {
      if (on_iteration) on_iteration(state);
      break;
    }

    std::vector<double> p1 = state.mu_star;
    const auto xa = max_variance_aleatory(ens, state.mu_star, problem, cfg.aleatory_pso,
                                          derive_seed(seed, 400 + it));
    p1.insert(p1.end(), xa.begin(), xa.end());
    const MaxMinResult mm =
        maxmin_sample(ens, x, state.mu_star, problem, cfg.maxmin, derive_seed(seed, 500 + it));
    state.history.back().maxmin_fallback = mm.fallback;
    auto added = evaluate_batch(model, {p1, mm.x}, it + 1, "iterate", cfg.threads);
    added[1].origin = "maxmin";
    for (auto& e : added) state.archive.push_back(std::move(e));
    if (on_iteration) on_iteration(state);
  }
  return state;
}

SurrogateEnsemble final_ensemble(const OptState& state, const ProblemSpec& problem,
                                 const OptimizerConfig& cfg) {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  state.training_data(x, y);
  return fit_ensemble(problem.expanded_space(), x, y, cfg.ensemble);
}

ValidationResult validate_optimum(const OptState& state, const ProblemSpec& problem,
                                  const Model& model, const OptimizerConfig& cfg,
                                  const ValidationOptions& vopts, std::uint64_t seed) {
  if (state.mu_star.empty()) throw std::invalid_argument("validate_optimum: no optimum in state");
  ValidationResult out;
  out.e_hat = state.e_hat;
  const SurrogateEnsemble ens = final_ensemble(state, problem, cfg);
  for (std::size_t r = 0; r < vopts.n_histogram_runs; ++r) {
    out.estimates.push_back(
        expected_value(ens, state.mu_star, problem, vopts.n_mc, derive_seed(seed, 10000 + r)));
  }
  double sum = 0.0;
  for (double e : out.estimates) sum += e;
  out.corrected = out.estimates.empty() ? state.e_hat : sum / static_cast<double>(out.estimates.size());

  Rng rng(derive_seed(seed, 2));
  const auto marg = problem.marginals(state.mu_star);
  std::vector<std::vector<double>> pts;
  for (const auto& u : latin_hypercube(vopts.n_mc_true, problem.dim(), rng)) {
    std::vector<double> x(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) x[k] = marg[k].quantile_unchecked(u[k]);
    pts.push_back(std::move(x));
  }
  const auto evals = evaluate_batch(model, pts, 0, "validation", vopts.threads);
  double tsum = 0.0;
  for (const auto& e : evals) {
    if (e.failed) {
      ++out.failed;
      continue;
    }
    out.true_samples.push_back(e.f);
    tsum += e.f;
  }
  if (out.true_samples.empty()) {
    throw NumericalError("validate_optimum: every actual-model evaluation failed");
  }
  out.true_e = tsum / static_cast<double>(out.true_samples.size());
  const double diff = std::abs(out.corrected - out.true_e);
  out.relative_error = diff == 0.0 ? 0.0 : diff / std::abs(out.true_e);
  return out;
}

}  // namespace resochain
