#include "resochain/dispersion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "resochain/errors.hpp"

namespace resochain {

using std::numbers::pi;

std::string to_string(Branch b) { return b == Branch::kAcoustic ? "acoustic" : "optical"; }

void HBConfig::validate() const {
  if (n_harmonics < 1) throw std::invalid_argument("HBConfig: need at least one harmonic");
  if (quadrature() < 16 * n_harmonics) {
    throw std::invalid_argument("HBConfig: quadrature_points must be >= 16 M");
  }
  if (!(newton_tol > 0.0)) throw std::invalid_argument("HBConfig: newton_tol must be positive");
  if (continuation_steps < 1) throw std::invalid_argument("HBConfig: continuation_steps >= 1");
}

std::pair<double, double> linear_dispersion(double alpha, double epsilon, double kL) {
  if (!(kL > 0.0 && kL <= pi + 1e-12)) {
    throw std::invalid_argument("linear_dispersion: kL must lie in (0, pi]");
  }
  if (!(alpha > 0.0 && epsilon > 0.0)) {
    throw std::invalid_argument("linear_dispersion: alpha and epsilon must be positive");
  }
  // epsilon w^4 - (alpha + epsilon q + alpha epsilon) w^2 + alpha q = 0
  const double q = 2.0 * (1.0 - std::cos(kL));
  const double b = alpha + epsilon * q + alpha * epsilon;
  const double disc = std::sqrt(std::max(b * b - 4.0 * epsilon * alpha * q, 0.0));
  const double w_hi = (b + disc) / (2.0 * epsilon);
  const double w_lo = alpha * q / (epsilon * w_hi);  // product of roots, avoids cancellation
  return {std::sqrt(w_lo), std::sqrt(w_hi)};
}

namespace {

// Index of lambda component: dof in {0,1}, harmonic i in 1..M, part 0=cos 1=sin.
inline Eigen::Index lam_index(std::size_t m, int dof, std::size_t i, int part) {
  return static_cast<Eigen::Index>(dof * 2 * m + 2 * (i - 1) + part);
}

}  // namespace

Eigen::VectorXd galerkin_residual(const NondimUnit& unit, double amplitude, double kL,
                                  double omega_bar, const Eigen::VectorXd& lambda,
                                  const HBConfig& cfg) {
  const std::size_t m = cfg.n_harmonics;
  if (lambda.size() != static_cast<Eigen::Index>(4 * m)) {
    throw std::invalid_argument("galerkin_residual: lambda must have length 4M");
  }
  const std::size_t nq = cfg.quadrature();
  const double w2 = omega_bar * omega_bar;
  const double nl = unit.eta * amplitude * amplitude;
  Eigen::VectorXd r = Eigen::VectorXd::Zero(4 * static_cast<Eigen::Index>(m));
  std::vector<double> cs(m), sn(m);
  for (std::size_t q = 0; q < nq; ++q) {
    const double tau = 2.0 * pi * static_cast<double>(q) / static_cast<double>(nq);
    double u1 = 0, u2 = 0, acc1 = 0, acc2 = 0, u1p = 0, u1m = 0;
    for (std::size_t i = 1; i <= m; ++i) {
      const double di = static_cast<double>(i);
      // phase i(j kL - tau) for j = 0, +1, -1
      const double th0 = -di * tau;
      const double thp = di * (kL - tau);
      const double thm = di * (-kL - tau);
      const double c1 = lambda[lam_index(m, 0, i, 0)], s1 = lambda[lam_index(m, 0, i, 1)];
      const double c2 = lambda[lam_index(m, 1, i, 0)], s2 = lambda[lam_index(m, 1, i, 1)];
      cs[i - 1] = std::cos(th0);
      sn[i - 1] = std::sin(th0);
      const double v1 = c1 * cs[i - 1] + s1 * sn[i - 1];
      const double v2 = c2 * cs[i - 1] + s2 * sn[i - 1];
      u1 += v1;
      u2 += v2;
      acc1 -= di * di * v1;
      acc2 -= di * di * v2;
      u1p += c1 * std::cos(thp) + s1 * std::sin(thp);
      u1m += c1 * std::cos(thm) + s1 * std::sin(thm);
    }
    const double rel = u1 - u2;
    const double cubic = nl * rel * rel * rel;
    const double f1 = w2 * acc1 + (2.0 * u1 - u1p - u1m) + unit.alpha * rel + cubic;
    const double f2 = w2 * unit.epsilon * acc2 - unit.alpha * rel - cubic;
    for (std::size_t i = 1; i <= m; ++i) {
      r[lam_index(m, 0, i, 0)] += cs[i - 1] * f1;
      r[lam_index(m, 0, i, 1)] += sn[i - 1] * f1;
      r[lam_index(m, 1, i, 0)] += cs[i - 1] * f2;
      r[lam_index(m, 1, i, 1)] += sn[i - 1] * f2;
    }
  }
  // (1/pi) * (2 pi / nq) trapezoid weight
  r *= 2.0 / static_cast<double>(nq);
  return r;
}

void check_quadrature(const NondimUnit& unit, double amplitude, double kL, double omega_bar,
                      const Eigen::VectorXd& lambda, const HBConfig& cfg) {
  HBConfig fine = cfg;
  fine.quadrature_points = 2 * cfg.quadrature();
  const Eigen::VectorXd a = galerkin_residual(unit, amplitude, kL, omega_bar, lambda, cfg);
  const Eigen::VectorXd b = galerkin_residual(unit, amplitude, kL, omega_bar, lambda, fine);
  const double scale = std::max({1.0, a.norm(), lambda.norm()});
  if ((a - b).norm() > 1e-10 * scale) {
    throw NumericalError("galerkin_residual: quadrature under-resolved; increase quadrature_points");
  }
}

HarmonicSolution linear_solution(const NondimUnit& unit, double kL, Branch branch,
                                 const HBConfig& cfg) {
  const auto [lo, hi] = linear_dispersion(unit.alpha, unit.epsilon, kL);
  const double w = branch == Branch::kAcoustic ? lo : hi;
  const double ratio = unit.alpha / (unit.alpha - unit.epsilon * w * w);  // c2 / c1
  double c1 = 1.0, c2 = ratio;
  const double mx = std::max(std::abs(c1), std::abs(c2));
  c1 /= mx;
  c2 /= mx;
  if (std::abs(c1) >= std::abs(c2)) { c2 /= c1; c1 = 1.0; } else { c1 /= c2; c2 = 1.0; }
  const std::size_t m = cfg.n_harmonics;
  HarmonicSolution s;
  s.kL = kL;
  s.omega_bar = w;
  s.branch = branch;
  s.lambda = Eigen::VectorXd::Zero(4 * static_cast<Eigen::Index>(m));
  s.lambda[lam_index(m, 0, 1, 0)] = c1;
  s.lambda[lam_index(m, 1, 1, 0)] = c2;
  return s;
}

namespace {

struct NewtonResult {
  double omega;
  Eigen::VectorXd lambda;
  double residual;
  std::size_t iterations;
  bool converged;
};

// Gauss-Newton on [omega, lambda without the pinned cos/sin pair] with the
// pinned cosine held at 1 and its sine at 0 (amplitude and phase gauge).
NewtonResult newton(const NondimUnit& unit, double amplitude, double kL, double omega0,
                    Eigen::VectorXd lambda0, int pin_dof, const HBConfig& cfg) {
  const std::size_t m = cfg.n_harmonics;
  const Eigen::Index n_lam = lambda0.size();
  const Eigen::Index pin_c = lam_index(m, pin_dof, 1, 0);
  const Eigen::Index pin_s = pin_c + 1;
  std::vector<Eigen::Index> free_idx;
  for (Eigen::Index k = 0; k < n_lam; ++k) {
    if (k != pin_c && k != pin_s) free_idx.push_back(k);
  }
  const Eigen::Index n_unk = 1 + static_cast<Eigen::Index>(free_idx.size());

  // Rotate the guess so the pinned sine vanishes, then scale the pinned cosine to 1.
  {
    const double c = lambda0[pin_c], s = lambda0[pin_s];
    const double amp = std::hypot(c, s);
    if (amp > 0.0) {
      const double phi = std::atan2(s, c);
      Eigen::VectorXd rot = lambda0;
      for (int dof = 0; dof < 2; ++dof) {
        for (std::size_t i = 1; i <= m; ++i) {
          const double a = i * phi;
          const Eigen::Index ic = lam_index(m, dof, i, 0);
          const double ci = lambda0[ic], si = lambda0[ic + 1];
          rot[ic] = ci * std::cos(a) + si * std::sin(a);
          rot[ic + 1] = -ci * std::sin(a) + si * std::cos(a);
        }
      }
      lambda0 = rot / amp;
    }
    lambda0[pin_c] = 1.0;
    lambda0[pin_s] = 0.0;
  }

  auto unpack = [&](const Eigen::VectorXd& z, double& omega, Eigen::VectorXd& lam) {
    omega = z[0];
    lam = Eigen::VectorXd::Zero(n_lam);
    lam[pin_c] = 1.0;
    for (std::size_t k = 0; k < free_idx.size(); ++k) lam[free_idx[k]] = z[1 + static_cast<Eigen::Index>(k)];
  };
  auto residual = [&](const Eigen::VectorXd& z) {
    double omega;
    Eigen::VectorXd lam;
    unpack(z, omega, lam);
    return galerkin_residual(unit, amplitude, kL, omega, lam, cfg);
  };

  Eigen::VectorXd z(n_unk);
  z[0] = omega0;
  for (std::size_t k = 0; k < free_idx.size(); ++k) z[1 + static_cast<Eigen::Index>(k)] = lambda0[free_idx[k]];
  Eigen::VectorXd r = residual(z);
  double rn = r.norm();
  std::size_t it = 0;
  for (; it < cfg.max_newton_iters && rn > cfg.newton_tol; ++it) {
    Eigen::MatrixXd jac(r.size(), n_unk);
    for (Eigen::Index k = 0; k < n_unk; ++k) {
      const double h = 1e-7 * std::max(1.0, std::abs(z[k]));
      Eigen::VectorXd zp = z, zm = z;
      zp[k] += h;
      zm[k] -= h;
      jac.col(k) = (residual(zp) - residual(zm)) / (2.0 * h);
    }
    const Eigen::VectorXd step = jac.colPivHouseholderQr().solve(-r);
    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 20; ++ls) {
      const Eigen::VectorXd zt = z + t * step;
      const Eigen::VectorXd rt = residual(zt);
      if (rt.norm() < rn || ls == 19) {
        accepted = rt.norm() < rn;
        z = zt;
        r = rt;
        rn = rt.norm();
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
  }
  NewtonResult out;
  unpack(z, out.omega, out.lambda);
  out.residual = rn;
  out.iterations = it;
  out.converged = rn <= cfg.newton_tol;
  return out;
}

int dominant_dof(const Eigen::VectorXd& lambda, std::size_t m) {
  const double a1 = std::hypot(lambda[lam_index(m, 0, 1, 0)], lambda[lam_index(m, 0, 1, 1)]);
  const double a2 = std::hypot(lambda[lam_index(m, 1, 1, 0)], lambda[lam_index(m, 1, 1, 1)]);
  return a2 > a1 ? 1 : 0;
}

// Solves at fixed eta with the max-element normalization, switching the
// pinned DOF if another harmonic-1 amplitude ends up larger.
NewtonResult solve_normalized(const NondimUnit& unit, double amplitude, double kL, double omega0,
                              Eigen::VectorXd lambda0, const HBConfig& cfg) {
  const std::size_t m = cfg.n_harmonics;
  int pin = dominant_dof(lambda0, m);
  NewtonResult res{};
  for (int attempt = 0; attempt < 3; ++attempt) {
    res = newton(unit, amplitude, kL, omega0, lambda0, pin, cfg);
    if (!res.converged) return res;
    const int dom = dominant_dof(res.lambda, m);
    if (dom == pin) break;
    pin = dom;
    omega0 = res.omega;
    lambda0 = res.lambda;
  }
  return res;
}

}  // namespace

HarmonicSolution solve_branch(const NondimUnit& unit, double amplitude, double kL,
                              Branch branch, const HBConfig& cfg,
                              const std::optional<HarmonicSolution>& guess) {
  cfg.validate();
  if (!(amplitude >= 0.0)) throw std::invalid_argument("solve_branch: amplitude must be >= 0");
  if (unit.xi1 != 0.0 || unit.xi2 != 0.0) {
    throw std::invalid_argument("solve_branch: dispersion analysis assumes zero damping");
  }
  const HarmonicSolution lin = linear_solution(unit, kL, branch, cfg);

  auto attempt = [&](double omega0, Eigen::VectorXd lam0, bool ramp) -> NewtonResult {
    NewtonResult res{omega0, std::move(lam0), 0.0, 0, true};
    const std::size_t steps = (ramp && unit.eta > 0.0) ? std::max<std::size_t>(cfg.eta_ramp_steps, 1) : 1;
    std::size_t total_iters = 0;
    for (std::size_t s = 1; s <= steps; ++s) {
      NondimUnit u = unit;
      u.eta = unit.eta * static_cast<double>(s) / static_cast<double>(steps);
      res = solve_normalized(u, amplitude, kL, res.omega, res.lambda, cfg);
      total_iters += res.iterations;
      if (!res.converged) break;
    }
    res.iterations = total_iters;
    return res;
  };

  NewtonResult res = attempt(lin.omega_bar, lin.lambda, true);
  if (!res.converged && guess) {
    res = attempt(guess->omega_bar, guess->lambda, false);
  }
  if (!res.converged) {
    std::ostringstream msg;
    msg << "solve_branch: Newton did not converge on the " << to_string(branch)
        << " branch at kL=" << kL << ", A=" << amplitude << ", eta=" << unit.eta
        << " (last residual " << res.residual << ")";
    throw NumericalError(msg.str());
  }
  HarmonicSolution s;
  s.kL = kL;
  s.omega_bar = std::abs(res.omega);
  s.amplitude = amplitude;
  s.lambda = res.lambda;
  s.branch = branch;
  s.residual_norm = res.residual;
  s.iterations = res.iterations;
  return s;
}

DispersionCurve dispersion_curve(const NondimUnit& unit, double amplitude, const HBConfig& cfg) {
  cfg.validate();
  DispersionCurve c;
  c.amplitude = amplitude;
  c.eta = unit.eta;
  const std::size_t n = cfg.continuation_steps;
  std::optional<HarmonicSolution> prev_a, prev_o;
  for (std::size_t i = 1; i <= n; ++i) {
    const double kL = pi * static_cast<double>(i) / static_cast<double>(n);
    c.kL.push_back(kL);
    HarmonicSolution a = solve_branch(unit, amplitude, kL, Branch::kAcoustic, cfg, prev_a);
    HarmonicSolution o = solve_branch(unit, amplitude, kL, Branch::kOptical, cfg, prev_o);
    for (auto* pair : {&prev_a, &prev_o}) {
      const HarmonicSolution& cur = pair == &prev_a ? a : o;
      if (*pair) {
        const auto [l0, h0] = linear_dispersion(unit.alpha, unit.epsilon, (*pair)->kL);
        const auto [l1, h1] = linear_dispersion(unit.alpha, unit.epsilon, kL);
        const double lin_step = pair == &prev_a ? std::abs(l1 - l0) : std::abs(h1 - h0);
        const double jump = std::abs(cur.omega_bar - (*pair)->omega_bar);
        if (jump > 5.0 * lin_step + 0.05) {
          std::ostringstream msg;
          msg << "dispersion_curve: branch jump on the " << to_string(cur.branch)
              << " branch between kL=" << (*pair)->kL << " and kL=" << kL << " (omega "
              << (*pair)->omega_bar << " -> " << cur.omega_bar << ")";
          throw NumericalError(msg.str());
        }
      }
    }
    prev_a = a;
    prev_o = o;
    c.acoustic.push_back(std::move(a));
    c.optical.push_back(std::move(o));
  }
  double low = 0.0, high = std::numeric_limits<double>::infinity();
  for (const auto& s : c.acoustic) low = std::max(low, s.omega_bar);
  for (const auto& s : c.optical) high = std::min(high, s.omega_bar);
  c.gap = {low, high};
  return c;
}

BandGap band_gap(const NondimUnit& unit, double amplitude, const HBConfig& cfg) {
  return dispersion_curve(unit, amplitude, cfg).gap;
}

}  // namespace resochain
