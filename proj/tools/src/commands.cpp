#include "resochain/experiment/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "resochain/dispersion.hpp"
#include "resochain/errors.hpp"
#include "resochain/experiment/io.hpp"
#include "resochain/kmeans.hpp"
#include "resochain/parallel.hpp"
#include "resochain/random.hpp"
#include "resochain/simulate.hpp"

#ifndef RESOCHAIN_VERSION
#define RESOCHAIN_VERSION "unknown"
#endif

namespace resochain::experiment {

using nlohmann::json;

namespace {

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

// Shared bookkeeping of one subcommand run: output directory, timing and the
// manifest written last.
class Run {
 public:
  Run(std::string command, ExperimentConfig& cfg, const RunOptions& opts)
      : command_(std::move(command)), opts_(opts), start_(std::chrono::steady_clock::now()) {
    cfg.apply_scale(opts.scale);
    if (opts.seed) cfg.optimizer.seed = *opts.seed;
    cfg.validate();
    cfg_ = cfg;
    started_ = utc_now();
    out_.emplace(opts.out ? *opts.out : std::filesystem::path(cfg.output_dir));
  }

  OutputDir& out() { return *out_; }
  const ExperimentConfig& cfg() const { return cfg_; }

  void log(const std::string& msg) const {
    if (opts_.log) {
      const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
      *opts_.log << "[" << std::fixed << std::setprecision(1) << s << "s] " << msg << std::endl;
    }
  }

  RunReport finish(json summary) {
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    std::vector<std::string> files = out_->files();
    json manifest = {{"command", command_},
                     {"config_name", cfg_.name},
                     {"config_hash", config_hash(cfg_)},
                     {"seed", cfg_.optimizer.seed},
                     {"scale", opts_.scale},
                     {"software_version", RESOCHAIN_VERSION},
                     {"started_utc", started_},
                     {"finished_utc", utc_now()},
                     {"elapsed_seconds", elapsed},
                     {"files", files},
                     {"summary", summary},
                     {"config", to_json(cfg_)}};
    out_->write("manifest.json", manifest.dump(2) + "\n");
    log("wrote " + (out_->root() / "manifest.json").string());
    return {out_->root(), out_->files(), summary};
  }

 private:
  std::string command_;
  RunOptions opts_;
  ExperimentConfig cfg_;
  std::chrono::steady_clock::time_point start_;
  std::string started_;
  std::optional<OutputDir> out_;
};

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

OptState load_state(const ExperimentConfig& cfg, const RunOptions& opts,
                    const std::filesystem::path& out) {
  const auto path = opts.state ? *opts.state : out / "result.json";
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("missing optimization state " + path.string() +
                      " (run `optimize` first or pass --state)");
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse optimization state " + path.string() + ": " + e.what());
  }
  OptState s = opt_state_from_json(j.at("state"));
  if (s.mu_star.size() != cfg.problem.design.size()) {
    throw ConfigError("optimization state does not match the problem in the config");
  }
  return s;
}

std::vector<std::vector<double>> lhs_points(std::size_t n, const std::vector<RandomVariable>& marg,
                                            std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> pts;
  for (const auto& u : latin_hypercube(n, marg.size(), rng)) {
    std::vector<double> x(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) x[k] = marg[k].quantile_unchecked(u[k]);
    pts.push_back(std::move(x));
  }
  return pts;
}

json stats(const std::vector<double>& v) {
  if (v.empty()) return {{"n", 0}};
  std::vector<double> s = v;
  std::sort(s.begin(), s.end());
  const double mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
  double var = 0.0;
  for (double x : s) var += (x - mean) * (x - mean);
  var /= static_cast<double>(std::max<std::size_t>(s.size() - 1, 1));
  auto q = [&](double p) { return s[static_cast<std::size_t>(p * static_cast<double>(s.size() - 1))]; };
  return {{"n", s.size()}, {"mean", mean}, {"std", std::sqrt(var)}, {"min", s.front()},
          {"q25", q(0.25)},  {"median", q(0.5)}, {"q75", q(0.75)}, {"max", s.back()}};
}

}  // namespace

std::vector<double> reference_design(const ExperimentConfig& cfg,
                                     const std::map<std::string, double>& overrides) {
  const ChainModel m = cfg.chain_model();
  std::vector<double> d;
  for (const auto& name : m.design_names) {
    const auto dot = name.find('.');
    const std::string prop = name.substr(0, dot);
    const NondimUnit& r = m.reference;
    double v = prop == "alpha" ? r.alpha : prop == "epsilon" ? r.epsilon : prop == "eta" ? r.eta
             : prop == "xi1"   ? r.xi1   : r.xi2;
    if (dot != std::string::npos && name.substr(dot + 1) != "a1") v = 0.0;
    d.push_back(v);
  }
  for (const auto& [name, value] : overrides) {
    const auto it = std::find(m.design_names.begin(), m.design_names.end(), name);
    if (it == m.design_names.end()) {
      throw ConfigError("simulate.design: '" + name + "' is not a design variable of the problem");
    }
    d[static_cast<std::size_t>(it - m.design_names.begin())] = value;
  }
  return d;
}

std::vector<double> nominal_aleatory(const ExperimentConfig& cfg) {
  std::vector<double> a;
  for (const auto& v : cfg.problem.aleatory) {
    if (v.name == "amplitude") {
      a.push_back(cfg.excitation.amplitude);
    } else {
      a.push_back(cfg.excitation.frequencies.at(std::stoul(v.name.substr(5)) - 1));
    }
  }
  return a;
}

RunReport cmd_simulate(ExperimentConfig cfg, const RunOptions& opts) {
  Run run("simulate", cfg, opts);
  const ChainModel model = cfg.chain_model();
  const std::vector<double> design = reference_design(cfg, cfg.simulate.design);
  const ChainSpec chain = model.chain(design);

  SimConfig sc = model.sim;
  sc.record_units = cfg.simulate.record_units;
  if (std::find(sc.record_units.begin(), sc.record_units.end(), model.response_unit) ==
      sc.record_units.end()) {
    sc.record_units.push_back(model.response_unit);
  }
  std::sort(sc.record_units.begin(), sc.record_units.end());
  sc.record_stride = cfg.simulate.record_stride;
  run.log("simulating " + std::to_string(chain.size()) + " units to tau=" + fmt(sc.t_end));
  const SimResult res = simulate(chain, cfg.excitation, sc);

  json rms = json::object();
  for (const auto& [u, v] : res.rms) rms[std::to_string(u)] = v;
  json summary = {{"response_unit", model.response_unit},
                  {"rms_response", res.rms.at(model.response_unit)},
                  {"rms", rms},
                  {"steps", res.steps},
                  {"window_begin_tau", res.tau.empty() ? 0.0 : res.tau[res.window_begin]},
                  {"design", design}};

  if (cfg.simulate.write_trajectory) {
    std::ostringstream os;
    os << std::setprecision(10);
    write_trajectory_csv(os, res);
    run.out().write("trajectory.csv", os.str());
  }
  if (cfg.simulate.write_spectrum) {
    const double dt = sc.dt * static_cast<double>(sc.record_stride);
    std::map<std::size_t, std::vector<SpectrumLine>> spectra;
    for (const auto& [u, series] : res.v1) {
      spectra[u] = spectrum(std::span(series).subspan(res.window_begin), dt);
    }
    std::ostringstream os;
    os << std::setprecision(10) << "omega_bar";
    for (const auto& [u, s] : spectra) os << ",magnitude_" << u;
    os << "\n";
    const std::size_t n = spectra.begin()->second.size();
    for (std::size_t i = 0; i < n; ++i) {
      os << spectra.begin()->second[i].omega_bar;
      for (const auto& [u, s] : spectra) os << "," << s[i].magnitude;
      os << "\n";
    }
    run.out().write("spectrum.csv", os.str());
  }
  if (cfg.simulate.sweep) {
    const auto& sw = *cfg.simulate.sweep;
    const auto it = std::find(model.design_names.begin(), model.design_names.end(), sw.parameter);
    if (it == model.design_names.end()) {
      throw ConfigError("simulate.sweep.parameter '" + sw.parameter + "' is not a design variable");
    }
    const auto idx = static_cast<std::size_t>(it - model.design_names.begin());
    std::vector<double> values(sw.values.size());
    std::vector<std::string> errors(sw.values.size());
    const std::vector<double> aleatory = nominal_aleatory(cfg);
    parallel_for(sw.values.size(), [&](std::size_t i) {
      std::vector<double> x = design;
      x[idx] = sw.values[i];
      x.insert(x.end(), aleatory.begin(), aleatory.end());
      try {
        values[i] = model.response(x);
      } catch (const NumericalError& e) {
        values[i] = std::numeric_limits<double>::quiet_NaN();
        errors[i] = e.what();
      }
    });
    std::ostringstream os;
    os << std::setprecision(12) << sw.parameter << ",rms\n";
    for (std::size_t i = 0; i < values.size(); ++i) os << sw.values[i] << "," << values[i] << "\n";
    run.out().write("sweep.csv", os.str());
    json sweep = {{"parameter", sw.parameter}, {"values", sw.values}};
    json rmsv = json::array();
    for (double v : values) rmsv.push_back(std::isfinite(v) ? json(v) : json(nullptr));
    sweep["rms"] = rmsv;
    std::vector<double> finite;
    for (double v : values) if (std::isfinite(v)) finite.push_back(v);
    if (auto cl = kmeans2(finite)) {
      sweep["clusters"] = {{"low_mean", cl->low_mean},   {"high_mean", cl->high_mean},
                           {"low_std", cl->low_std},     {"high_std", cl->high_std},
                           {"n_low", cl->n_low},         {"n_high", cl->n_high},
                           {"separation_ratio", cl->separation_ratio()}};
    }
    summary["sweep"] = sweep;
  }
  run.out().write("rms_summary.json", summary.dump(2) + "\n");
  return run.finish(summary);
}

RunReport cmd_dispersion(ExperimentConfig cfg, const RunOptions& opts) {
  Run run("dispersion", cfg, opts);
  const HBConfig hb = cfg.dispersion.resolve();
  NondimUnit base = cfg.chain_model().reference;
  if (base.xi1 != 0.0 || base.xi2 != 0.0) {
    throw ConfigError("dispersion: the reference unit must be undamped (xi1 = xi2 = 0)");
  }
  // Constant-mode design overrides (e.g. an optimum) apply to the unit.
  if (cfg.problem.mode == ParameterMode::kConstant) {
    const auto names = cfg.chain_model().design_names;
    const auto d = reference_design(cfg, cfg.simulate.design);
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == "alpha") base.alpha = d[i];
      if (names[i] == "epsilon") base.epsilon = d[i];
    }
  }
  std::ostringstream csv;
  csv << std::setprecision(12) << "kL,omega_acoustic,omega_optical,A,eta\n";
  json gaps = json::array();
  for (double eta : cfg.dispersion.etas) {
    for (double amp : cfg.dispersion.amplitudes) {
      NondimUnit u = base;
      u.eta = eta;
      const DispersionCurve c = dispersion_curve(u, amp, hb);
      for (std::size_t i = 0; i < c.kL.size(); ++i) {
        csv << c.kL[i] << "," << c.acoustic[i].omega_bar << "," << c.optical[i].omega_bar << ","
            << amp << "," << eta << "\n";
      }
      gaps.push_back({{"A", amp},
                      {"eta", eta},
                      {"alpha", u.alpha},
                      {"epsilon", u.epsilon},
                      {"low", c.gap.low},
                      {"high", c.gap.high},
                      {"has_gap", c.gap.open()},
                      {"width", c.gap.open() ? c.gap.width() : 0.0}});
      run.log("A=" + fmt(amp) + " eta=" + fmt(eta) + " gap=(" + fmt(c.gap.low) + ", " +
              fmt(c.gap.high) + ")");
    }
  }
  run.out().write("dispersion.csv", csv.str());
  json summary = {{"n_harmonics", hb.n_harmonics},
                  {"continuation_steps", hb.continuation_steps},
                  {"band_gaps", gaps}};
  run.out().write("band_gap.json", summary.dump(2) + "\n");
  return run.finish(summary);
}

RunReport cmd_optimize(ExperimentConfig cfg, const RunOptions& opts) {
  Run run("optimize", cfg, opts);
  const ProblemSpec problem = cfg.problem_spec();
  const ChainModel chain_model = cfg.chain_model();
  const OptimizerConfig ocfg = cfg.optimizer.resolve();
  const std::uint64_t seed = cfg.optimizer.seed;
  run.log("optimizing " + std::to_string(problem.n_design()) + " design + " +
          std::to_string(problem.aleatory.size()) + " aleatory variables, DOE " +
          std::to_string(ocfg.doe_size) + ", seed " + std::to_string(seed));

  std::string jsonl;
  auto on_iter = [&](const OptState& s) {
    const IterationRecord& r = s.history.back();
    json rec = to_json(r);
    json added = json::array();
    for (const auto& e : s.archive) {
      if (e.iteration == r.iteration + 1) added.push_back(to_json(e));
    }
    rec["archive_additions"] = added;
    jsonl += rec.dump() + "\n";
    run.out().write("iterations.jsonl", jsonl);
    std::ostringstream msg;
    msg << "iteration " << r.iteration << ": E_hat=" << std::setprecision(5) << r.e_hat
        << " evaluations=" << s.model_evaluations() << (r.single_cluster ? " (single cluster)" : "");
    run.log(msg.str());
  };
  const OptState state = optimize(problem, chain_model.as_model(), ocfg, seed, on_iter);
  const SurrogateEnsemble ens = final_ensemble(state, problem, ocfg);

  std::ostringstream hist;
  hist << std::setprecision(12) << "iteration,e_hat,best_e_hat,evaluations,single_cluster";
  for (const auto& d : problem.design) hist << ",mu_" << d.name;
  hist << "\n";
  for (const auto& r : state.history) {
    hist << r.iteration << "," << r.e_hat << "," << r.best_e_hat << "," << r.evaluations << ","
         << (r.single_cluster ? 1 : 0);
    for (double m : r.mu) hist << "," << m;
    hist << "\n";
  }
  run.out().write("history.csv", hist.str());

  std::ostringstream arch;
  arch << std::setprecision(12);
  for (const auto& d : problem.design) arch << d.name << ",";
  for (const auto& a : problem.aleatory) arch << a.name << ",";
  arch << "f,failed,origin,iteration\n";
  for (const auto& e : state.archive) {
    for (double v : e.x) arch << v << ",";
    arch << e.f << "," << (e.failed ? 1 : 0) << "," << e.origin << "," << e.iteration << "\n";
  }
  run.out().write("archive.csv", arch.str());
  run.out().write("surrogate.json", to_json(ens).dump(1) + "\n");

  json mu = json::object();
  for (std::size_t i = 0; i < problem.n_design(); ++i) mu[problem.design[i].name] = state.mu_star[i];
  json summary = {{"mu_star", mu},
                  {"e_hat", state.e_hat},
                  {"converged", state.converged},
                  {"iterations", state.history.size()},
                  {"model_evaluations", state.model_evaluations()},
                  {"failed_evaluations",
                   std::count_if(state.archive.begin(), state.archive.end(),
                                 [](const Evaluation& e) { return e.failed; })},
                  {"seed", seed},
                  {"convergence_rule", {{"relative_tol", ocfg.convergence_tol},
                                        {"window", ocfg.convergence_window}}},
                  {"n_mc", ocfg.n_mc},
                  {"n_mc_search", ocfg.n_mc_search}};
  run.out().write("result.json",
                  json{{"summary", summary}, {"state", to_json(state)}}.dump(1) + "\n");
  return run.finish(summary);
}

RunReport cmd_validate(ExperimentConfig cfg, const RunOptions& opts) {
  Run run("validate", cfg, opts);
  const OptState state = load_state(cfg, opts, run.out().root());
  const ProblemSpec problem = cfg.problem_spec();
  ValidationOptions v;
  v.n_histogram_runs = cfg.validation.n_histogram_runs;
  v.n_mc = cfg.validation.n_mc;
  v.n_mc_true = cfg.validation.n_mc_true;
  run.log("validating with " + std::to_string(v.n_mc_true) + " actual-model runs");
  const ValidationResult r = validate_optimum(state, problem, cfg.chain_model().as_model(),
                                              cfg.optimizer.resolve(), v, cfg.optimizer.seed);
  json summary = {{"e_hat", r.e_hat},
                  {"corrected_e_hat", r.corrected},
                  {"true_e", r.true_e},
                  {"relative_error", r.relative_error},
                  {"n_histogram_runs", v.n_histogram_runs},
                  {"n_mc", v.n_mc},
                  {"n_mc_true", v.n_mc_true},
                  {"failed", r.failed},
                  {"estimates", stats(r.estimates)},
                  {"true_samples", stats(r.true_samples)}};
  run.out().write("validation.json", summary.dump(2) + "\n");
  run.out().write("validation_histogram.csv", histogram_csv(r.estimates, cfg.validation.bins));
  std::ostringstream ts;
  ts << std::setprecision(12) << "f\n";
  for (double f : r.true_samples) ts << f << "\n";
  run.out().write("validation_true_samples.csv", ts.str());
  return run.finish(summary);
}

RunReport cmd_robustness(ExperimentConfig cfg, const RunOptions& opts) {
  Run run("robustness", cfg, opts);
  const OptState state = load_state(cfg, opts, run.out().root());
  const ProblemSpec problem = cfg.problem_spec();
  const Model model = cfg.chain_model().as_model();
  const std::size_t n = cfg.robustness.n_samples;
  const std::uint64_t seed = cfg.optimizer.seed;

  const auto around = lhs_points(n, problem.marginals(state.mu_star), derive_seed(seed, 20));
  const ExpandedSpace space = problem.expanded_space();
  std::vector<RandomVariable> uniform;
  for (std::size_t k = 0; k < space.dim(); ++k) {
    uniform.push_back(RandomVariable::uniform(space.lower[k], space.upper[k]));
  }
  const auto spread = lhs_points(n, uniform, derive_seed(seed, 21));
  run.log("robustness: " + std::to_string(2 * n) + " actual-model runs");
  auto responses = [&](const std::vector<std::vector<double>>& pts) {
    std::vector<double> f;
    for (const auto& e : evaluate_batch(model, pts, 0, "robustness", 0)) {
      if (!e.failed) f.push_back(e.f);
    }
    return f;
  };
  const std::vector<double> fo = responses(around);
  const std::vector<double> fu = responses(spread);

  // Shared bins so the two histograms are comparable.
  std::vector<double> all = fo;
  all.insert(all.end(), fu.begin(), fu.end());
  std::ostringstream hist;
  hist << std::setprecision(10) << "bin_lo,bin_hi,count_optimum,count_uniform\n";
  if (!all.empty()) {
    const double lo = *std::min_element(all.begin(), all.end());
    const double hi = *std::max_element(all.begin(), all.end());
    const std::size_t bins = hi > lo ? cfg.robustness.bins : 1;
    const double w = hi > lo ? (hi - lo) / static_cast<double>(bins) : 0.0;
    std::vector<std::size_t> co(bins, 0), cu(bins, 0);
    auto bin = [&](double v) {
      if (w == 0.0) return std::size_t{0};
      return std::min(bins - 1, static_cast<std::size_t>((v - lo) / w));
    };
    for (double v : fo) co[bin(v)]++;
    for (double v : fu) cu[bin(v)]++;
    for (std::size_t b = 0; b < bins; ++b) {
      hist << lo + w * static_cast<double>(b) << ","
           << (w == 0.0 ? hi : lo + w * static_cast<double>(b + 1)) << "," << co[b] << ","
           << cu[b] << "\n";
    }
  }
  run.out().write("robustness_histogram.csv", hist.str());
  run.out().write("robustness_cdf_optimum.csv", ecdf_csv(fo));
  run.out().write("robustness_cdf_uniform.csv", ecdf_csv(fu));
  json summary = {{"optimum", stats(fo)}, {"uniform", stats(fu)}, {"n_samples", n}};
  run.out().write("robustness.json", summary.dump(2) + "\n");
  return run.finish(summary);
}

}  // namespace resochain::experiment
