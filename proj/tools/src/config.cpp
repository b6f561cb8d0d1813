#include "resochain/experiment/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "resochain/errors.hpp"

namespace resochain::experiment {

using nlohmann::json;

namespace {

// Reads fields of one JSON object, remembering which keys were consumed so
// that leftovers can be reported as unknown.
class Reader {
 public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  bool has(const std::string& key) const { return obj_.contains(key); }

  template <class T>
  void get(const std::string& key, T& out) {
    if (!obj_.contains(key)) return;
    seen_.insert(key);
    try {
      out = convert<T>(obj_.at(key), key);
    } catch (const json::exception& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

  template <class T>
  void get(const std::string& key, std::optional<T>& out) {
    if (!obj_.contains(key)) return;
    T v{};
    get(key, v);
    out = v;
  }

  template <class T>
  T required(const std::string& key) {
    if (!obj_.contains(key)) throw ConfigError(where(key) + ": missing required key");
    T v{};
    get(key, v);
    return v;
  }

  Reader child(const std::string& key) {
    seen_.insert(key);
    return Reader(obj_.at(key), where(key));
  }

  std::vector<Reader> children(const std::string& key) {
    seen_.insert(key);
    const json& arr = obj_.at(key);
    if (!arr.is_array()) throw ConfigError(where(key) + ": expected an array");
    std::vector<Reader> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      out.emplace_back(arr[i], where(key) + "[" + std::to_string(i) + "]");
    }
    return out;
  }

  void finish() const {
    for (const auto& [k, v] : obj_.items()) {
      if (!seen_.count(k)) throw ConfigError(where(k) + ": unknown key");
    }
  }

  std::string where(const std::string& key = "") const {
    return key.empty() ? path_ : path_ + "." + key;
  }

 private:
  template <class T>
  T convert(const json& v, const std::string& key) const {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(where(key) + ": expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer() || (std::is_unsigned_v<T> && v.get<long long>() < 0)) {
        throw ConfigError(where(key) + ": expected a non-negative integer");
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(where(key) + ": expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(where(key) + ": expected a string");
    }
    return v.get<T>();
  }

  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string mode_name(ParameterMode m) { return m == ParameterMode::kField ? "field" : "constant"; }

void read_unit(Reader r, NondimUnit& u) {
  r.get("alpha", u.alpha);
  r.get("epsilon", u.epsilon);
  r.get("eta", u.eta);
  r.get("xi1", u.xi1);
  r.get("xi2", u.xi2);
  r.finish();
}

json unit_json(const NondimUnit& u) {
  return {{"alpha", u.alpha}, {"epsilon", u.epsilon}, {"eta", u.eta}, {"xi1", u.xi1}, {"xi2", u.xi2}};
}

}  // namespace

DesignVariable DesignEntry::resolve() const {
  const bool raw = lo.has_value() || hi.has_value();
  const bool mean = mu_min.has_value() || mu_max.has_value();
  if (raw == mean || (raw && !(lo && hi)) || (mean && !(mu_min && mu_max))) {
    throw ConfigError("problem.design '" + name +
                      "': give either lo and hi (realization bounds) or mu_min and mu_max");
  }
  DesignVariable v;
  v.name = name;
  v.cov = cov;
  if (raw) {
    try {
      std::tie(v.mu_min, v.mu_max) = feasible_mu_bounds(*lo, *hi, cov);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("problem.design '" + name + "': " + e.what());
    }
  } else {
    v.mu_min = *mu_min;
    v.mu_max = *mu_max;
  }
  return v;
}

OptimizerConfig OptimizerBlock::resolve() const {
  OptimizerConfig c;
  c.doe_size = doe_size;
  c.max_iterations = max_iterations;
  c.n_mc = n_mc;
  c.n_mc_search = n_mc_search;
  c.convergence_tol = convergence_tol;
  c.convergence_window = convergence_window;
  c.pso.swarm_size = pso_swarm;
  c.pso.iterations = pso_iterations;
  c.pso.stall_iterations = pso_stall_iterations;
  c.ensemble.svm.C = svm_C;
  c.ensemble.svm.sigma = svm_sigma;
  c.ensemble.single_cluster_ratio = single_cluster_ratio;
  c.maxmin.p = maxmin_p;
  c.maxmin.tolerance = maxmin_tolerance;
  return c;
}

HBConfig DispersionBlock::resolve() const {
  HBConfig c;
  c.n_harmonics = n_harmonics;
  c.quadrature_points = quadrature_points;
  c.newton_tol = newton_tol;
  c.max_newton_iters = max_newton_iters;
  c.continuation_steps = continuation_steps;
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("dispersion: ") + e.what());
  }
  return c;
}

ProblemSpec ExperimentConfig::problem_spec() const {
  ProblemSpec p;
  for (const auto& d : problem.design) p.design.push_back(d.resolve());
  p.aleatory = problem.aleatory;
  p.response_unit = sim.response_unit;
  p.validate();
  return p;
}

SimConfig ExperimentConfig::sim_config() const {
  SimConfig s;
  s.dt = sim.dt;
  s.t_end = sim.t_end;
  s.transient_fraction = sim.transient_fraction;
  s.record_units = {sim.response_unit};
  s.overflow_guard = sim.overflow_guard;
  s.light_cone_pruning = sim.light_cone_pruning;
  return s;
}

ChainModel ExperimentConfig::chain_model() const {
  ChainModel m;
  m.mode = problem.mode;
  m.n_units = n_units;
  m.reference = dimensional ? nondimensionalize(*dimensional) : reference;
  m.excitation = excitation;
  m.sim = sim_config();
  m.response_unit = sim.response_unit;
  for (const auto& d : problem.design) m.design_names.push_back(d.name);
  for (const auto& a : problem.aleatory) m.aleatory_names.push_back(a.name);
  m.validate();
  return m;
}

void ExperimentConfig::validate() const {
  if (schema_version != kSchemaVersion) {
    throw ConfigError("schema_version " + std::to_string(schema_version) +
                      " is not supported (expected " + std::to_string(kSchemaVersion) + ")");
  }
  try {
    sim_config().validate();
    excitation.validate();
    if (dimensional) nondimensionalize(*dimensional); else reference.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  chain_model();
  if (!problem.design.empty()) {
    const ProblemSpec p = problem_spec();
    optimizer.resolve().validate(p);
  }
  for (std::size_t u : simulate.record_units) {
    if (u < 1 || u > n_units) throw ConfigError("simulate.record_units: unit outside the chain");
  }
  if (simulate.record_stride < 1) throw ConfigError("simulate.record_stride must be >= 1");
  dispersion.resolve();
}

void ExperimentConfig::apply_scale(double factor) {
  if (!(factor > 0.0 && factor <= 1.0)) throw ConfigError("--scale must lie in (0, 1]");
  if (factor == 1.0) return;
  auto scaled = [&](std::size_t v, std::size_t floor) {
    return std::max(floor, static_cast<std::size_t>(std::ceil(static_cast<double>(v) * factor)));
  };
  n_units = scaled(n_units, std::max<std::size_t>(sim.response_unit + 1, 2));
  // Shorten the window so waves reflected at the free end cannot return to
  // the response unit (conservative dispersive front, see the simulator).
  auto reach = [](double t) { return t + 40.0 + 12.0 * std::cbrt(t); };
  const double round_trip = 2.0 * static_cast<double>(n_units) - static_cast<double>(sim.response_unit);
  double t = sim.t_end * factor;
  while (t > 1.0 && reach(t) > round_trip) t *= 0.95;
  sim.t_end = t;
  const std::size_t dim = problem.design.size() + problem.aleatory.size();
  optimizer.doe_size = scaled(optimizer.doe_size, 2 * dim);
  optimizer.max_iterations = scaled(optimizer.max_iterations, 1);
  optimizer.n_mc = scaled(optimizer.n_mc, 100);
  optimizer.n_mc_search = scaled(optimizer.n_mc_search, 100);
  validation.n_histogram_runs = scaled(validation.n_histogram_runs, 2);
  validation.n_mc = scaled(validation.n_mc, 100);
  validation.n_mc_true = scaled(validation.n_mc_true, 2);
  robustness.n_samples = scaled(robustness.n_samples, 1);
  simulate.record_units.erase(
      std::remove_if(simulate.record_units.begin(), simulate.record_units.end(),
                     [&](std::size_t u) { return u > n_units; }),
      simulate.record_units.end());
}

ExperimentConfig parse_config(const json& doc) {
  ExperimentConfig c;
  Reader root(doc, "config");
  c.schema_version = root.required<int>("schema_version");
  root.get("name", c.name);
  root.get("output_dir", c.output_dir);

  if (root.has("chain")) {
    Reader r = root.child("chain");
    r.get("n_units", c.n_units);
    if (r.has("reference")) read_unit(r.child("reference"), c.reference);
    if (r.has("dimensional")) {
      if (r.has("reference")) {
        throw ConfigError("config.chain: give either reference or dimensional, not both");
      }
      Reader d = r.child("dimensional");
      DimensionalUnit u;
      d.get("m1", u.m1);
      d.get("m2", u.m2);
      d.get("k1", u.k1);
      d.get("k2", u.k2);
      d.get("kn", u.kn);
      d.get("c1", u.c1);
      d.get("c2", u.c2);
      d.get("L", u.L);
      d.finish();
      c.dimensional = u;
    }
    r.finish();
  }
  if (root.has("excitation")) {
    Reader r = root.child("excitation");
    r.get("amplitude", c.excitation.amplitude);
    r.get("frequencies", c.excitation.frequencies);
    r.get("phases", c.excitation.phases);
    r.finish();
  }
  if (root.has("sim")) {
    Reader r = root.child("sim");
    r.get("dt", c.sim.dt);
    r.get("t_end", c.sim.t_end);
    r.get("transient_fraction", c.sim.transient_fraction);
    r.get("response_unit", c.sim.response_unit);
    r.get("overflow_guard", c.sim.overflow_guard);
    r.get("light_cone_pruning", c.sim.light_cone_pruning);
    r.finish();
  }
  if (root.has("problem")) {
    Reader r = root.child("problem");
    std::string mode = "constant";
    r.get("mode", mode);
    if (mode == "constant") c.problem.mode = ParameterMode::kConstant;
    else if (mode == "field") c.problem.mode = ParameterMode::kField;
    else throw ConfigError(r.where("mode") + ": expected 'constant' or 'field'");
    if (r.has("design")) {
      for (Reader d : r.children("design")) {
        DesignEntry e;
        e.name = d.required<std::string>("name");
        d.get("lo", e.lo);
        d.get("hi", e.hi);
        d.get("mu_min", e.mu_min);
        d.get("mu_max", e.mu_max);
        d.get("cov", e.cov);
        d.finish();
        c.problem.design.push_back(e);
      }
    }
    if (r.has("aleatory")) {
      for (Reader a : r.children("aleatory")) {
        AleatoryVariable v;
        v.name = a.required<std::string>("name");
        v.lo = a.required<double>("lo");
        v.hi = a.required<double>("hi");
        a.finish();
        c.problem.aleatory.push_back(v);
      }
    }
    r.finish();
  }
  if (root.has("simulate")) {
    Reader r = root.child("simulate");
    r.get("design", c.simulate.design);
    r.get("record_units", c.simulate.record_units);
    r.get("write_trajectory", c.simulate.write_trajectory);
    r.get("write_spectrum", c.simulate.write_spectrum);
    r.get("record_stride", c.simulate.record_stride);
    if (r.has("sweep")) {
      Reader s = r.child("sweep");
      SweepBlock sw;
      sw.parameter = s.required<std::string>("parameter");
      sw.values = s.required<std::vector<double>>("values");
      s.finish();
      c.simulate.sweep = sw;
    }
    r.finish();
  }
  if (root.has("optimizer")) {
    Reader r = root.child("optimizer");
    auto& o = c.optimizer;
    r.get("seed", o.seed);
    r.get("doe_size", o.doe_size);
    r.get("max_iterations", o.max_iterations);
    r.get("n_mc", o.n_mc);
    r.get("n_mc_search", o.n_mc_search);
    r.get("convergence_tol", o.convergence_tol);
    r.get("convergence_window", o.convergence_window);
    r.get("pso_swarm", o.pso_swarm);
    r.get("pso_iterations", o.pso_iterations);
    r.get("pso_stall_iterations", o.pso_stall_iterations);
    r.get("svm_C", o.svm_C);
    r.get("svm_sigma", o.svm_sigma);
    r.get("maxmin_p", o.maxmin_p);
    r.get("maxmin_tolerance", o.maxmin_tolerance);
    r.get("single_cluster_ratio", o.single_cluster_ratio);
    r.finish();
  }
  if (root.has("validation")) {
    Reader r = root.child("validation");
    r.get("n_histogram_runs", c.validation.n_histogram_runs);
    r.get("n_mc", c.validation.n_mc);
    r.get("n_mc_true", c.validation.n_mc_true);
    r.get("bins", c.validation.bins);
    r.finish();
  }
  if (root.has("robustness")) {
    Reader r = root.child("robustness");
    r.get("n_samples", c.robustness.n_samples);
    r.get("bins", c.robustness.bins);
    r.finish();
  }
  if (root.has("dispersion")) {
    Reader r = root.child("dispersion");
    auto& d = c.dispersion;
    r.get("n_harmonics", d.n_harmonics);
    r.get("quadrature_points", d.quadrature_points);
    r.get("newton_tol", d.newton_tol);
    r.get("max_newton_iters", d.max_newton_iters);
    r.get("continuation_steps", d.continuation_steps);
    r.get("amplitudes", d.amplitudes);
    r.get("etas", d.etas);
    r.finish();
  }
  root.finish();
  c.validate();
  return c;
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into a line and column.
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) +
                      ": JSON syntax error: " + e.what());
  }
  return parse_config(doc);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

json to_json(const ExperimentConfig& c) {
  json chain = {{"n_units", c.n_units}};
  if (c.dimensional) {
    const auto& d = *c.dimensional;
    chain["dimensional"] = {{"m1", d.m1}, {"m2", d.m2}, {"k1", d.k1}, {"k2", d.k2},
                            {"kn", d.kn}, {"c1", d.c1}, {"c2", d.c2}, {"L", d.L}};
  } else {
    chain["reference"] = unit_json(c.reference);
  }
  json design = json::array();
  for (const auto& d : c.problem.design) {
    json e = {{"name", d.name}, {"cov", d.cov}};
    if (d.lo) e["lo"] = *d.lo;
    if (d.hi) e["hi"] = *d.hi;
    if (d.mu_min) e["mu_min"] = *d.mu_min;
    if (d.mu_max) e["mu_max"] = *d.mu_max;
    design.push_back(e);
  }
  json aleatory = json::array();
  for (const auto& a : c.problem.aleatory) {
    aleatory.push_back({{"name", a.name}, {"lo", a.lo}, {"hi", a.hi}});
  }
  json simulate = {{"design", c.simulate.design},
                   {"record_units", c.simulate.record_units},
                   {"write_trajectory", c.simulate.write_trajectory},
                   {"write_spectrum", c.simulate.write_spectrum},
                   {"record_stride", c.simulate.record_stride}};
  if (c.simulate.sweep) {
    simulate["sweep"] = {{"parameter", c.simulate.sweep->parameter},
                         {"values", c.simulate.sweep->values}};
  }
  const auto& o = c.optimizer;
  json opt = {{"seed", o.seed},
              {"doe_size", o.doe_size},
              {"max_iterations", o.max_iterations},
              {"n_mc", o.n_mc},
              {"n_mc_search", o.n_mc_search},
              {"convergence_tol", o.convergence_tol},
              {"convergence_window", o.convergence_window},
              {"pso_swarm", o.pso_swarm},
              {"pso_iterations", o.pso_iterations},
              {"pso_stall_iterations", o.pso_stall_iterations},
              {"svm_C", o.svm_C},
              {"maxmin_p", o.maxmin_p},
              {"maxmin_tolerance", o.maxmin_tolerance},
              {"single_cluster_ratio", o.single_cluster_ratio}};
  if (o.svm_sigma) opt["svm_sigma"] = *o.svm_sigma;
  const auto& d = c.dispersion;
  return {
      {"schema_version", c.schema_version},
      {"name", c.name},
      {"output_dir", c.output_dir},
      {"chain", chain},
      {"excitation",
       {{"amplitude", c.excitation.amplitude},
        {"frequencies", c.excitation.frequencies},
        {"phases", c.excitation.phases}}},
      {"sim",
       {{"dt", c.sim.dt},
        {"t_end", c.sim.t_end},
        {"transient_fraction", c.sim.transient_fraction},
        {"response_unit", c.sim.response_unit},
        {"overflow_guard", c.sim.overflow_guard},
        {"light_cone_pruning", c.sim.light_cone_pruning}}},
      {"problem", {{"mode", mode_name(c.problem.mode)}, {"design", design}, {"aleatory", aleatory}}},
      {"simulate", simulate},
      {"optimizer", opt},
      {"validation",
       {{"n_histogram_runs", c.validation.n_histogram_runs},
        {"n_mc", c.validation.n_mc},
        {"n_mc_true", c.validation.n_mc_true},
        {"bins", c.validation.bins}}},
      {"robustness", {{"n_samples", c.robustness.n_samples}, {"bins", c.robustness.bins}}},
      {"dispersion",
       {{"n_harmonics", d.n_harmonics},
        {"quadrature_points", d.quadrature_points},
        {"newton_tol", d.newton_tol},
        {"max_newton_iters", d.max_newton_iters},
        {"continuation_steps", d.continuation_steps},
        {"amplitudes", d.amplitudes},
        {"etas", d.etas}}},
  };
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string s = to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig preset(int problem) {
  ExperimentConfig c;
  c.reference = NondimUnit{0.5, 0.5, 0.0, 0.0, 0.0};
  c.n_units = 1000;
  c.excitation.amplitude = 10.0;
  auto add = [&](const std::string& n, double lo, double hi) {
    DesignEntry e;
    e.name = n;
    e.lo = lo;
    e.hi = hi;
    c.problem.design.push_back(e);
  };
  switch (problem) {
    case 1:
      c.name = "problem1";
      c.excitation.frequencies = {1.25};
      add("eta", 1e-6, 5e-4);
      c.problem.aleatory = {{"amplitude", 8.0, 12.0}, {"omega1", 1.23, 1.27}};
      c.optimizer.doe_size = 10;
      break;
    case 2:
      c.name = "problem2";
      c.excitation.frequencies = {0.5, 1.25};
      add("alpha", 1e-6, 0.5);
      add("epsilon", 0.25, 2.5);
      add("eta", 1e-6, 5e-4);
      c.problem.aleatory = {{"amplitude", 8.0, 12.0}, {"omega1", 0.48, 0.52}, {"omega2", 1.23, 1.27}};
      c.optimizer.doe_size = 75;
      break;
    case 3:
      c.name = "problem3";
      c.excitation.frequencies = {0.5, 1.25};
      c.problem.mode = ParameterMode::kField;
      add("alpha.a1", 1e-6, 0.25);
      add("alpha.a2", 1e-6, 0.25);
      add("alpha.a3", 1e-6, 0.5);
      add("epsilon.a1", 0.25, 1.25);
      add("epsilon.a2", 1e-2, 1.25);
      add("epsilon.a3", 1e-2, 0.5);
      add("eta.a1", 1e-6, 2.5e-4);
      add("eta.a2", 1e-6, 2.5e-4);
      add("eta.a3", 1e-6, 0.5);
      c.problem.aleatory = {{"amplitude", 8.0, 12.0}, {"omega1", 0.48, 0.52}, {"omega2", 1.23, 1.27}};
      c.optimizer.doe_size = 175;
      break;
    default:
      throw ConfigError("preset: problem must be 1, 2 or 3");
  }
  c.output_dir = "out/" + c.name;
  c.validate();
  return c;
}

}  // namespace resochain::experiment
