#include "resochain/experiment/io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "resochain/errors.hpp"

namespace resochain::experiment {

using nlohmann::json;

namespace {

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> r(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index k = 0; k < m.cols(); ++k) r[static_cast<std::size_t>(k)] = m(i, k);
    rows.push_back(r);
  }
  return rows;
}

Eigen::MatrixXd matrix_from(const json& rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = n == 0 ? 0 : static_cast<Eigen::Index>(rows[0].size());
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) m(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>();
  }
  return m;
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vector_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json kriging_json(const KrigingModel& k) {
  return {{"inputs", matrix_json(k.inputs())},
          {"outputs", vector_json(k.outputs())},
          {"theta", k.theta()},
          {"beta", k.beta()},
          {"process_variance", k.process_variance()},
          {"nugget", k.nugget()},
          {"neg_log_likelihood", k.neg_log_likelihood()}};
}

KrigingModel kriging_from(const json& j) {
  return kriging_build(matrix_from(j.at("inputs")), vector_from(j.at("outputs")),
                       j.at("theta").get<std::vector<double>>(), j.at("nugget").get<double>());
}

// JSON has no infinities; encode non-finite responses as null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json to_json(const Evaluation& e) {
  json j = {{"x", e.x}, {"f", number(e.f)}, {"failed", e.failed}, {"iteration", e.iteration},
            {"origin", e.origin}};
  if (!e.error.empty()) j["error"] = e.error;
  return j;
}

json to_json(const IterationRecord& r) {
  return {{"iteration", r.iteration},
          {"mu", r.mu},
          {"e_hat", r.e_hat},
          {"best_e_hat", r.best_e_hat},
          {"single_cluster", r.single_cluster},
          {"maxmin_fallback", r.maxmin_fallback},
          {"n_low", r.n_low},
          {"n_high", r.n_high},
          {"evaluations", r.evaluations},
          {"pso_evaluations", r.pso_evaluations}};
}

json to_json(const OptState& s) {
  json archive = json::array(), history = json::array();
  for (const auto& e : s.archive) archive.push_back(to_json(e));
  for (const auto& r : s.history) history.push_back(to_json(r));
  return {{"mu_star", s.mu_star}, {"e_hat", s.e_hat}, {"converged", s.converged},
          {"seed", s.seed},       {"model_evaluations", s.model_evaluations()},
          {"history", history},   {"archive", archive}};
}

OptState opt_state_from_json(const json& j) {
  try {
    OptState s;
    s.mu_star = j.at("mu_star").get<std::vector<double>>();
    s.e_hat = j.at("e_hat").get<double>();
    s.converged = j.at("converged").get<bool>();
    s.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& a : j.at("archive")) {
      Evaluation e;
      e.x = a.at("x").get<std::vector<double>>();
      e.f = a.at("f").is_null() ? std::numeric_limits<double>::quiet_NaN() : a.at("f").get<double>();
      e.failed = a.at("failed").get<bool>();
      e.iteration = a.at("iteration").get<std::size_t>();
      e.origin = a.at("origin").get<std::string>();
      if (a.contains("error")) e.error = a.at("error").get<std::string>();
      s.archive.push_back(std::move(e));
    }
    for (const auto& h : j.at("history")) {
      IterationRecord r;
      r.iteration = h.at("iteration").get<std::size_t>();
      r.mu = h.at("mu").get<std::vector<double>>();
      r.e_hat = h.at("e_hat").get<double>();
      r.best_e_hat = h.at("best_e_hat").get<double>();
      r.single_cluster = h.at("single_cluster").get<bool>();
      r.maxmin_fallback = h.at("maxmin_fallback").get<bool>();
      r.n_low = h.at("n_low").get<std::size_t>();
      r.n_high = h.at("n_high").get<std::size_t>();
      r.evaluations = h.at("evaluations").get<std::size_t>();
      r.pso_evaluations = h.at("pso_evaluations").get<std::size_t>();
      s.history.push_back(std::move(r));
    }
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("optimization state: ") + e.what());
  }
}

json to_json(const SurrogateEnsemble& ens) {
  json j = {{"space", {{"lower", ens.space.lower}, {"upper", ens.space.upper}}},
            {"single_cluster", ens.single_cluster()},
            {"kriging_low", kriging_json(ens.kriging_low)},
            {"kriging_high", kriging_json(ens.kriging_high)}};
  if (ens.svm) {
    const auto& s = *ens.svm;
    j["svm"] = {{"support_vectors", matrix_json(s.support_vectors())},
                {"coefficients", vector_json(s.coefficients())},
                {"bias", s.bias()},
                {"sigma", s.sigma()},
                {"C", s.C()},
                {"multipliers", s.multipliers()},
                {"training_accuracy", s.training_accuracy}};
  }
  if (ens.clustering) {
    const auto& c = *ens.clustering;
    j["clustering"] = {{"labels", c.labels},     {"low_mean", c.low_mean}, {"high_mean", c.high_mean},
                       {"low_std", c.low_std},   {"high_std", c.high_std}, {"n_low", c.n_low},
                       {"n_high", c.n_high},     {"wcss", c.wcss}};
  }
  return j;
}

SurrogateEnsemble ensemble_from_json(const json& j) {
  try {
    SurrogateEnsemble ens;
    ens.space.lower = j.at("space").at("lower").get<std::vector<double>>();
    ens.space.upper = j.at("space").at("upper").get<std::vector<double>>();
    ens.kriging_low = kriging_from(j.at("kriging_low"));
    ens.kriging_high = kriging_from(j.at("kriging_high"));
    if (j.contains("svm")) {
      const auto& s = j.at("svm");
      SvmModel m(matrix_from(s.at("support_vectors")), vector_from(s.at("coefficients")),
                 s.at("bias").get<double>(), s.at("sigma").get<double>(), s.at("C").get<double>(),
                 s.at("multipliers").get<std::vector<double>>());
      m.training_accuracy = s.at("training_accuracy").get<double>();
      ens.svm = std::move(m);
    }
    if (j.contains("clustering")) {
      const auto& c = j.at("clustering");
      Clustering cl;
      cl.labels = c.at("labels").get<std::vector<int>>();
      cl.low_mean = c.at("low_mean").get<double>();
      cl.high_mean = c.at("high_mean").get<double>();
      cl.low_std = c.at("low_std").get<double>();
      cl.high_std = c.at("high_std").get<double>();
      cl.n_low = c.at("n_low").get<std::size_t>();
      cl.n_high = c.at("n_high").get<std::size_t>();
      cl.wcss = c.at("wcss").get<double>();
      ens.clustering = cl;
    }
    return ens;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("surrogate snapshot: ") + e.what());
  }
}

OutputDir::OutputDir(std::filesystem::path root) : root_(std::move(root)) {
  std::filesystem::create_directories(root_);
}

void OutputDir::write(const std::string& name, const std::string& content) {
  const auto path = root_ / name;
  const auto tmp = root_ / (name + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
  if (std::find(files_.begin(), files_.end(), name) == files_.end()) files_.push_back(name);
}

std::string histogram_csv(const std::vector<double>& values, std::size_t bins) {
  std::ostringstream os;
  os.precision(10);
  os << "bin_lo,bin_hi,count\n";
  if (values.empty() || bins == 0) return os.str();
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  double lo = *mn, hi = *mx;
  if (hi == lo) {
    os << lo << "," << hi << "," << values.size() << "\n";
    return os.str();
  }
  std::vector<std::size_t> counts(bins, 0);
  for (double v : values) {
    auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
    counts[std::min(b, bins - 1)]++;
  }
  const double w = (hi - lo) / static_cast<double>(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    os << lo + w * static_cast<double>(b) << "," << lo + w * static_cast<double>(b + 1) << ","
       << counts[b] << "\n";
  }
  return os.str();
}

std::string ecdf_csv(const std::vector<double>& values) {
  std::vector<double> v = values;
  std::sort(v.begin(), v.end());
  std::ostringstream os;
  os.precision(10);
  os << "value,probability\n";
  for (std::size_t i = 0; i < v.size(); ++i) {
    os << v[i] << "," << static_cast<double>(i + 1) / static_cast<double>(v.size()) << "\n";
  }
  return os.str();
}

}  // namespace resochain::experiment
