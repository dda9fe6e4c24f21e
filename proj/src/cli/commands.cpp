#include "pssm/cli/commands.hpp"

#include "pssm/asymptotics.hpp"
#include "pssm/hypothesis_tests.hpp"
#include "pssm/models/ou.hpp"
#include "pssm/models/rng.hpp"
#include "pssm/score_fisher.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace pssm::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json to_json(const Vec& v) {
  json j = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

json to_json(const Mat& m) {
  json j = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) j.push_back(to_json(Vec(m.row(i).transpose())));
  return j;
}

json named(const std::vector<std::string>& names, const Vec& v) {
  json j = json::object();
  for (std::size_t i = 0; i < names.size(); ++i) j[names[i]] = v(static_cast<Eigen::Index>(i));
  return j;
}

std::string output_dir(const ExperimentConfig& cfg, const RunOptions& run) {
  const std::string dir = run.out_dir ? *run.out_dir : cfg.output_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw InputError("output directory '" + dir + "' cannot be created");
  const fs::path probe = fs::path(dir) / ".pssm_write_probe";
  {
    std::ofstream out(probe);
    if (!out) throw InputError("output directory '" + dir + "' is not writable");
  }
  fs::remove(probe, ec);
  return dir;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InputError("'" + path + "': " + e.what());
  }
}

std::vector<std::string> component_names(Eigen::Index from, Eigen::Index to) {
  std::vector<std::string> names;
  for (Eigen::Index i = from; i <= to; ++i) names.push_back("x" + std::to_string(i));
  return names;
}

std::uint64_t simulation_seed(const SimulateConfig& sc, const RunOptions& run) {
  if (run.seed) return *run.seed;
  if (!sc.seed) throw InputError("data.simulate.seed: a seed is required when simulating");
  return *sc.seed;
}

double default_mesh(const ModelConfig& mc) {
  if (mc.id == "heston") return HestonSimOptions{}.inner_dt;
  if (mc.id == "ou") return OuSimOptions{}.mesh;
  return 1.0;
}

struct Dataset {
  Mat observed;
  std::optional<SimulationResult> sim;
};

Dataset load_data(const ExperimentConfig& cfg, const RunOptions& run, const Model& model) {
  Dataset ds;
  if (cfg.data.simulate) {
    const auto& sc = *cfg.data.simulate;
    ds.sim = simulate_config(cfg.model, sc.T, simulation_seed(sc, run), sc.mesh);
    ds.observed = ds.sim->observations();
  } else if (cfg.data.path) {
    ds.observed = read_csv(*cfg.data.path);
  } else {
    throw InputError("data: a data path or a simulation spec is required");
  }
  const Eigen::Index d = model.state_dim(), o = model.observed_dim();
  if (ds.observed.cols() == d && d != o) ds.observed = Mat(ds.observed.rightCols(o));
  if (ds.observed.cols() != o)
    throw InputError("data: expected " + std::to_string(o) + " observed columns, found " + std::to_string(ds.observed.cols()));
  if (ds.observed.rows() < 1) throw InputError("data: no rows");
  return ds;
}

EstimateOptions estimate_options(const ExperimentConfig& cfg, const RunOptions& run) {
  EstimateOptions eo;
  eo.n_starts = cfg.estimate.starts;
  eo.start = cfg.estimate.start;
  eo.gtol = cfg.estimate.gtol;
  eo.max_iter = cfg.estimate.max_iter;
  eo.threads = run.threads;
  return eo;
}

json estimate_json(const EstimationResult& r, const std::vector<std::string>& names, long T) {
  json j;
  j["theta_hat"] = named(names, r.theta_hat);
  j["theta_hat_vector"] = to_json(r.theta_hat);
  j["loglik"] = r.loglik;
  j["loglik_convention"] = kLoglikConvention;
  j["T"] = T;
  j["grad_norm"] = r.grad_norm;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["boundary_active"] = r.boundary_active;
  j["starts_used"] = r.starts_used;
  if (r.multiplier.size() > 0) j["multiplier"] = to_json(r.multiplier);
  j["messages"] = r.messages;
  return j;
}

json covariance_json(const CovarianceReport& rep, const Vec& theta, const std::vector<std::string>& names) {
  json j;
  j["method"] = rep.method;
  j["theta"] = named(names, theta);
  j["W_invertible"] = rep.W_invertible;
  j["W"] = to_json(rep.W);
  j["U"] = to_json(rep.U);
  if (rep.W_invertible) {
    j["V"] = to_json(rep.V);
    j["std"] = named(names, rep.std);
    j["corr"] = to_json(rep.corr);
  }
  j["flags"] = rep.flags;
  return j;
}

Constraint constraint_for(const TestConfig& tc, const std::vector<std::string>& names) {
  const auto k = static_cast<Eigen::Index>(names.size());
  if (!tc.pin_names.empty()) {
    std::vector<Eigen::Index> idx;
    for (const auto& p : tc.pin_names) {
      const auto it = std::find(names.begin(), names.end(), p);
      if (it == names.end()) throw InputError("test.pin: '" + p + "' is not a free parameter");
      idx.push_back(static_cast<Eigen::Index>(it - names.begin()));
    }
    return pin_constraint(idx, tc.pin_values, k);
  }
  if (tc.R.cols() != k) throw InputError("test.R: expected " + std::to_string(k) + " columns");
  return linear_constraint(tc.R, tc.r);
}

Vec asymptotics_theta(const ExperimentConfig& cfg, const RunOptions& run, const Model& model, const Dataset* data) {
  if (cfg.asymptotics.theta) return *cfg.asymptotics.theta;
  if (cfg.asymptotics.estimate_file) {
    const json j = read_json(*cfg.asymptotics.estimate_file);
    if (!j.contains("theta_hat_vector")) throw InputError("estimate file lacks 'theta_hat_vector'");
    Vec theta(static_cast<Eigen::Index>(j["theta_hat_vector"].size()));
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) = j["theta_hat_vector"][static_cast<std::size_t>(i)].get<double>();
    return theta;
  }
  if (data) {
    const EstimationResult est = qml_estimate(model, data->observed, estimate_options(cfg, run));
    if (!est.converged) throw ConvergenceError("estimation did not converge; no θ̂ for the covariance");
    return est.theta_hat;
  }
  Vec full = cfg.model.params;
  const auto idx = free_indices(cfg.model);
  Vec theta(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) theta(static_cast<Eigen::Index>(i)) = full(idx[i]);
  return theta;
}

}  // namespace

std::string version_string() {
  return std::string("pssm_qml 1.0.0 (rng ") + Rng::algorithm + ", loglik convention " + kLoglikConvention + ")";
}

int threads_from_env() {
  const char* env = std::getenv("PSSM_QML_THREADS");
  if (!env || !*env) return 1;
  int n = 0;
  const auto [ptr, ec] = std::from_chars(env, env + std::char_traits<char>::length(env), n);
  if (ec != std::errc() || *ptr != '\0' || n < 1) throw InputError("PSSM_QML_THREADS: expected a positive integer");
  return n;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return exit_input;
  } catch (const DimensionError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return exit_input;
  } catch (const ConvergenceError& e) {
    std::cerr << "not converged: " << e.what() << '\n';
    return exit_nonconvergence;
  } catch (const MethodUnavailableError& e) {
    std::cerr << "method unavailable: " << e.what() << '\n';
    return exit_unavailable;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return exit_input;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_failure;
  }
}

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

void write_csv(const std::string& path, const std::vector<std::string>& names, const Mat& rows, long first_t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << 't';
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    out << first_t + i;
    for (Eigen::Index j = 0; j < rows.cols(); ++j) out << ',' << format_double(rows(i, j));
    out << '\n';
  }
  if (!out) throw InputError("write to '" + path + "' failed");
}

Mat read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw InputError("'" + path + "': empty file");
  const auto columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  if (columns < 2) throw InputError("'" + path + "': expected a t column and at least one value column");
  std::vector<double> values;
  long row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::size_t count = 0, start = 0;
    while (true) {
      const std::size_t end = line.find(',', start);
      const std::string cell = line.substr(start, end == std::string::npos ? std::string::npos : end - start);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v))
        throw InputError("'" + path + "' line " + std::to_string(row) + ": bad number '" + cell + "'");
      if (count > 0) values.push_back(v);
      ++count;
      if (end == std::string::npos) break;
      start = end + 1;
    }
    if (count != columns) throw InputError("'" + path + "' line " + std::to_string(row) + ": wrong number of columns");
  }
  const auto cols = static_cast<Eigen::Index>(columns - 1);
  const auto rows = static_cast<Eigen::Index>(values.size()) / cols;
  Mat out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = values[static_cast<std::size_t>(i * cols + j)];
  return out;
}

SimulationResult simulate_config(const ModelConfig& mc, long T, std::uint64_t seed, std::optional<double> mesh,
                                 std::uint64_t stream) {
  if (mc.id == "heston") {
    HestonSimOptions o;
    o.dt = mc.dt;
    o.extended = mc.extended;
    o.v0 = mc.v0;
    if (mesh) o.inner_dt = *mesh;
    return heston_simulate(mc.params, T, seed, o, stream);
  }
  if (mc.id == "ou") {
    OuSimOptions o;
    o.dt = mc.dt;
    o.alpha = mc.alpha;
    o.x0 = mc.x0;
    if (mesh) o.mesh = *mesh;
    return ou_simulate(mc.params, T, seed, o, stream);
  }
  if (T < 1) throw std::invalid_argument("simulate: T must be at least 1");
  const double mu = mc.params(0), sd = std::sqrt(mc.estimate_variance ? mc.params(1) : mc.sigma2);
  Rng rng(seed, stream);
  SimulationResult r;
  r.x0 = Vec::Constant(1, mu);
  r.states.resize(T, 1);
  for (long t = 0; t < T; ++t) r.states(t, 0) = mu + sd * rng.normal();
  return r;
}

int cmd_simulate(const ExperimentConfig& cfg, const RunOptions& run) {
  if (!cfg.data.simulate) throw InputError("data.simulate: required for the simulate command");
  const auto& sc = *cfg.data.simulate;
  const std::uint64_t seed = simulation_seed(sc, run);
  const auto dir = output_dir(cfg, run);
  const auto model = build_full_model(cfg.model);
  const SimulationResult sim = simulate_config(cfg.model, sc.T, seed, sc.mesh);
  const Eigen::Index d = model->state_dim(), m = model->hidden_dim();
  write_csv((fs::path(dir) / "obs.csv").string(), component_names(m + 1, d), sim.observations());
  if (sc.latent) write_csv((fs::path(dir) / "latent.csv").string(), component_names(1, d), sim.states);

  json man;
  man["command"] = "simulate";
  man["version"] = version_string();
  man["model"] = cfg.model.id;
  man["params"] = named(model_param_names(cfg.model), cfg.model.params);
  man["dt"] = cfg.model.dt;
  man["T"] = sc.T;
  man["seed"] = seed;
  man["stream"] = 0;
  man["mesh"] = sc.mesh ? *sc.mesh : default_mesh(cfg.model);
  man["x0"] = to_json(sim.x0);
  man["rng"] = Rng::algorithm;
  man["loglik_convention"] = kLoglikConvention;
  man["files"] = sc.latent ? json::array({"obs.csv", "latent.csv"}) : json::array({"obs.csv"});
  write_json(fs::path(dir) / "manifest.json", man);
  return exit_ok;
}

int cmd_estimate(const ExperimentConfig& cfg, const RunOptions& run) {
  const auto dir = output_dir(cfg, run);
  const auto model = build_model(cfg.model);
  const Dataset data = load_data(cfg, run, *model);
  const auto names = model->param_names();
  const EstimateOptions eo = estimate_options(cfg, run);
  const EstimationResult est = qml_estimate(*model, data.observed, eo);
  write_json(fs::path(dir) / "estimate.json", estimate_json(est, names, data.observed.rows()));

  bool path_ok = true;
  if (!cfg.estimate.path_grid.empty()) {
    std::vector<long> grid;
    for (long g : cfg.estimate.path_grid)
      if (g <= data.observed.rows()) grid.push_back(g);
    const auto path = estimate_path(*model, data.observed, grid, eo);
    Mat rows(static_cast<Eigen::Index>(path.size()), static_cast<Eigen::Index>(names.size()) + 2);
    for (std::size_t i = 0; i < path.size(); ++i) {
      rows.row(static_cast<Eigen::Index>(i)) << path[i].theta_hat.transpose(), path[i].loglik, path[i].converged ? 1.0 : 0.0;
      path_ok = path_ok && path[i].converged;
    }
    auto cols = names;
    cols.push_back("loglik");
    cols.push_back("converged");
    std::ofstream out(fs::path(dir) / "path.csv", std::ios::binary);
    out << 't';
    for (const auto& c : cols) out << ',' << c;
    out << '\n';
    for (std::size_t i = 0; i < path.size(); ++i) {
      out << grid[i];
      for (Eigen::Index j = 0; j < rows.cols(); ++j) out << ',' << format_double(rows(static_cast<Eigen::Index>(i), j));
      out << '\n';
    }
  }
  if (!est.converged || !path_ok) {
    std::cerr << "not converged: grad_norm " << est.grad_norm << " after " << est.iterations << " iterations; see estimate.json\n";
    return exit_nonconvergence;
  }
  return exit_ok;
}

int cmd_asymptotics(const ExperimentConfig& cfg, const RunOptions& run) {
  const auto dir = output_dir(cfg, run);
  const auto model = build_model(cfg.model);
  const auto names = model->param_names();
  json out;
  if (cfg.asymptotics.method == "explicit") {
    std::optional<Dataset> data;
    if (!cfg.asymptotics.theta && !cfg.asymptotics.estimate_file && (cfg.data.path || cfg.data.simulate))
      data = load_data(cfg, run, *model);
    const Vec theta = asymptotics_theta(cfg, run, *model, data ? &*data : nullptr);
    const auto scaled = build_model(cfg.model, true);
    const ExplicitResult r = explicit_covariance(*scaled, theta);
    out = covariance_json(r.report, theta, names);
    out["diagnostics"] = {{"poisson_alpha_residual", r.diagnostics.poisson_alpha_residual},
                          {"poisson_beta_residual", r.diagnostics.poisson_beta_residual},
                          {"rho_Abar", r.diagnostics.rho_Abar},
                          {"rho_O", r.diagnostics.rho_O},
                          {"moment_iterations", r.diagnostics.moment_iterations}};
  } else {
    const Dataset data = load_data(cfg, run, *model);
    const Vec theta = asymptotics_theta(cfg, run, *model, &data);
    const EmpiricalResult r = empirical_covariance(*model, theta, data.observed);
    out = covariance_json(r.report, theta, names);
    out["T"] = data.observed.rows();
  }
  write_json(fs::path(dir) / "covariance.json", out);
  return exit_ok;
}

int cmd_test(const ExperimentConfig& cfg, const RunOptions& run) {
  if (!cfg.test) throw InputError("test: a constraint spec is required for the test command");
  const auto dir = output_dir(cfg, run);
  const auto model = build_model(cfg.model);
  const auto names = model->param_names();
  const Constraint constraint = constraint_for(*cfg.test, names);
  const Dataset data = load_data(cfg, run, *model);
  const auto T = static_cast<double>(data.observed.rows());
  const EstimateOptions eo = estimate_options(cfg, run);

  const EstimationResult est = qml_estimate(*model, data.observed, eo);
  check_constraint_rank(constraint, est.theta_hat);
  const EstimationResult con = constrained_estimate(*model, data.observed, constraint, eo);
  if (!est.converged || !con.converged) throw ConvergenceError("unconstrained or constrained estimation did not converge");

  CovarianceReport at_hat, at_con;
  if (cfg.asymptotics.method == "explicit") {
    const auto scaled = build_model(cfg.model, true);
    at_hat = explicit_covariance(*scaled, est.theta_hat).report;
    at_con = explicit_covariance(*scaled, con.theta_hat).report;
  } else {
    at_hat = empirical_covariance(*model, est.theta_hat, data.observed).report;
    at_con = empirical_covariance(*model, con.theta_hat, data.observed).report;
  }
  if (!at_hat.W_invertible || !at_con.W_invertible) throw MethodUnavailableError("Fisher information is singular");

  json results = json::array();
  for (const auto& method : cfg.test->methods) {
    TestResult tr;
    if (method == "wald") tr = wald_test(est.theta_hat, at_hat.V, T, constraint);
    else if (method == "lm") tr = lm_test(*model, data.observed, con, at_con.W, at_con.V, constraint);
    else tr = lr_test(est, con, at_con.W, at_con.V, constraint);
    json jr;
    jr["method"] = tr.method;
    jr["statistic"] = tr.statistic;
    jr["df"] = tr.df;
    if (tr.weights.size() > 0) jr["weights"] = to_json(tr.weights);
    jr["p_value"] = tr.p_value ? json(*tr.p_value) : json(nullptr);
    jr["reject"] = tr.p_value ? json(*tr.p_value < cfg.test->level) : json(nullptr);
    jr["flags"] = tr.flags;
    results.push_back(jr);
  }
  json out;
  out["covariance_method"] = cfg.asymptotics.method;
  out["level"] = cfg.test->level;
  out["T"] = data.observed.rows();
  out["theta_hat"] = named(names, est.theta_hat);
  out["theta_constrained"] = named(names, con.theta_hat);
  out["loglik"] = est.loglik;
  out["loglik_constrained"] = con.loglik;
  out["results"] = results;
  write_json(fs::path(dir) / "test.json", out);
  return exit_ok;
}

}  // namespace pssm::cli
