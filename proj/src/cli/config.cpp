#include "pssm/cli/config.hpp"

#include "pssm/models/heston.hpp"
#include "pssm/models/iid_gaussian.hpp"
#include "pssm/models/ou.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace pssm::cli {

using nlohmann::json;

namespace {

// Forwards everything to the wrapped model except Θ.
class BoxedModel : public Model {
 public:
  BoxedModel(std::shared_ptr<const Model> base, ParamSpace space) : base_(std::move(base)), space_(std::move(space)) {}

  std::string name() const override { return base_->name(); }
  Eigen::Index state_dim() const override { return base_->state_dim(); }
  Eigen::Index hidden_dim() const override { return base_->hidden_dim(); }
  const ParamSpace& param_space() const override { return space_; }
  std::vector<std::string> param_names() const override { return base_->param_names(); }
  Vec transition_vector(const Vec& theta) const override { return base_->transition_vector(theta); }
  Mat transition_matrix(const Vec& theta) const override { return base_->transition_matrix(theta); }
  NoiseMoments noise_moments(const Vec& theta, int max_order) const override {
    return base_->noise_moments(theta, max_order);
  }
  InitialLaw initial_law(const Vec& theta) const override { return base_->initial_law(theta); }
  int max_noise_order() const override { return base_->max_noise_order(); }
  std::optional<MatrixJet> transition_vector_jet(const Vec& theta, int order) const override {
    return base_->transition_vector_jet(theta, order);
  }
  std::optional<MatrixJet> transition_matrix_jet(const Vec& theta, int order) const override {
    return base_->transition_matrix_jet(theta, order);
  }

 private:
  std::shared_ptr<const Model> base_;
  ParamSpace space_;
};

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw InputError(where + ": expected an object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw InputError(where + ": unknown key '" + key + "'");
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw InputError(where + ": expected a number");
  return j.get<double>();
}

Vec vector_of(const json& j, const std::string& where) {
  if (!j.is_array()) throw InputError(where + ": expected an array of numbers");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], where);
  return v;
}

Eigen::Index index_of(const std::vector<std::string>& names, const std::string& name, const std::string& where) {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw InputError(where + ": unknown parameter '" + name + "'");
  return static_cast<Eigen::Index>(it - names.begin());
}

Vec default_params(const ModelConfig& mc) {
  if (mc.id == "heston") return HestonModel::reference_theta();
  if (mc.id == "ou") return OuModel::reference_theta();
  return mc.estimate_variance ? Vec((Vec(2) << 0.0, mc.sigma2).finished()) : Vec::Zero(1);
}

ModelConfig parse_model(const json& j) {
  check_keys(j, "model", {"id", "params", "free", "dt", "extended", "v0", "alpha", "x0", "sigma2", "estimate_variance",
                          "lower", "upper"});
  ModelConfig mc;
  if (!j.contains("id") || !j["id"].is_string()) throw InputError("model.id: required string");
  mc.id = j["id"].get<std::string>();
  if (mc.id != "heston" && mc.id != "ou" && mc.id != "iid-gaussian") throw InputError("model.id: unknown model '" + mc.id + "'");
  if (j.contains("dt")) mc.dt = number(j["dt"], "model.dt");
  if (!(mc.dt > 0.0)) throw InputError("model.dt: must be positive");
  if (j.contains("extended")) mc.extended = j["extended"].get<bool>();
  if (j.contains("v0")) mc.v0 = number(j["v0"], "model.v0");
  if (j.contains("alpha")) mc.alpha = number(j["alpha"], "model.alpha");
  if (j.contains("x0")) mc.x0 = vector_of(j["x0"], "model.x0");
  if (j.contains("sigma2")) mc.sigma2 = number(j["sigma2"], "model.sigma2");
  if (j.contains("estimate_variance")) mc.estimate_variance = j["estimate_variance"].get<bool>();
  if (mc.id == "ou" && mc.x0.size() == 0) mc.x0 = OuModel::Options{}.x0;
  if (mc.id == "ou" && mc.x0.size() != 2) throw InputError("model.x0: OU needs two components");

  const auto names = model_param_names(mc);
  mc.params = default_params(mc);
  if (j.contains("params")) {
    const json& p = j["params"];
    if (p.is_array()) {
      mc.params = vector_of(p, "model.params");
      if (mc.params.size() != static_cast<Eigen::Index>(names.size()))
        throw InputError("model.params: expected " + std::to_string(names.size()) + " values");
    } else if (p.is_object()) {
      for (const auto& [key, value] : p.items()) mc.params(index_of(names, key, "model.params")) = number(value, "model.params");
    } else {
      throw InputError("model.params: expected an array or an object");
    }
  }
  if (!mc.params.allFinite()) throw InputError("model.params: non-finite value");
  if (j.contains("free")) {
    if (!j["free"].is_array() || j["free"].empty()) throw InputError("model.free: expected a non-empty array of names");
    for (const auto& f : j["free"]) {
      if (!f.is_string()) throw InputError("model.free: expected parameter names");
      mc.free.push_back(f.get<std::string>());
      index_of(names, mc.free.back(), "model.free");
    }
  }
  if (j.contains("lower")) mc.lower = vector_of(j["lower"], "model.lower");
  if (j.contains("upper")) mc.upper = vector_of(j["upper"], "model.upper");
  return mc;
}

std::vector<long> grid_of(const json& j) {
  if (!j.is_array()) throw InputError("estimate.path_grid: expected an array of integers");
  std::vector<long> grid;
  for (const auto& g : j) {
    if (!g.is_number_integer() || g.get<long>() < 1) throw InputError("estimate.path_grid: expected positive integers");
    grid.push_back(g.get<long>());
  }
  if (!std::is_sorted(grid.begin(), grid.end())) throw InputError("estimate.path_grid: must be increasing");
  return grid;
}

}  // namespace

std::vector<std::string> model_param_names(const ModelConfig& mc) {
  if (mc.id == "heston") return {"kappa", "m", "sigma", "rho"};
  if (mc.id == "ou") return {"lambda", "kappa", "delta"};
  if (mc.estimate_variance) return {"mu", "sigma2"};
  return {"mu"};
}

std::vector<Eigen::Index> free_indices(const ModelConfig& mc) {
  const auto names = model_param_names(mc);
  std::vector<Eigen::Index> out;
  if (mc.free.empty())
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(names.size()); ++i) out.push_back(i);
  else
    for (const auto& f : mc.free) out.push_back(index_of(names, f, "model.free"));
  return out;
}

std::shared_ptr<const Model> build_full_model(const ModelConfig& mc) {
  if (mc.id == "heston") {
    HestonModel::Options o;
    o.dt = mc.dt;
    o.extended = mc.extended;
    o.v0 = mc.v0;
    return std::make_shared<HestonModel>(o);
  }
  if (mc.id == "ou") {
    OuModel::Options o;
    o.dt = mc.dt;
    o.alpha = mc.alpha;
    o.x0 = mc.x0;
    return std::make_shared<OuModel>(o);
  }
  return std::make_shared<IidGaussianModel>(mc.sigma2, mc.estimate_variance);
}

std::shared_ptr<const Model> build_model(const ModelConfig& mc, bool rescaled) {
  std::shared_ptr<const Model> base = build_full_model(mc);
  if (rescaled && mc.id == "heston") {
    const auto& h = static_cast<const HestonModel&>(*base);
    base = heston_scaled(h.options());
  }
  if (!mc.free.empty()) base = std::make_shared<SubsetModel>(base, free_indices(mc), mc.params);
  if (mc.lower || mc.upper) {
    ParamSpace space = base->param_space();
    if (mc.lower) {
      if (mc.lower->size() != space.dim()) throw InputError("model.lower: wrong length");
      space.lower = *mc.lower;
    }
    if (mc.upper) {
      if (mc.upper->size() != space.dim()) throw InputError("model.upper: wrong length");
      space.upper = *mc.upper;
    }
    try {
      validate_param_space(space);
    } catch (const std::exception& e) {
      throw InputError(std::string("model bounds: ") + e.what());
    }
    base = std::make_shared<BoxedModel>(base, space);
  }
  return base;
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw InputError(std::string("config: malformed JSON: ") + e.what());
  }
  try {
    check_keys(j, "config", {"model", "data", "estimate", "asymptotics", "test", "output"});
    ExperimentConfig cfg;
    if (!j.contains("model")) throw InputError("config: 'model' is required");
    cfg.model = parse_model(j["model"]);
    const auto names = model_param_names(cfg.model);

    if (j.contains("data")) {
      const json& d = j["data"];
      check_keys(d, "data", {"path", "simulate"});
      if (d.contains("path")) cfg.data.path = d["path"].get<std::string>();
      if (d.contains("simulate")) {
        const json& s = d["simulate"];
        check_keys(s, "data.simulate", {"T", "seed", "mesh", "latent"});
        SimulateConfig sc;
        if (!s.contains("T") || !s["T"].is_number_integer() || s["T"].get<long>() < 1)
          throw InputError("data.simulate.T: required positive integer");
        sc.T = s["T"].get<long>();
        if (s.contains("seed")) {
          if (!s["seed"].is_number_unsigned()) throw InputError("data.simulate.seed: expected a non-negative integer");
          sc.seed = s["seed"].get<std::uint64_t>();
        }
        if (s.contains("mesh")) {
          sc.mesh = number(s["mesh"], "data.simulate.mesh");
          if (!(*sc.mesh > 0.0)) throw InputError("data.simulate.mesh: must be positive");
        }
        if (s.contains("latent")) sc.latent = s["latent"].get<bool>();
        cfg.data.simulate = sc;
      }
      if (cfg.data.path && cfg.data.simulate) throw InputError("data: give either 'path' or 'simulate', not both");
    }

    if (j.contains("estimate")) {
      const json& e = j["estimate"];
      check_keys(e, "estimate", {"starts", "start", "gtol", "max_iter", "path_grid"});
      if (e.contains("starts")) cfg.estimate.starts = e["starts"].get<int>();
      if (cfg.estimate.starts < 0) throw InputError("estimate.starts: must be non-negative");
      if (e.contains("start")) cfg.estimate.start = vector_of(e["start"], "estimate.start");
      if (e.contains("gtol")) cfg.estimate.gtol = number(e["gtol"], "estimate.gtol");
      if (e.contains("max_iter")) cfg.estimate.max_iter = e["max_iter"].get<int>();
      if (e.contains("path_grid")) cfg.estimate.path_grid = grid_of(e["path_grid"]);
    }

    if (j.contains("asymptotics")) {
      const json& a = j["asymptotics"];
      check_keys(a, "asymptotics", {"method", "theta", "estimate_file"});
      if (a.contains("method")) cfg.asymptotics.method = a["method"].get<std::string>();
      if (cfg.asymptotics.method != "explicit" && cfg.asymptotics.method != "empirical")
        throw InputError("asymptotics.method: expected 'explicit' or 'empirical'");
      if (a.contains("theta")) cfg.asymptotics.theta = vector_of(a["theta"], "asymptotics.theta");
      if (a.contains("estimate_file")) cfg.asymptotics.estimate_file = a["estimate_file"].get<std::string>();
    }

    if (j.contains("test")) {
      const json& t = j["test"];
      check_keys(t, "test", {"methods", "pin", "R", "r", "level"});
      TestConfig tc;
      if (t.contains("methods")) {
        tc.methods.clear();
        for (const auto& m : t["methods"]) {
          const auto name = m.get<std::string>();
          if (name != "wald" && name != "lm" && name != "lr") throw InputError("test.methods: unknown method '" + name + "'");
          tc.methods.push_back(name);
        }
      }
      if (t.contains("level")) tc.level = number(t["level"], "test.level");
      if (t.contains("pin")) {
        check_keys(t["pin"], "test.pin", std::set<std::string>(names.begin(), names.end()));
        for (const auto& [key, value] : t["pin"].items()) {
          tc.pin_names.push_back(key);
          tc.pin_values.conservativeResize(tc.pin_values.size() + 1);
          tc.pin_values(tc.pin_values.size() - 1) = number(value, "test.pin");
        }
      } else if (t.contains("R")) {
        const json& rj = t["R"];
        if (!rj.is_array() || rj.empty()) throw InputError("test.R: expected a non-empty matrix");
        const Vec first = vector_of(rj[0], "test.R");
        tc.R.resize(static_cast<Eigen::Index>(rj.size()), first.size());
        for (std::size_t i = 0; i < rj.size(); ++i) {
          const Vec row = vector_of(rj[i], "test.R");
          if (row.size() != first.size()) throw InputError("test.R: ragged rows");
          tc.R.row(static_cast<Eigen::Index>(i)) = row.transpose();
        }
        if (!t.contains("r")) throw InputError("test.r: required with test.R");
        tc.r = vector_of(t["r"], "test.r");
        if (tc.r.size() != tc.R.rows()) throw InputError("test.r: length must match the rows of test.R");
      } else {
        throw InputError("test: give 'pin' or 'R' and 'r'");
      }
      cfg.test = tc;
    }

    if (j.contains("output")) {
      const json& o = j["output"];
      check_keys(o, "output", {"dir"});
      if (o.contains("dir")) cfg.output_dir = o["dir"].get<std::string>();
    }
    return cfg;
  } catch (const json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("config: cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace pssm::cli
