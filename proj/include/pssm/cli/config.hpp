#pragma once

#include "pssm/model.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pssm::cli {

// Invalid configuration or unreadable input; exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ModelConfig {
  std::string id;  // heston | ou | iid-gaussian
  Vec params;      // full parameter vector; also the simulation truth
  std::vector<std::string> free;  // empty: all parameters free
  double dt = 1.0;
  bool extended = false;
  double v0 = 0.09;
  double alpha = 1.0;
  Vec x0;
  double sigma2 = 1.0;
  bool estimate_variance = false;
  std::optional<Vec> lower, upper;  // Θ overrides, in free coordinates
};

struct SimulateConfig {
  long T = 0;
  std::optional<std::uint64_t> seed;
  std::optional<double> mesh;
  bool latent = false;
};

struct DataConfig {
  std::optional<std::string> path;
  std::optional<SimulateConfig> simulate;
};

struct EstimateConfig {
  int starts = 8;
  std::optional<Vec> start;
  double gtol = 1e-6;
  int max_iter = 200;
  std::vector<long> path_grid;
};

struct AsymptoticsConfig {
  std::string method = "explicit";  // explicit | empirical
  std::optional<Vec> theta;
  std::optional<std::string> estimate_file;
};

struct TestConfig {
  std::vector<std::string> methods = {"wald", "lm", "lr"};
  std::vector<std::string> pin_names;
  Vec pin_values;
  Mat R;  // linear form, used when no pins are given
  Vec r;
  double level = 0.05;
};

struct ExperimentConfig {
  ModelConfig model;
  DataConfig data;
  EstimateConfig estimate;
  AsymptoticsConfig asymptotics;
  std::optional<TestConfig> test;
  std::string output_dir = "out";
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

std::vector<std::string> model_param_names(const ModelConfig& mc);

// The model in estimation coordinates (restricted to the free parameters, with Θ overrides).
// `rescaled` selects O(1) state coordinates; simulated data is not rescaled to match.
std::shared_ptr<const Model> build_model(const ModelConfig& mc, bool rescaled = false);
// The full model, used for simulation.
std::shared_ptr<const Model> build_full_model(const ModelConfig& mc);
std::vector<Eigen::Index> free_indices(const ModelConfig& mc);

}  // namespace pssm::cli
