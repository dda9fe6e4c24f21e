#pragma once

#include "pssm/cli/config.hpp"
#include "pssm/estimation.hpp"
#include "pssm/models/heston.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

namespace pssm::cli {

enum ExitCode : int { exit_ok = 0, exit_failure = 1, exit_input = 2, exit_nonconvergence = 3, exit_unavailable = 4 };

struct RunOptions {
  std::optional<std::string> out_dir;  // overrides output.dir
  std::optional<std::uint64_t> seed;   // overrides data.simulate.seed
  bool full = false;
  int threads = 1;
};

std::string version_string();
constexpr const char* kLoglikConvention = "no-2pi";

// PSSM_QML_THREADS, defaulting to 1.
int threads_from_env();

// Runs body and maps exceptions to the exit-code contract, reporting to stderr.
int guarded(const std::function<int()>& body);

// Shortest round-trip decimal form.
std::string format_double(double x);

// Header `t,<names...>` and rows t = first_t, first_t + 1, ...
void write_csv(const std::string& path, const std::vector<std::string>& names, const Mat& rows, long first_t = 1);
// Numeric CSV with a header row; the leading t column is dropped.
Mat read_csv(const std::string& path);

SimulationResult simulate_config(const ModelConfig& mc, long T, std::uint64_t seed, std::optional<double> mesh,
                                 std::uint64_t stream = 0);

int cmd_simulate(const ExperimentConfig& cfg, const RunOptions& run);
int cmd_estimate(const ExperimentConfig& cfg, const RunOptions& run);
int cmd_asymptotics(const ExperimentConfig& cfg, const RunOptions& run);
int cmd_test(const ExperimentConfig& cfg, const RunOptions& run);

}  // namespace pssm::cli
