#pragma once

#include "pssm/cli/commands.hpp"
#include "pssm/hypothesis_tests.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace pssm::cli {

// Published constants the reproduction targets are compared against.
namespace targets {
constexpr double heston_std = 3.2871;
constexpr double ou_delta_std = 5.2054;
constexpr double heston_small_std = 160.0723;
constexpr double heston_small_extended_std = 81.8182;
constexpr double ou_small_std = 464.7759;
constexpr double small_dt = 1.0 / 24000.0;
constexpr double heston_mean_full = 0.2997;
}  // namespace targets

// Explicit asymptotic standard deviation of the isolated σ (Heston) or δ (OU) estimator at the reference θ.
double heston_isolated_std(double dt = 1.0, bool extended = false);
double ou_isolated_std(double dt = 1.0);

struct SizeReplication {
  double sigma_hat = 0.0;
  bool converged = false;
  double loglik = 0.0, loglik_null = 0.0;
  double wald = 0.0, lm = 0.0, lr = 0.0;
  double p_wald = 1.0, p_lm = 1.0, p_lr = 1.0;
};

struct SizeStudy {
  long N = 0, T = 0;
  std::uint64_t seed = 0;
  double sigma0 = 0.3;
  double W0 = 0.0, V0 = 0.0;  // explicit values at the null
  std::vector<SizeReplication> reps;
};

// H₀: σ = 0.3 on the isolated-σ Heston model, replication i drawing RNG stream i.
SizeStudy heston_size_study(long N, long T, std::uint64_t seed, int threads,
                            const std::function<void(long)>& progress = {});

struct SizeRate {
  std::string method;
  double alpha = 0.0;
  long rejections = 0, n = 0;
  double rate = 0.0;
  BinomialInterval interval;
  bool inside = false;
};

std::vector<SizeRate> size_rates(const SizeStudy& study, const std::vector<double>& alphas, double level = 0.99);

struct MeanCheck {
  long n = 0;
  double mean = 0.0, sd = 0.0, combined_se = 0.0, z = 0.0;
  bool pass = false;
};

// Mean of the first n estimates against σ = 0.3 within `k` combined standard errors.
MeanCheck estimator_mean_check(const SizeStudy& study, long n, double k = 3.0);

// Runs one reproduction target and writes report.md; returns the exit code.
int cmd_reproduce(const std::string& target, const RunOptions& run);

}  // namespace pssm::cli
