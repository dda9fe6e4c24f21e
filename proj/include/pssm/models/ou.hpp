#pragma once

#include "pssm/model.hpp"
#include "pssm/models/heston.hpp"
#include "pssm/models/rng.hpp"

#include <cstdint>

namespace pssm {

// Cumulant tensors of L(1) in Kronecker layout; empty third or fourth cumulants are zero.
struct LevyCumulants {
  Mat k2;
  Vec k3;
  Vec k4;
  bool symmetric = true;
};

// Symmetric NIG with β = 0, Δ = I, μ = 0.
LevyCumulants nig_cumulants(double alpha, double delta, Eigen::Index d = 2);

// C_ij C_kl + C_ik C_jl + C_il C_jk in Kronecker layout.
Vec pairings(const Mat& C);

// ∫₀^dt (e^{−Qs})^{⊗j} κ ds
Vec integrated_cumulant(const Mat& Q, const Vec& kappa, int j, double dt);

// Moments of the step noise N = ∫₀^dt e^{−Q(dt−s)} dL(s); they do not depend on the state.
NoiseMoments levy_noise_moments(const Mat& Q, const LevyCumulants& cumulants, double dt, int max_order);

// Two-factor short-rate model X = (m, r) with Q = [[λ, 0], [−κ, κ]] and NIG driver with α fixed;
// θ = (λ, κ, δ). m is unobservable.
class OuModel : public Model {
 public:
  struct Options {
    double dt = 1.0;
    double alpha = 1.0;
    Vec x0 = (Vec(2) << 0.5, 1.0).finished();
  };

  OuModel();
  explicit OuModel(Options opts);

  std::string name() const override { return "ou-nig"; }
  Eigen::Index state_dim() const override { return 2; }
  Eigen::Index hidden_dim() const override { return 1; }
  const ParamSpace& param_space() const override { return space_; }
  std::vector<std::string> param_names() const override { return {"lambda", "kappa", "delta"}; }

  Vec transition_vector(const Vec& theta) const override;
  Mat transition_matrix(const Vec& theta) const override;
  NoiseMoments noise_moments(const Vec& theta, int max_order) const override;
  InitialLaw initial_law(const Vec& theta) const override;

  static Mat drift_matrix(const Vec& theta);
  static Vec reference_theta();
  // vec C = (Q⊕Q)^{-1}(I − e^{−(Q⊕Q)dt}) vec((δ/α) I)
  Mat noise_cov_closed_form(const Vec& theta) const;
  const Options& options() const { return opts_; }

 private:
  Options opts_;
  ParamSpace space_;
};

struct OuSimOptions {
  double mesh = 1.0 / 5000.0;
  double dt = 1.0;
  double alpha = 1.0;
  Vec x0 = (Vec(2) << 0.5, 1.0).finished();
};

// Michael–Schucany–Haas sampler.
double sample_inverse_gaussian(Rng& rng, double mean, double shape);

SimulationResult ou_simulate(const Vec& theta, long T, std::uint64_t seed, const OuSimOptions& opts = {},
                             std::uint64_t stream = 0);

}  // namespace pssm
