#pragma once

#include "pssm/moment_chain.hpp"
#include "pssm/polynomial.hpp"
#include "pssm/score_fisher.hpp"

#include <string>
#include <vector>

namespace pssm {

enum class AugmentLevel { score, fisher };

// Homogeneous transition data of X̄ = (X, X̂, V_1..V_k) or X̲ = (X, X̂, V, W_11..W_kk).
struct AugmentedModel {
  AugmentLevel level = AugmentLevel::score;
  Eigen::Index d = 0, k = 0, n = 0;
  Vec abar;
  Mat Abar;
  Mat E1;  // e₁ ⊗ I_d, embeds the state noise
  // Conditional second moments of the embedded noise and the order-2 stacked transition
  // (only for the score level).
  Mat Qbar2, Qbar1;
  Vec qbar;
  Mat Pi, O;
  Vec abar2;
  Mat Abar2;
  MomentChain chain;
};

AugmentedModel build_augmented(const LimitCoefficients& lc, const NoiseMoments& noise, AugmentLevel level);

struct ScorePolys {
  PolyCoeffs f;                // order 2 on X̄
  std::vector<Mat> Gamma_j;    // Γ^{(j)}, (k+2)d square
  Mat Gamma;                   // row j = vec(Γ^{(j)})ᵀ
};

ScorePolys score_limit_polys(const LimitCoefficients& lc);

struct PoissonSolution {
  PolyCoeffs g, h;
  double alpha_residual = 0.0;  // ‖α_f − α_g(Ā_{⊗2} − I)‖
  double beta_residual = 0.0;   // |β_f − α_g ā_{⊗2}|
};

// Solves f = P̄g − g in coefficient space; h = P̄g.
PoissonSolution solve_poisson(const PolyCoeffs& f, const AugmentedModel& aug);

// Limit of the observed-Fisher increment as a quadratic polynomial on X̲; row i*k+j.
PolyCoeffs fisher_limit_poly(const LimitCoefficients& lc);

struct CovarianceReport {
  std::string method;
  Mat W, U, V;
  Vec std;
  Mat corr;
  bool W_invertible = false;
  std::vector<std::string> flags;
};

CovarianceReport covariance_report(const Mat& W, const Mat& U, const std::string& method = "explicit");

struct Interval {
  double lower = 0.0, upper = 0.0;
};

std::vector<Interval> confidence_interval(const CovarianceReport& report, const Vec& theta_hat, double T, double level);

struct ExplicitOptions {
  StationaryOptions stationary;
};

struct ExplicitDiagnostics {
  double poisson_alpha_residual = 0.0;
  double poisson_beta_residual = 0.0;
  double rho_Abar = 0.0;
  double rho_O = 0.0;
  std::vector<long> moment_iterations;
  std::vector<double> moment_ratios;
};

struct ExplicitResult {
  CovarianceReport report;
  ExplicitDiagnostics diagnostics;
};

Mat explicit_W(const Model& model, const Vec& theta, const ExplicitOptions& opts = {});
Mat explicit_U(const Model& model, const Vec& theta, const ExplicitOptions& opts = {}, ExplicitDiagnostics* diag = nullptr);
ExplicitResult explicit_covariance(const Model& model, const Vec& theta, const ExplicitOptions& opts = {});

Mat empirical_W(const PassResult& fisher, long T);

// Time average of g gᵀ − h hᵀ along the augmented trajectory. Unobservable components of X(s)
// are taken from `latent` when given (rows t = 1..T holding all d components) and from the
// filter X̂(s,s) otherwise.
Mat empirical_U(const PoissonSolution& poly, const Trajectory& traj, const Mat& data, Eigen::Index d, Eigen::Index m,
                Eigen::Index k, const Mat* latent = nullptr);

struct EmpiricalResult {
  CovarianceReport report;
  double loglik = 0.0;
  Vec Z;
};

EmpiricalResult empirical_covariance(const Model& model, const Vec& theta_hat, const Mat& data, const Mat* latent = nullptr);

}  // namespace pssm
