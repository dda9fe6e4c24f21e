#pragma once

#include "pssm/kalman.hpp"

#include <vector>

namespace pssm {

struct ScoreState {
  long t = 0;
  std::vector<Vec> V_pred, V_filt;
  std::vector<Mat> S_pred, S_filt;
  Vec kappa;
  std::vector<Mat> Stilde;  // G S_{o,j} G
  std::vector<Mat> N;       // ∂_j K̃
  Mat Ktilde;
  Vec z_increment;
};

struct FisherState {
  long t = 0;
  std::vector<Vec> W_pred, W_filt;  // indexed i*k+j
  std::vector<Mat> R_pred, R_filt;
  Mat mu;
  std::vector<Mat> M;  // ∂_i∂_j K̃
  Mat dz_increment;
};

struct PassOptions {
  bool keep_states = false;
  bool keep_trajectory = false;
};

// Per-time values needed by the empirical covariance estimators.
struct Trajectory {
  Mat x_filt;  // row t = X̂(t,t), t = 0..T
  Mat x_pred;  // row t = X̂(t,t−1)
  Mat v_pred;  // row t = (V_1(t,t−1), …, V_k(t,t−1))
  Mat z_inc;   // row t = Z(t,t−1), t ≥ 1 (row 0 zero)
};

struct PassResult {
  double loglik = 0.0;
  Vec Z;
  Mat dZ;  // empty for score-only passes
  long degenerate_steps = 0;
  long asymmetry_flags = 0;
  std::vector<FilterState> filter_states;
  std::vector<ScoreState> score_states;
  std::vector<FisherState> fisher_states;
  Trajectory trajectory;
};

PassResult score_pass(const ModelEvaluation& ev, const Mat& data, const PassOptions& opts = {});
PassResult fisher_pass(const ModelEvaluation& ev, const Mat& data, const PassOptions& opts = {});
PassResult score_pass(const Model& model, const Vec& theta, const Mat& data, const PassOptions& opts = {});
PassResult fisher_pass(const Model& model, const Vec& theta, const Mat& data, const PassOptions& opts = {});

// Time-homogeneous coefficients of the score and Fisher recursions at the steady state.
struct LimitCoefficients {
  Eigen::Index d = 0, m = 0, k = 0;
  Vec a;
  Mat A, H;
  std::vector<Vec> da, d2a;  // d2 indexed i*k+j
  std::vector<Mat> dA, d2A;
  SteadyState steady;
  Mat P, G, Ktilde, K, F;
  std::vector<Mat> S, Stilde, N;
  Vec kappa;
  std::vector<Mat> R, M, dStilde;  // dStilde[i*k+j] = ∂_i S̃_j
  Mat mu;
  // Coefficient blocks of the homogeneous V and W recursions:
  // V_j' = ∂_j a + B1_j X + B2_j X̂ + F V_j,
  // W_ij' = ∂_ij a + C1_ij X + C2_ij X̂ + D_ij V_j + D_ji V_i + F W_ij.
  std::vector<Mat> B1, B2;
  std::vector<Mat> C1, C2, D;
  long iterations = 0;
  bool converged = false;

  const Mat& second(const std::vector<Mat>& v, Eigen::Index i, Eigen::Index j) const { return v[i * k + j]; }
};

LimitCoefficients limit_coefficients(const ModelEvaluation& ev, double tol = 1e-12, long max_iter = 100000);
LimitCoefficients limit_coefficients(const Model& model, const Vec& theta, int order = 2);

// Z(t,t−1) evaluated from a homogeneous augmented state (x, x̂_pred, V_pred) with limit coefficients.
Vec homogeneous_score(const LimitCoefficients& lc, const Vec& x, const Vec& x_pred, const std::vector<Vec>& V_pred);

}  // namespace pssm
