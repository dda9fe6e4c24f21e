#pragma once

#include "pssm/model_core.hpp"

#include <vector>

namespace pssm {

struct FilterState {
  long t = 0;
  Vec x_pred;
  Mat P_pred;
  Vec x_filt;
  Mat P_filt;
  Vec innovation;
  double loglik_increment = 0.0;
  bool degenerate = false;
};

// Quantities of one measurement update: G = Σ̂_o⁺, K̃ = Σ̂_{:,o} G.
struct UpdateTerms {
  Mat cross;  // Σ̂_{:,o}
  Mat G;
  Mat Ktilde;
  Vec innovation;
  double logdet = 0.0;
  bool degenerate = false;
};

UpdateTerms update_terms(const Vec& x_pred, const Mat& P_pred, const Vec& obs, Eigen::Index m);

FilterState filter_init(const Model& model, const Vec& theta);
FilterState filter_init(const ModelEvaluation& ev);

// Conditions the predicted state on obs in place.
void filter_update(FilterState& state, const Vec& obs, Eigen::Index m);

// Predicts time prev.t+1 from prev's filtered state and updates with obs.
FilterState filter_step(const FilterState& prev, const Vec& obs, const ModelEvaluation& ev);
FilterState filter_step(const FilterState& prev, const Vec& obs, const Model& model, const Vec& theta);

// Observed block of row t (rows are t = 1..T); rows may carry all d components.
Vec observed_row(const Mat& data, Eigen::Index row, Eigen::Index d, Eigen::Index m);
void check_data(const Mat& data, Eigen::Index d, Eigen::Index m);

struct LoglikResult {
  double loglik = 0.0;
  std::vector<FilterState> states;  // t = 0..T when kept
  long degenerate_steps = 0;
};

// Σ_t −½[log|det Σ̂_o| + εᵀΣ̂_o⁻¹ε]; the −(d−m)/2·log 2π constant is omitted.
LoglikResult quasi_loglik(const Model& model, const Vec& theta, const Mat& data, bool keep_states = true);
LoglikResult quasi_loglik(const ModelEvaluation& ev, const Mat& data, bool keep_states = true);

struct SteadyState {
  Mat P_inf;   // predicted covariance limit
  Mat P_filt;  // updated covariance limit
  Mat G;
  Mat Ktilde;
  Mat K;
  Mat F;
  Mat C_inf;
  long iterations = 0;
  bool converged = false;
  double rho_F = 0.0;
};

SteadyState steady_state(const Mat& A, const Mat& C_inf, Eigen::Index m, double tol = 1e-12, long max_iter = 100000);
SteadyState steady_state(const Model& model, const Vec& theta, double tol = 1e-12, long max_iter = 100000);

}  // namespace pssm
