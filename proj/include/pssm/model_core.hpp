#pragma once

#include "pssm/model.hpp"
#include "pssm/moment_chain.hpp"
#include "pssm/param_jet.hpp"

#include <string>
#include <vector>

namespace pssm {

// E[vec_{⊗r}X(t) | X(t−1) = x] = a_r + A_r vec_{⊗r}(x). A_r is applied structurally.
struct TransitionOrderR {
  int r = 1;
  Eigen::Index d = 0;
  Vec a_r;
  MomentChain chain;

  Eigen::Index length() const { return stacked_length(d, r); }
  Vec apply(const Vec& v) const;
  Mat materialize() const;
  // Companion form acting on (1, vec_{⊗r}x).
  Mat companion() const;
};

TransitionOrderR transition_order_r(const Model& model, const Vec& theta, int r);

// Split a stacked vector into its order blocks, with the unit mass prepended.
std::vector<Vec> split_stacked(const Vec& stacked, Eigen::Index d, int r, double mass = 1.0);
Vec join_stacked(const std::vector<Vec>& moments, int r);

Vec moment_path(const TransitionOrderR& tr, const Vec& start_stacked, long n);
Vec moment_path(const Model& model, const Vec& theta, int r, const Vec& x0, long n);
Vec unconditional_moments(const Model& model, const Vec& theta, int r, long t);
Vec stationary_moments(const Model& model, const Vec& theta, int r);

// C(t) = Cov(N(t)), t ≥ 1, from the first two unconditional moments of X(t−1).
Mat noise_cov(const Model& model, const Vec& theta, long t);
Mat noise_cov_limit(const Model& model, const Vec& theta);

class NoiseCovSequence {
 public:
  NoiseCovSequence() = default;
  NoiseCovSequence(std::vector<Mat> head, Mat limit) : head_(std::move(head)), limit_(std::move(limit)) {}
  const Mat& at(long t) const { return t >= 1 && t <= static_cast<long>(head_.size()) ? head_[t - 1] : limit_; }
  const Mat& limit() const { return limit_; }
  long horizon() const { return static_cast<long>(head_.size()); }

 private:
  std::vector<Mat> head_;
  Mat limit_;
};

// C(1..T), stored until it agrees with C(∞) to tol and held at the limit afterwards.
NoiseCovSequence noise_cov_sequence(const Model& model, const Vec& theta, long T, double tol = 1e-14);

class TimeVaryingJet {
 public:
  TimeVaryingJet() = default;
  TimeVaryingJet(std::vector<MatrixJet> head, MatrixJet limit) : head_(std::move(head)), limit_(std::move(limit)) {}
  const MatrixJet& at(long t) const { return t >= 1 && t <= static_cast<long>(head_.size()) ? head_[t - 1] : limit_; }
  const MatrixJet& limit() const { return limit_; }

 private:
  std::vector<MatrixJet> head_;
  MatrixJet limit_;
};

// Everything the filter, score and Fisher passes need at one θ: a, A, C(t), and the initial
// law's mean and covariance with parameter derivatives up to `order`.
struct ModelEvaluation {
  Vec theta;
  int order = 0;
  Eigen::Index d = 0, m = 0, k = 0;
  MatrixJet a, A, init_mean, init_cov;
  TimeVaryingJet C;
  bool one_sided = false;
};

ModelEvaluation evaluate_model(const Model& model, const Vec& theta, int order, long T);

struct ModelDiagnostics {
  double rho_A = 0.0;
  double rho_order2 = 0.0;
  double rho_order4 = -1.0;  // negative when not evaluated
  std::vector<double> cov_min_eig;  // C(1..10)
  double cov_limit_min_eig = 0.0;
  bool derivatives_finite = true;
  bool contractive = false;
  bool covariances_pd = false;
  std::vector<std::string> messages;

  bool ok() const { return contractive && covariances_pd && derivatives_finite; }
};

ModelDiagnostics validate_model(const Model& model, const Vec& theta);

}  // namespace pssm
