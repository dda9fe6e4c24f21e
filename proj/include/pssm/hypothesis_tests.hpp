#pragma once

#include "pssm/estimation.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pssm {

struct TestResult {
  std::string method;  // wald | lm | lr
  double statistic = 0.0;
  Eigen::Index df = 0;
  Vec weights;  // LR limit weights; empty for plain chi-square limits
  std::optional<double> p_value;
  std::vector<std::string> flags;
};

double chisq_cdf(double df, double x);
double chisq_quantile(double df, double p);
// P(Σ λ_j Z_j² ≤ x) by Imhof's inversion integral.
double weighted_chisq_cdf(const Vec& lambdas, double x);

struct BinomialInterval {
  long lower = 0, upper = 0;  // counts
  double lower_rate = 0.0, upper_rate = 0.0;
};

// Central interval holding a Bin(n, p) count with probability at least `level`.
BinomialInterval binomial_interval(long n, double p, double level = 0.99);

// V is the sandwich covariance (of √T(θ̂ − ϑ)) evaluated at θ̂.
TestResult wald_test(const Vec& theta_hat, const Mat& V, double T, const Constraint& constraint);

// Z is the raw score at θ̂^c, W the averaged Fisher information and V the covariance at θ̂^c.
TestResult lm_test(const Vec& theta_c, const Vec& Z, const Mat& W, const Mat& V, double T, const Constraint& constraint);
TestResult lm_test(const Model& model, const Mat& data, const EstimationResult& constrained, const Mat& W, const Mat& V,
                   const Constraint& constraint);

// Limit weights from W and V at θ̂^c.
Vec lr_weights(const Vec& theta_c, const Mat& W, const Mat& V, const Constraint& constraint, std::vector<std::string>* flags = nullptr);
TestResult lr_test(double loglik_unconstrained, double loglik_constrained, const Vec& theta_c, const Mat& W, const Mat& V,
                   const Constraint& constraint);
TestResult lr_test(const EstimationResult& unconstrained, const EstimationResult& constrained, const Mat& W, const Mat& V,
                   const Constraint& constraint);

}  // namespace pssm
