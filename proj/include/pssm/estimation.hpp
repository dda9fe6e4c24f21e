#pragma once

#include "pssm/model.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace pssm {

struct EstimateOptions {
  int n_starts = 8;             // Halton points in Θ, in addition to `start`
  std::optional<Vec> start;
  double gtol = 1e-6;           // on ‖projected gradient‖ / T
  double step_tol = 1e-10;
  int max_iter = 200;
  double bound_shrink = 1e-6;
  int threads = 1;
};

struct EstimationResult {
  Vec theta_hat;
  double loglik = 0.0;
  double grad_norm = 0.0;  // ‖projected score‖ / T
  long iterations = 0;
  bool converged = false;
  std::vector<bool> boundary_active;
  int starts_used = 0;
  Vec multiplier;  // constrained solves only
  std::vector<std::string> messages;
};

// R(θ) = r with m ≤ k rows; an empty R_jac falls back to central differences.
struct Constraint {
  std::function<Vec(const Vec&)> R;
  std::function<Mat(const Vec&)> R_jac;
  Vec r;

  Eigen::Index dim() const { return r.size(); }
  Vec residual(const Vec& theta) const { return R(theta) - r; }
  Mat jacobian(const Vec& theta) const;
};

Constraint linear_constraint(const Mat& R, const Vec& r);
// θ_{indices[i]} = values[i]
Constraint pin_constraint(const std::vector<Eigen::Index>& indices, const Vec& values, Eigen::Index k);

// Throws MethodUnavailableError when the Jacobian at θ has rank below m.
void check_constraint_rank(const Constraint& c, const Vec& theta);

// Deterministic Halton points in the box.
std::vector<Vec> halton_points(const ParamSpace& box, int n);

EstimationResult qml_estimate(const Model& model, const Mat& data, const EstimateOptions& opts = {});
EstimationResult constrained_estimate(const Model& model, const Mat& data, const Constraint& constraint,
                                      const EstimateOptions& opts = {});
// θ̂(t) on data rows 1..t for each t in grid, warm-started at the previous estimate.
std::vector<EstimationResult> estimate_path(const Model& model, const Mat& data, const std::vector<long>& grid,
                                            const EstimateOptions& opts = {});

}  // namespace pssm
