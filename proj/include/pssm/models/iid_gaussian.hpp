#pragma once

#include "pssm/model.hpp"

namespace pssm {

// X(t) = μ + N(t), N(t) ~ N(0, σ²) i.i.d., fully observed. θ = (μ) with σ² fixed, or (μ, σ²).
class IidGaussianModel : public Model {
 public:
  explicit IidGaussianModel(double sigma2 = 1.0, bool estimate_variance = false, double bound = 10.0);

  std::string name() const override { return "iid-gaussian"; }
  Eigen::Index state_dim() const override { return 1; }
  Eigen::Index hidden_dim() const override { return 0; }
  const ParamSpace& param_space() const override { return space_; }
  std::vector<std::string> param_names() const override;

  Vec transition_vector(const Vec& theta) const override;
  Mat transition_matrix(const Vec& theta) const override;
  NoiseMoments noise_moments(const Vec& theta, int max_order) const override;
  InitialLaw initial_law(const Vec& theta) const override;

  double variance(const Vec& theta) const { return estimate_variance_ ? theta(1) : sigma2_; }

 private:
  double sigma2_;
  bool estimate_variance_;
  ParamSpace space_;
};

}  // namespace pssm
