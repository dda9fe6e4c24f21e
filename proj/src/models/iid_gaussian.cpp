#include "pssm/models/iid_gaussian.hpp"

namespace pssm {

IidGaussianModel::IidGaussianModel(double sigma2, bool estimate_variance, double bound)
    : sigma2_(sigma2), estimate_variance_(estimate_variance) {
  if (!(sigma2 > 0.0) || !(bound > 0.0)) throw std::invalid_argument("IidGaussianModel: σ² and bound must be positive");
  if (estimate_variance_) {
    space_.lower = (Vec(2) << -bound, 1e-4).finished();
    space_.upper = (Vec(2) << bound, bound).finished();
  } else {
    space_.lower = Vec::Constant(1, -bound);
    space_.upper = Vec::Constant(1, bound);
  }
}

std::vector<std::string> IidGaussianModel::param_names() const {
  if (estimate_variance_) return {"mu", "sigma2"};
  return {"mu"};
}

Vec IidGaussianModel::transition_vector(const Vec& theta) const { return Vec::Constant(1, theta(0)); }

Mat IidGaussianModel::transition_matrix(const Vec&) const { return Mat::Zero(1, 1); }

NoiseMoments IidGaussianModel::noise_moments(const Vec& theta, int max_order) const {
  const double s2 = variance(theta);
  NoiseMoments out(1, max_order);
  out.coeff(2, 0)(0, 0) = s2;
  if (max_order >= 4) out.coeff(4, 0)(0, 0) = 3.0 * s2 * s2;
  return out;
}

InitialLaw IidGaussianModel::initial_law(const Vec& theta) const { return InitialLaw::dirac(Vec::Constant(1, theta(0))); }

}  // namespace pssm
