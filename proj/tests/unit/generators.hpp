#pragma once

#include "pssm/model.hpp"
#include "pssm/models/ou.hpp"
#include "pssm/models/rng.hpp"
#include "pssm/tensor_linalg.hpp"

#include <functional>

namespace gen {

using pssm::Mat;
using pssm::Vec;

inline Mat matrix(pssm::Rng& rng, Eigen::Index r, Eigen::Index c) {
  Mat m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.normal();
  return m;
}

inline Vec vector(pssm::Rng& rng, Eigen::Index n) { return matrix(rng, n, 1).col(0); }

inline Mat stable(pssm::Rng& rng, Eigen::Index d, double radius) {
  Mat a = matrix(rng, d, d);
  const double rho = pssm::spectral_radius(a);
  return rho > 0.0 ? Mat(a * (radius / rho)) : a;
}

inline Mat spd(pssm::Rng& rng, Eigen::Index d, double floor = 0.1) {
  const Mat b = matrix(rng, d, d);
  return b * b.transpose() + floor * Mat::Identity(d, d);
}

inline double rel_err(const Mat& got, const Mat& want) { return (got - want).norm() / std::max(1e-300, want.norm()); }

// X(t) = a(θ) + A(θ)X(t−1) + N(t) with Gaussian noise of covariance C(θ), independent of the state.
class LinearGaussianModel : public pssm::Model {
 public:
  using VecFn = std::function<Vec(const Vec&)>;
  using MatFn = std::function<Mat(const Vec&)>;

  LinearGaussianModel(Eigen::Index d, Eigen::Index m, pssm::ParamSpace space, VecFn a, MatFn A, MatFn C,
                      pssm::InitialLaw init)
      : d_(d), m_(m), space_(std::move(space)), a_(std::move(a)), A_(std::move(A)), C_(std::move(C)), init_(std::move(init)) {}

  std::string name() const override { return "linear-gaussian"; }
  Eigen::Index state_dim() const override { return d_; }
  Eigen::Index hidden_dim() const override { return m_; }
  const pssm::ParamSpace& param_space() const override { return space_; }
  Vec transition_vector(const Vec& theta) const override { return a_(theta); }
  Mat transition_matrix(const Vec& theta) const override { return A_(theta); }
  pssm::NoiseMoments noise_moments(const Vec& theta, int max_order) const override {
    pssm::NoiseMoments nm(d_, max_order);
    const Mat C = C_(theta);
    nm.coeff(2, 0) = pssm::vec(C);
    if (max_order >= 4) nm.coeff(4, 0) = pssm::pairings(C);
    return nm;
  }
  pssm::InitialLaw initial_law(const Vec&) const override { return init_; }

 private:
  Eigen::Index d_, m_;
  pssm::ParamSpace space_;
  VecFn a_;
  MatFn A_, C_;
  pssm::InitialLaw init_;
};

// Hidden AR(1) observed with noise: X₁' = φX₁ + N₁, X₂' = X₁ + N₂, θ = (φ, s²).
inline std::shared_ptr<LinearGaussianModel> hidden_ar1(double x0 = 0.5) {
  pssm::ParamSpace box{(Vec(2) << -0.95, 0.05).finished(), (Vec(2) << 0.95, 5.0).finished()};
  return std::make_shared<LinearGaussianModel>(
      2, 1, box, [](const Vec&) { return Vec(Vec::Zero(2)); },
      [](const Vec& th) { return Mat((Mat(2, 2) << th(0), 0.0, 1.0, 0.0).finished()); },
      [](const Vec& th) { return Mat((Mat(2, 2) << 1.0, 0.0, 0.0, th(1)).finished()); },
      pssm::InitialLaw::dirac((Vec(2) << x0, 0.0).finished()));
}

inline Mat simulate(const pssm::Model& model, const Vec& theta, long T, pssm::Rng& rng) {
  const Eigen::Index d = model.state_dim();
  const Vec a = model.transition_vector(theta);
  const Mat A = model.transition_matrix(theta);
  const Mat C = pssm::unvec(model.noise_moments(theta, 2).coeff(2, 0).col(0), d, d);
  const Mat L = Eigen::LLT<Mat>(C).matrixL();
  Vec x = model.initial_law(theta).mean;
  Mat out(T, d);
  for (long t = 0; t < T; ++t) {
    x = a + A * x + L * vector(rng, d);
    out.row(t) = x.transpose();
  }
  return out;
}

}  // namespace gen
