#include "pssm/models/ou.hpp"

#include <algorithm>
#include <cmath>

namespace pssm {

LevyCumulants nig_cumulants(double alpha, double delta, Eigen::Index d) {
  if (!(alpha > 0.0) || !(delta > 0.0)) throw std::invalid_argument("nig_cumulants: α and δ must be positive");
  LevyCumulants c;
  c.k2 = (delta / alpha) * Mat::Identity(d, d);
  // L(1) = √W Z with W inverse Gaussian, Var W = δ/α³
  c.k4 = (delta / (alpha * alpha * alpha)) * pairings(Mat::Identity(d, d));
  return c;
}

Vec pairings(const Mat& C) {
  const Eigen::Index d = C.rows();
  Vec out(d * d * d * d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      for (Eigen::Index k = 0; k < d; ++k)
        for (Eigen::Index l = 0; l < d; ++l)
          out(((i * d + j) * d + k) * d + l) = C(i, j) * C(k, l) + C(i, k) * C(j, l) + C(i, l) * C(j, k);
  return out;
}

Vec integrated_cumulant(const Mat& Q, const Vec& kappa, int j, double dt) {
  Mat K = Q, E = expm(-Q * dt);
  for (int p = 1; p < j; ++p) {
    K = kron_sum(K, Q);
    E = kron(E, expm(-Q * dt));
  }
  if (kappa.size() != K.rows()) throw DimensionError("integrated_cumulant: cumulant has the wrong length");
  Eigen::FullPivLU<Mat> lu(K);
  if (!lu.isInvertible()) throw std::invalid_argument("integrated_cumulant: Q is singular");
  return lu.solve(kappa - E * kappa);
}

NoiseMoments levy_noise_moments(const Mat& Q, const LevyCumulants& c, double dt, int max_order) {
  const Eigen::Index d = Q.rows();
  if (c.k2.rows() != d || c.k2.cols() != d) throw DimensionError("levy_noise_moments: κ₂ has the wrong shape");
  if (c.symmetric && c.k3.size() && !c.k3.isZero(0.0))
    throw std::invalid_argument("levy_noise_moments: odd cumulant nonzero for a symmetric driver");
  NoiseMoments out(d, max_order);
  const Vec c2 = integrated_cumulant(Q, vec(c.k2), 2, dt);
  out.coeff(2, 0).col(0) = c2;
  if (max_order >= 3 && c.k3.size()) out.coeff(3, 0).col(0) = integrated_cumulant(Q, c.k3, 3, dt);
  if (max_order >= 4) {
    Vec m4 = pairings(unvec(c2, d, d));
    if (c.k4.size()) m4 += integrated_cumulant(Q, c.k4, 4, dt);
    out.coeff(4, 0).col(0) = m4;
  }
  return out;
}

OuModel::OuModel() : OuModel(Options{}) {}

OuModel::OuModel(Options opts) : opts_(std::move(opts)) {
  if (!(opts_.dt > 0.0) || !(opts_.alpha > 0.0)) throw std::invalid_argument("OuModel: dt and α must be positive");
  if (opts_.x0.size() != 2) throw DimensionError("OuModel: x0 must have 2 components");
  space_.lower = (Vec(3) << 1e-4, 1e-4, 1e-4).finished();
  space_.upper = (Vec(3) << 10.0, 10.0, 1000.0).finished();
}

Mat OuModel::drift_matrix(const Vec& theta) {
  if (theta.size() != 3) throw DimensionError("OuModel: θ must have 3 components");
  return (Mat(2, 2) << theta(0), 0.0, -theta(1), theta(1)).finished();
}

Vec OuModel::reference_theta() { return (Vec(3) << 1.0, 0.5, 3.0).finished(); }

Vec OuModel::transition_vector(const Vec& theta) const {
  drift_matrix(theta);
  return Vec::Zero(2);
}

Mat OuModel::transition_matrix(const Vec& theta) const { return expm(-drift_matrix(theta) * opts_.dt); }

NoiseMoments OuModel::noise_moments(const Vec& theta, int max_order) const {
  return levy_noise_moments(drift_matrix(theta), nig_cumulants(opts_.alpha, theta(2)), opts_.dt, max_order);
}

InitialLaw OuModel::initial_law(const Vec&) const { return InitialLaw::dirac(opts_.x0); }

Mat OuModel::noise_cov_closed_form(const Vec& theta) const {
  const Mat Q = drift_matrix(theta);
  const Mat K = kron_sum(Q, Q);
  const Vec c = vec(Mat((theta(2) / opts_.alpha) * Mat::Identity(2, 2)));
  const Mat I = Mat::Identity(4, 4);
  return unvec(Vec(K.fullPivLu().solve((I - expm(-K * opts_.dt)) * c)), 2, 2);
}

double sample_inverse_gaussian(Rng& rng, double mean, double shape) {
  const double nu = rng.normal();
  const double y = nu * nu;
  const double mu = mean;
  const double x = mu + mu * mu * y / (2.0 * shape) - mu / (2.0 * shape) * std::sqrt(4.0 * mu * shape * y + mu * mu * y * y);
  return rng.uniform() <= mu / (mu + x) ? x : mu * mu / x;
}

SimulationResult ou_simulate(const Vec& theta, long T, std::uint64_t seed, const OuSimOptions& opts, std::uint64_t stream) {
  if (T < 1) throw std::invalid_argument("ou_simulate: T must be at least 1");
  if (!(opts.mesh > 0.0) || !(opts.dt > 0.0)) throw std::invalid_argument("ou_simulate: steps must be positive");
  const Mat Q = OuModel::drift_matrix(theta);
  const double delta = theta(2);
  const long steps = std::max(1L, std::lround(opts.dt / opts.mesh));
  const double h = opts.dt / static_cast<double>(steps);
  const Mat E = expm(-Q * h);
  const double e00 = E(0, 0), e10 = E(1, 0), e11 = E(1, 1);
  // subordinator increment over h: mean δh/α, shape (δh)²
  const double ig_mean = delta * h / opts.alpha, ig_shape = delta * h * delta * h;
  Rng rng(seed, stream);
  SimulationResult out;
  out.hidden = 1;
  out.x0 = opts.x0;
  out.states.resize(T, 2);
  double x0 = opts.x0(0), x1 = opts.x0(1);
  for (long t = 0; t < T; ++t) {
    for (long s = 0; s < steps; ++s) {
      const double w = ig_mean > 0.0 ? sample_inverse_gaussian(rng, ig_mean, ig_shape) : 0.0;
      const double sw = std::sqrt(w);
      const double y0 = x0 + sw * rng.normal(), y1 = x1 + sw * rng.normal();
      x0 = e00 * y0;
      x1 = e10 * y0 + e11 * y1;
    }
    out.states.row(t) << x0, x1;
  }
  return out;
}

}  // namespace pssm
