#include "pssm/models/heston.hpp"

#include "pssm/models/rng.hpp"

#include <algorithm>
#include <cmath>

namespace pssm {

HestonModel::HestonModel() : HestonModel(Options{}) {}

HestonModel::HestonModel(Options opts) : opts_(opts) {
  if (!(opts_.dt > 0.0)) throw std::invalid_argument("HestonModel: dt must be positive");
  if (opts_.v0 < 0.0) throw std::invalid_argument("HestonModel: v0 must be nonnegative");
  space_.lower = (Vec(4) << 1e-4, 1e-8, 1e-4, -1.0).finished();
  space_.upper = (Vec(4) << 10.0, 1.0, 1.0, 1.0).finished();
  map_ = opts_.extended ? heston_extended_state_map() : heston_state_map();
}

Vec HestonModel::reference_theta() { return (Vec(4) << 1.0, 0.16, 0.3, -0.5).finished(); }

AffineMoments HestonModel::moments(const Vec& theta, int max_order) const {
  if (theta.size() != 4) throw DimensionError("HestonModel: θ must have 4 components");
  max_order = std::max(max_order, 2);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    if (cached_order_ >= max_order && cached_theta_.size() == 4 && cached_theta_ == theta) {
      AffineMoments out = cached_;
      if (max_order < cached_order_) out.noise = cached_.noise.truncated(max_order);
      return out;
    }
  }
  const int degree = map_.degree() * max_order;
  const AffineGenerator gen = heston_generator(theta(0), theta(1), theta(2), theta(3), degree);
  AffineMoments out = affine_state_moments(gen, opts_.dt, map_, max_order);
  std::lock_guard<std::mutex> lock(mutex_);
  cached_theta_ = theta;
  cached_order_ = max_order;
  cached_ = out;
  return out;
}

Vec HestonModel::transition_vector(const Vec& theta) const { return moments(theta, 2).a; }

Mat HestonModel::transition_matrix(const Vec& theta) const { return moments(theta, 2).A; }

NoiseMoments HestonModel::noise_moments(const Vec& theta, int max_order) const { return moments(theta, max_order).noise; }

InitialLaw HestonModel::initial_law(const Vec&) const {
  Vec x0 = Vec::Zero(state_dim());
  x0(0) = opts_.v0;
  if (opts_.extended) x0(1) = opts_.v0 * opts_.v0;
  return InitialLaw::dirac(x0);
}

Vec heston_coordinate_scale(const HestonModel::Options& opts) {
  const double r = 1.0 / std::sqrt(opts.dt);
  if (opts.extended) return (Vec(5) << 1.0, 1.0, r, r * r, std::pow(r, 4)).finished();
  return (Vec(3) << 1.0, r, r * r).finished();
}

std::shared_ptr<const Model> heston_scaled(HestonModel::Options opts) {
  return std::make_shared<ScaledModel>(std::make_shared<HestonModel>(opts), heston_coordinate_scale(opts));
}

std::shared_ptr<SubsetModel> heston_isolated(const Vec& theta, Eigen::Index free_index, HestonModel::Options opts) {
  return std::make_shared<SubsetModel>(heston_scaled(opts), std::vector<Eigen::Index>{free_index}, theta);
}

SimulationResult heston_simulate(const Vec& theta, long T, std::uint64_t seed, const HestonSimOptions& opts,
                                 std::uint64_t stream) {
  if (T < 1) throw std::invalid_argument("heston_simulate: T must be at least 1");
  if (theta.size() != 4) throw DimensionError("heston_simulate: θ must have 4 components");
  if (!(opts.inner_dt > 0.0) || !(opts.dt > 0.0)) throw std::invalid_argument("heston_simulate: steps must be positive");
  const double kappa = theta(0), m = theta(1), sigma = theta(2), rho = theta(3);
  const long steps = std::max(1L, std::lround(opts.dt / opts.inner_dt));
  const double h = opts.dt / static_cast<double>(steps), sqh = std::sqrt(h);
  const double rho_c = std::sqrt(std::max(0.0, 1.0 - rho * rho));
  Rng rng(seed, stream);
  const Eigen::Index d = opts.extended ? 5 : 3;
  SimulationResult out;
  out.hidden = opts.extended ? 2 : 1;
  out.x0 = Vec::Zero(d);
  out.x0(0) = opts.v0;
  if (opts.extended) out.x0(1) = opts.v0 * opts.v0;
  out.states.resize(T, d);
  double v = opts.v0;
  for (long t = 0; t < T; ++t) {
    double dy = 0.0;
    for (long s = 0; s < steps; ++s) {
      const double z1 = rng.normal(), z2 = rho * z1 + rho_c * rng.normal();
      const double sv = std::sqrt(v);
      dy += sv * sqh * z2;
      v = std::max(v + kappa * (m - v) * h + sigma * sv * sqh * z1, 0.0);
    }
    if (opts.extended)
      out.states.row(t) << v, v * v, dy, dy * dy, dy * dy * dy * dy;
    else
      out.states.row(t) << v, dy, dy * dy;
  }
  return out;
}

}  // namespace pssm
