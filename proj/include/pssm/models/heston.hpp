#pragma once

#include "pssm/model.hpp"
#include "pssm/models/affine_engine.hpp"

#include <cstdint>
#include <memory>
#include <mutex>

namespace pssm {

// Heston model sampled every dt with state (v, ΔY, ΔY²), or (v, v², ΔY, ΔY², ΔY⁴) when
// extended; θ = (κ, m, σ, ρ). Initial law: point mass at v(0) = v0 with zero returns.
class HestonModel : public Model {
 public:
  struct Options {
    double dt = 1.0;
    bool extended = false;
    double v0 = 0.09;
  };

  HestonModel();
  explicit HestonModel(Options opts);

  std::string name() const override { return opts_.extended ? "heston-extended" : "heston"; }
  Eigen::Index state_dim() const override { return opts_.extended ? 5 : 3; }
  Eigen::Index hidden_dim() const override { return opts_.extended ? 2 : 1; }
  const ParamSpace& param_space() const override { return space_; }
  std::vector<std::string> param_names() const override { return {"kappa", "m", "sigma", "rho"}; }

  Vec transition_vector(const Vec& theta) const override;
  Mat transition_matrix(const Vec& theta) const override;
  NoiseMoments noise_moments(const Vec& theta, int max_order) const override;
  InitialLaw initial_law(const Vec& theta) const override;

  const Options& options() const { return opts_; }
  AffineMoments moments(const Vec& theta, int max_order) const;

  static Vec reference_theta();

 private:
  Options opts_;
  ParamSpace space_;
  AffineStateMap map_;
  mutable std::mutex mutex_;
  mutable Vec cached_theta_;
  mutable int cached_order_ = 0;
  mutable AffineMoments cached_;
};

// Per-component factors (1, 1/√dt, 1/dt, ...) that make every state coordinate O(1) for small dt.
Vec heston_coordinate_scale(const HestonModel::Options& opts);

// The Heston model in rescaled coordinates; identical to HestonModel when dt = 1.
std::shared_ptr<const Model> heston_scaled(HestonModel::Options opts = {});

// σ alone, with κ, m, ρ held at `theta`, in rescaled coordinates.
std::shared_ptr<SubsetModel> heston_isolated(const Vec& theta, Eigen::Index free_index = 2,
                                             HestonModel::Options opts = {});

struct SimulationResult {
  Mat states;  // rows t = 1..T, all d components
  Vec x0;
  Eigen::Index hidden = 0;

  Mat observations() const { return states.rightCols(states.cols() - hidden); }
};

struct HestonSimOptions {
  double inner_dt = 1.0 / 250.0;
  double dt = 1.0;
  bool extended = false;
  double v0 = 0.09;
};

// Euler–Maruyama with absorption at zero; stream selects an independent RNG substream.
SimulationResult heston_simulate(const Vec& theta, long T, std::uint64_t seed, const HestonSimOptions& opts = {},
                                 std::uint64_t stream = 0);

}  // namespace pssm
