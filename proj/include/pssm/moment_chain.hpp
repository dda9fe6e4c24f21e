#pragma once

#include "pssm/model.hpp"

#include <vector>

namespace pssm {

// Y' = b + B Y + E N with E[N^{⊗s} | Y] = Σ_p Q_{s,p} (P Y)^{⊗p}.
// For a model state X itself E = P = I; for filter-augmented chains E embeds the
// state noise into the first block and P reads the state back out.
struct MomentChain {
  Vec drift;
  Mat transition;
  Mat noise_embedding;
  Mat noise_selector;
  NoiseMoments noise;

  Eigen::Index dim() const { return drift.size(); }
};

MomentChain state_chain(const Vec& a, const Mat& A, const NoiseMoments& noise);

// E[Y'^{⊗order}] given moments[q] = E[Y^{⊗q}]; empty entries are zero. moments[0] is the
// total mass (1 for a probability law, empty for the purely linear part).
Vec propagate_moment(const MomentChain& chain, const std::vector<Vec>& moments, int order);

// One step of all orders 1..r; moments[0] is carried over.
std::vector<Vec> propagate_moments(const MomentChain& chain, const std::vector<Vec>& moments, int r);

struct StationaryOptions {
  double tol = 1e-12;
  long max_iter = 1000000;
  Eigen::Index direct_limit = 1500;
  Eigen::Index slow_direct_limit = 4000;
  double slow_rate = 0.9;
};

struct StationaryMoments {
  std::vector<Vec> moments;  // moments[0] = 1, moments[q] = E[Y^{⊗q}] in Kronecker layout
  std::vector<long> iterations;  // 0 when solved directly
  std::vector<double> last_ratio;  // successive-change ratio at termination (iterative orders)
};

StationaryMoments stationary_moment_solve(const MomentChain& chain, int r, const StationaryOptions& opts = {});

// Moments of an order-q symmetric tensor vectorized in the Kronecker layout.
Eigen::Index symmetric_dim(Eigen::Index n, int order);

// E[x^{⊗q}], q = 0..r, for a Gaussian law (Isserlis) or a point mass.
std::vector<Vec> initial_moments(const InitialLaw& law, int r);

}  // namespace pssm
