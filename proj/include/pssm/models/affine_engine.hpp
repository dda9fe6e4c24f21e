#pragma once

#include "pssm/model.hpp"

#include <array>
#include <map>
#include <utility>
#include <vector>

namespace pssm {

// Monomials v^i y^j with i + j ≤ max_degree, ordered by total degree then by i descending.
// G holds the generator action: L φ_b = Σ_c G(b, c) φ_c.
struct AffineGenerator {
  int max_degree = 0;
  std::vector<std::pair<int, int>> basis;
  Mat G;

  Eigen::Index index(int i, int j) const;
};

AffineGenerator heston_generator(double kappa, double m, double sigma, double rho, int max_degree);

// Row b: E[φ_b(v(dt), Ỹ(dt)) | v(0) = v0, Ỹ(0) = 0] = Σ_p table(b, p) v0^p.
Mat conditional_moment_table(const AffineGenerator& gen, double dt);

// Polynomial in (v, y, c) where c stands for the conditioning variance v0.
using Poly3 = std::map<std::array<int, 3>, double>;

Poly3 poly_mul(const Poly3& a, const Poly3& b);

// State X = (p_1(v, Ỹ), ..., p_d(v, Ỹ)) sampled at the end of each step with Ỹ reset to zero.
// The first `hidden` components are pure powers of v with exponents `hidden_power`.
struct AffineStateMap {
  std::vector<Poly3> components;
  std::vector<int> hidden_power;

  Eigen::Index dim() const { return static_cast<Eigen::Index>(components.size()); }
  Eigen::Index hidden() const { return static_cast<Eigen::Index>(hidden_power.size()); }
  int degree() const;
  // Hidden component indices whose product equals v0^p; throws when not representable.
  std::vector<Eigen::Index> factor_power(int p) const;
};

// (v, ΔY, ΔY²)
AffineStateMap heston_state_map();
// (v, v², ΔY, ΔY², ΔY⁴)
AffineStateMap heston_extended_state_map();

struct AffineMoments {
  Vec a;
  Mat A;
  NoiseMoments noise;
};

AffineMoments affine_state_moments(const AffineGenerator& gen, double dt, const AffineStateMap& map, int max_order);

}  // namespace pssm
