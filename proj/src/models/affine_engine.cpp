#include "pssm/models/affine_engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pssm {

Eigen::Index AffineGenerator::index(int i, int j) const {
  const int n = i + j;
  if (i < 0 || j < 0 || n > max_degree) throw DimensionError("affine generator: monomial outside the basis");
  return static_cast<Eigen::Index>(n) * (n + 1) / 2 + (n - i);
}

AffineGenerator heston_generator(double kappa, double m, double sigma, double rho, int max_degree) {
  if (max_degree < 1) throw DimensionError("heston_generator: degree must be positive");
  AffineGenerator gen;
  gen.max_degree = max_degree;
  for (int n = 0; n <= max_degree; ++n)
    for (int i = n; i >= 0; --i) gen.basis.emplace_back(i, n - i);
  const Eigen::Index size = static_cast<Eigen::Index>(gen.basis.size());
  gen.G = Mat::Zero(size, size);
  for (Eigen::Index b = 0; b < size; ++b) {
    const auto [i, j] = gen.basis[b];
    const double di = i, dj = j;
    if (i >= 1) gen.G(b, gen.index(i - 1, j)) += kappa * m * di + 0.5 * sigma * sigma * di * (di - 1.0);
    gen.G(b, b) += -kappa * di;
    if (i >= 1 && j >= 1) gen.G(b, gen.index(i, j - 1)) += sigma * rho * di * dj;
    if (j >= 2) gen.G(b, gen.index(i + 1, j - 2)) += 0.5 * dj * (dj - 1.0);
  }
  return gen;
}

Mat conditional_moment_table(const AffineGenerator& gen, double dt) {
  const Mat E = expm(gen.G * dt);
  const Eigen::Index size = E.rows();
  Mat table = Mat::Zero(size, gen.max_degree + 1);
  for (Eigen::Index b = 0; b < size; ++b) {
    const auto [i, j] = gen.basis[b];
    // moments of (v, Ỹ) grow in v0 with weight 1 for v and 1/2 for Ỹ
    const int top = i + j / 2;
    for (int p = 0; p <= top; ++p) table(b, p) = E(b, gen.index(p, 0));
  }
  return table;
}

Poly3 poly_mul(const Poly3& a, const Poly3& b) {
  Poly3 out;
  for (const auto& [ka, va] : a)
    for (const auto& [kb, vb] : b) out[{ka[0] + kb[0], ka[1] + kb[1], ka[2] + kb[2]}] += va * vb;
  return out;
}

int AffineStateMap::degree() const {
  int deg = 0;
  for (const auto& p : components)
    for (const auto& [key, value] : p)
      if (value != 0.0) deg = std::max(deg, key[0] + key[1]);
  return deg;
}

std::vector<Eigen::Index> AffineStateMap::factor_power(int p) const {
  std::vector<Eigen::Index> order(hidden_power.size());
  for (std::size_t h = 0; h < order.size(); ++h) order[h] = static_cast<Eigen::Index>(h);
  std::sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) { return hidden_power[x] > hidden_power[y]; });
  std::vector<Eigen::Index> out;
  int rest = p;
  for (Eigen::Index h : order)
    while (rest >= hidden_power[h]) {
      out.push_back(h);
      rest -= hidden_power[h];
    }
  if (rest != 0) throw DimensionError("affine state map: power of v not representable by hidden components");
  return out;
}

AffineStateMap heston_state_map() {
  AffineStateMap map;
  map.components = {Poly3{{{1, 0, 0}, 1.0}}, Poly3{{{0, 1, 0}, 1.0}}, Poly3{{{0, 2, 0}, 1.0}}};
  map.hidden_power = {1};
  return map;
}

AffineStateMap heston_extended_state_map() {
  AffineStateMap map;
  map.components = {Poly3{{{1, 0, 0}, 1.0}}, Poly3{{{2, 0, 0}, 1.0}}, Poly3{{{0, 1, 0}, 1.0}}, Poly3{{{0, 2, 0}, 1.0}},
                    Poly3{{{0, 4, 0}, 1.0}}};
  map.hidden_power = {1, 2};
  return map;
}

namespace {

std::vector<double> expect(const Poly3& q, const AffineGenerator& gen, const Mat& table) {
  std::vector<double> out;
  for (const auto& [key, w] : q) {
    if (w == 0.0) continue;
    const auto row = table.row(gen.index(key[0], key[1]));
    const std::size_t need = static_cast<std::size_t>(key[2] + row.size());
    if (out.size() < need) out.resize(need, 0.0);
    for (Eigen::Index p = 0; p < row.size(); ++p) out[key[2] + p] += w * row(p);
  }
  return out;
}

}  // namespace

AffineMoments affine_state_moments(const AffineGenerator& gen, double dt, const AffineStateMap& map, int max_order) {
  if (max_order < 2 || max_order > 4) throw DimensionError("affine_state_moments: order must be in 2..4");
  if (max_order * map.degree() > gen.max_degree)
    throw DimensionError("affine_state_moments: generator basis degree too small for the requested order");
  const Eigen::Index d = map.dim(), hidden = map.hidden();
  const Mat table = conditional_moment_table(gen, dt);

  AffineMoments out;
  out.a = Vec::Zero(d);
  out.A = Mat::Zero(d, d);
  std::vector<Poly3> noise(d);
  for (Eigen::Index c = 0; c < d; ++c) {
    const std::vector<double> e = expect(map.components[c], gen, table);
    if (!e.empty()) out.a(c) = e[0];
    for (std::size_t p = 1; p < e.size(); ++p) {
      if (e[p] == 0.0) continue;
      const auto fac = map.factor_power(static_cast<int>(p));
      if (fac.size() != 1) throw DimensionError("affine_state_moments: conditional mean is not affine in the state");
      out.A(c, fac[0]) += e[p];
    }
    noise[c] = map.components[c];
    noise[c][{0, 0, 0}] -= out.a(c);
    for (Eigen::Index h = 0; h < hidden; ++h)
      if (out.A(c, h) != 0.0) noise[c][{0, 0, map.hidden_power[h]}] -= out.A(c, h);
  }

  out.noise = NoiseMoments(d, max_order);
  std::vector<Poly3> prod = noise;
  for (int s = 2; s <= max_order; ++s) {
    std::vector<Poly3> next;
    next.reserve(prod.size() * d);
    for (const Poly3& left : prod)
      for (Eigen::Index c = 0; c < d; ++c) next.push_back(poly_mul(left, noise[c]));
    prod = std::move(next);
    for (std::size_t row = 0; row < prod.size(); ++row) {
      const std::vector<double> e = expect(prod[row], gen, table);
      for (std::size_t q = 0; q < e.size(); ++q) {
        if (e[q] == 0.0) continue;
        if (q == 0) {
          out.noise.coeff(s, 0)(static_cast<Eigen::Index>(row), 0) += e[q];
          continue;
        }
        const auto fac = map.factor_power(static_cast<int>(q));
        const int order = static_cast<int>(fac.size());
        if (order > s) throw DimensionError("affine_state_moments: noise moment exceeds the polynomial order");
        Eigen::Index col = 0;
        for (Eigen::Index h : fac) col = col * d + h;
        out.noise.coeff(s, order)(static_cast<Eigen::Index>(row), col) += e[q];
      }
    }
  }
  return out;
}

}  // namespace pssm
