#include "pssm/moment_chain.hpp"
#include "pssm/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

namespace pssm {

namespace {

Tensor expand_noise_free(const MomentChain& chain, const Vec& moment, int a, unsigned t_mask, int p) {
  const Eigen::Index n = chain.dim();
  const int t = std::popcount(t_mask);
  const int q = t + p;
  Tensor x(std::vector<Eigen::Index>(q, n), moment);
  for (int ax = 0; ax < t; ++ax) x = mode_product(x, ax, chain.transition);
  for (int ax = t; ax < q; ++ax) x = mode_product(x, ax, chain.noise_selector);
  for (int i = 0; i < a - t; ++i) x = outer(chain.drift, x);
  std::vector<int> perm(x.order());
  std::iota(perm.begin(), perm.end(), 0);
  int in_t = a - t, in_c = 0;
  for (int i = 0; i < a; ++i) perm[i] = (t_mask >> i) & 1u ? in_t++ : in_c++;
  return permute_axes(x, perm);
}

}  // namespace

MomentChain state_chain(const Vec& a, const Mat& A, const NoiseMoments& noise) {
  const Eigen::Index d = a.size();
  return MomentChain{a, A, Mat::Identity(d, d), Mat::Identity(d, d), noise};
}

Vec propagate_moment(const MomentChain& chain, const std::vector<Vec>& moments, int order) {
  const Eigen::Index n = chain.dim();
  const Eigen::Index d = chain.noise_selector.rows();
  auto available = [&](int q) { return q < static_cast<int>(moments.size()) && moments[q].size() > 0; };
  if (order == 0) return available(0) ? moments[0] : Vec::Zero(1);
  Tensor result = Tensor::zeros(std::vector<Eigen::Index>(order, n));
  for (unsigned s_mask = 0; s_mask < (1u << order); ++s_mask) {
    const int s = std::popcount(s_mask);
    if (s == 1) continue;
    const int a = order - s;
    const int p_max = s == 0 ? 0 : s;
    for (int p = 0; p <= p_max; ++p) {
      if (s > 0) {
        if (s > chain.noise.max_order()) throw DimensionError("propagate_moment: noise moments missing for order " + std::to_string(s));
        if (chain.noise.is_zero(s, p)) continue;
      }
      for (unsigned t_mask = 0; t_mask < (1u << a); ++t_mask) {
        const int q = std::popcount(t_mask) + p;
        if (!available(q)) continue;
        Tensor x = expand_noise_free(chain, moments[q], a, t_mask, p);
        if (s > 0) {
          x = merge_axes(x, a, p);
          x = mode_product(x, a, chain.noise.coeff(s, p));
          std::vector<Eigen::Index> dims(a, n);
          dims.insert(dims.end(), s, d);
          x = x.reshaped(std::move(dims));
          for (int ax = a; ax < a + s; ++ax) x = mode_product(x, ax, chain.noise_embedding);
        }
        std::vector<int> perm(order);
        int in_s = a, in_c = 0;
        for (int i = 0; i < order; ++i) perm[i] = (s_mask >> i) & 1u ? in_s++ : in_c++;
        result.data() += permute_axes(x, perm).data();
      }
    }
  }
  return result.data();
}

std::vector<Vec> propagate_moments(const MomentChain& chain, const std::vector<Vec>& moments, int r) {
  std::vector<Vec> out(r + 1);
  out[0] = moments.empty() ? Vec() : moments[0];
  for (int q = 1; q <= r; ++q) out[q] = propagate_moment(chain, moments, q);
  return out;
}

Eigen::Index symmetric_dim(Eigen::Index n, int order) {
  double c = 1.0;
  for (int i = 1; i <= order; ++i) c = c * static_cast<double>(n + i - 1) / i;
  return static_cast<Eigen::Index>(std::llround(c));
}

namespace {

struct SymmetricBasis {
  std::vector<Eigen::Index> rep;     // full index of each sorted tuple
  std::vector<Eigen::Index> id_of;   // basis id of each full index
};

SymmetricBasis symmetric_basis(Eigen::Index n, int order) {
  Eigen::Index total = 1;
  for (int i = 0; i < order; ++i) total *= n;
  SymmetricBasis b;
  b.id_of.assign(total, -1);
  std::vector<Eigen::Index> digits(order);
  for (Eigen::Index idx = 0; idx < total; ++idx) {
    Eigen::Index rem = idx;
    for (int i = order - 1; i >= 0; --i) {
      digits[i] = rem % n;
      rem /= n;
    }
    std::vector<Eigen::Index> sorted = digits;
    std::sort(sorted.begin(), sorted.end());
    Eigen::Index key = 0;
    for (auto v : sorted) key = key * n + v;
    if (b.id_of[key] < 0) {
      b.id_of[key] = static_cast<Eigen::Index>(b.rep.size());
      b.rep.push_back(key);
    }
    b.id_of[idx] = b.id_of[key];
  }
  return b;
}

Vec solve_symmetric_direct(const MomentChain& chain, const Vec& constant, int order) {
  const Eigen::Index n = chain.dim();
  const SymmetricBasis basis = symmetric_basis(n, order);
  const Eigen::Index dim = static_cast<Eigen::Index>(basis.rep.size());
  std::vector<std::vector<Eigen::Index>> members(dim);
  for (Eigen::Index idx = 0; idx < static_cast<Eigen::Index>(basis.id_of.size()); ++idx)
    members[basis.id_of[idx]].push_back(idx);
  Mat lhs = Mat::Identity(dim, dim);
  std::vector<Vec> input(order + 1);
  input[order] = Vec::Zero(static_cast<Eigen::Index>(basis.id_of.size()));
  for (Eigen::Index beta = 0; beta < dim; ++beta) {
    for (auto idx : members[beta]) input[order](idx) = 1.0;
    const Vec image = propagate_moment(chain, input, order);
    for (auto idx : members[beta]) input[order](idx) = 0.0;
    for (Eigen::Index gamma = 0; gamma < dim; ++gamma) lhs(gamma, beta) -= image(basis.rep[gamma]);
  }
  Vec rhs(dim);
  for (Eigen::Index gamma = 0; gamma < dim; ++gamma) rhs(gamma) = constant(basis.rep[gamma]);
  const Vec x = lhs.partialPivLu().solve(rhs);
  Vec full(static_cast<Eigen::Index>(basis.id_of.size()));
  for (Eigen::Index idx = 0; idx < full.size(); ++idx) full(idx) = x(basis.id_of[idx]);
  return full;
}

}  // namespace

StationaryMoments stationary_moment_solve(const MomentChain& chain, int r, const StationaryOptions& opts) {
  StationaryMoments out;
  out.moments.assign(1, Vec::Ones(1));
  const double rho = spectral_radius(chain.transition);
  if (rho >= 1.0) throw NonContractiveError("stationary moments: spectral radius " + std::to_string(rho) + " >= 1");
  for (int order = 1; order <= r; ++order) {
    out.moments.emplace_back();
    const Vec constant = propagate_moment(chain, out.moments, order);
    const Eigen::Index sym = symmetric_dim(chain.dim(), order);
    const bool slow = std::pow(rho, order) >= opts.slow_rate;
    if (sym <= opts.direct_limit || (slow && sym <= opts.slow_direct_limit)) {
      out.moments[order] = solve_symmetric_direct(chain, constant, order);
      out.iterations.push_back(0);
      out.last_ratio.push_back(0.0);
      continue;
    }
    std::vector<Vec> input(order + 1);
    Vec m = constant;
    double prev_change = 0.0, ratio = 0.0;
    long it = 0;
    for (; it < opts.max_iter; ++it) {
      input[order] = m;
      Vec next = constant + propagate_moment(chain, input, order);
      const double change = (next - m).norm();
      if (prev_change > 0.0) ratio = change / prev_change;
      prev_change = change;
      m = std::move(next);
      if (change < opts.tol * (1.0 + m.norm())) break;
    }
    if (it == opts.max_iter)
      throw NonContractiveError("stationary moments: no convergence at order " + std::to_string(order));
    out.moments[order] = m;
    out.iterations.push_back(it + 1);
    out.last_ratio.push_back(ratio);
  }
  return out;
}

std::vector<Vec> initial_moments(const InitialLaw& law, int r) {
  const Eigen::Index d = law.mean.size();
  std::vector<Vec> out(r + 1);
  out[0] = Vec::Ones(1);
  if (law.kind == InitialLaw::Kind::dirac) {
    Vec power = Vec::Ones(1);
    for (int q = 1; q <= r; ++q) out[q] = power = kron(power, law.mean);
    return out;
  }
  // Isserlis: E[x^{⊗q}] = Σ over partial pairings of the positions, unpaired positions carry the mean.
  for (int q = 1; q <= r; ++q) {
    Eigen::Index total = 1;
    for (int i = 0; i < q; ++i) total *= d;
    Vec m(total);
    std::vector<Eigen::Index> idx(q);
    for (Eigen::Index flat = 0; flat < total; ++flat) {
      Eigen::Index rem = flat;
      for (int i = q - 1; i >= 0; --i) {
        idx[i] = rem % d;
        rem /= d;
      }
      // recursive sum over pairings of the position set
      std::vector<int> open(q);
      std::iota(open.begin(), open.end(), 0);
      auto rec = [&](auto&& self, std::vector<int> rest) -> double {
        if (rest.empty()) return 1.0;
        const int first = rest.front();
        std::vector<int> tail(rest.begin() + 1, rest.end());
        double sum = law.mean(idx[first]) * self(self, tail);
        for (std::size_t j = 0; j < tail.size(); ++j) {
          std::vector<int> rem2;
          for (std::size_t l = 0; l < tail.size(); ++l)
            if (l != j) rem2.push_back(tail[l]);
          sum += law.cov(idx[first], idx[tail[j]]) * self(self, rem2);
        }
        return sum;
      };
      m(flat) = rec(rec, open);
    }
    out[q] = m;
  }
  return out;
}

}  // namespace pssm
