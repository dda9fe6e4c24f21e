#include "pssm/polynomial.hpp"

namespace pssm {

Eigen::Index PolyCoeffs::block_size(int q) const {
  Eigen::Index s = 1;
  for (int i = 0; i < q; ++i) s *= n;
  return s;
}

Eigen::Index PolyCoeffs::offset(int q) const { return q <= 1 ? 0 : stacked_length(n, q - 1); }

Vec PolyCoeffs::evaluate(const Vec& x) const { return alpha * stacked_kron(x, order) + beta; }

Vec PolyCoeffs::expectation(const std::vector<Vec>& moments) const {
  Vec out = beta;
  for (int q = 1; q <= order; ++q) out += alpha.middleCols(offset(q), block_size(q)) * moments.at(q);
  return out;
}

PolyCoeffs zero_poly(Eigen::Index rows, Eigen::Index n, int order) {
  PolyCoeffs p;
  p.order = order;
  p.n = n;
  p.alpha = Mat::Zero(rows, stacked_length(n, order));
  p.beta = Vec::Zero(rows);
  return p;
}

PolyCoeffs outer_product(const PolyCoeffs& f, const PolyCoeffs& g) {
  if (f.n != g.n) throw DimensionError("outer_product: polynomials live on different spaces");
  PolyCoeffs out = zero_poly(f.rows() * g.rows(), f.n, f.order + g.order);
  for (Eigen::Index i = 0; i < f.rows(); ++i)
    for (Eigen::Index j = 0; j < g.rows(); ++j) {
      const Eigen::Index row = i * g.rows() + j;
      out.beta(row) = f.beta(i) * g.beta(j);
      for (int p = 1; p <= f.order; ++p) {
        const auto fp = f.alpha.row(i).segment(f.offset(p), f.block_size(p));
        out.alpha.row(row).segment(out.offset(p), out.block_size(p)) += g.beta(j) * fp;
        for (int q = 1; q <= g.order; ++q) {
          const auto gq = g.alpha.row(j).segment(g.offset(q), g.block_size(q));
          out.alpha.row(row).segment(out.offset(p + q), out.block_size(p + q)) += kron(fp, gq);
        }
      }
      for (int q = 1; q <= g.order; ++q)
        out.alpha.row(row).segment(out.offset(q), out.block_size(q)) +=
            f.beta(i) * g.alpha.row(j).segment(g.offset(q), g.block_size(q));
    }
  return out;
}

PolyCoeffs operator-(const PolyCoeffs& f, const PolyCoeffs& g) {
  if (f.n != g.n || f.rows() != g.rows()) throw DimensionError("polynomial difference: shape mismatch");
  const PolyCoeffs& big = f.order >= g.order ? f : g;
  PolyCoeffs out = zero_poly(f.rows(), f.n, big.order);
  out.alpha.leftCols(f.alpha.cols()) += f.alpha;
  out.alpha.leftCols(g.alpha.cols()) -= g.alpha;
  out.beta = f.beta - g.beta;
  return out;
}

double evaluate_monomials(const PolyCoeffs& f, Eigen::Index row, const Vec& x) {
  double sum = f.beta(row);
  for (int q = 1; q <= f.order; ++q) {
    const Eigen::Index size = f.block_size(q), off = f.offset(q);
    for (Eigen::Index idx = 0; idx < size; ++idx) {
      const double c = f.alpha(row, off + idx);
      if (c == 0.0) continue;
      double mono = 1.0;
      Eigen::Index rem = idx;
      for (int i = 0; i < q; ++i) {
        mono *= x(rem % f.n);
        rem /= f.n;
      }
      sum += c * mono;
    }
  }
  return sum;
}

}  // namespace pssm
