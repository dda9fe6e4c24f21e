#pragma once

#include "pssm/tensor_linalg.hpp"

#include <vector>

namespace pssm {

// k-dimensional polynomial f(x) = alpha·vec_{⊗r}(x) + beta on ℝ^n.
struct PolyCoeffs {
  int order = 1;
  Eigen::Index n = 0;
  Mat alpha;
  Vec beta;

  Eigen::Index rows() const { return beta.size(); }
  // Columns of alpha multiplying x^{⊗q}.
  Eigen::Index offset(int q) const;
  Eigen::Index block_size(int q) const;

  Vec evaluate(const Vec& x) const;
  // E f(X) given moments[q] = E[X^{⊗q}] for q = 1..order.
  Vec expectation(const std::vector<Vec>& moments) const;
};

PolyCoeffs zero_poly(Eigen::Index rows, Eigen::Index n, int order);

// Row (i,j) ↦ f_i g_j, as a polynomial of order f.order + g.order; rows ordered i*g.rows()+j.
PolyCoeffs outer_product(const PolyCoeffs& f, const PolyCoeffs& g);

PolyCoeffs operator-(const PolyCoeffs& f, const PolyCoeffs& g);

// Direct monomial evaluation of one row, summing alpha entries times products of coordinates.
double evaluate_monomials(const PolyCoeffs& f, Eigen::Index row, const Vec& x);

}  // namespace pssm
