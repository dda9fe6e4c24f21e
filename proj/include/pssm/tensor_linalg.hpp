#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace pssm {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NonContractiveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MethodUnavailableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BlockPartition {
  Eigen::Index row_block = 1;
  Eigen::Index col_block = 1;
};

// Kronecker product; the second factor runs over the fast index.
template <typename DA, typename DB>
DenseMatrix<typename DA::Scalar> kron(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
  const Eigen::Index br = b.rows(), bc = b.cols();
  DenseMatrix<typename DA::Scalar> out(a.rows() * br, a.cols() * bc);
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) out.block(i * br, j * bc, br, bc) = a(i, j) * b;
  return out;
}

// A ⊕ B = A ⊗ I_p + I_d ⊗ B, so that expm(A ⊕ B) = expm(A) ⊗ expm(B).
template <typename DA, typename DB>
DenseMatrix<typename DA::Scalar> kron_sum(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
  if (a.rows() != a.cols() || b.rows() != b.cols()) throw DimensionError("kron_sum: inputs must be square");
  using S = typename DA::Scalar;
  return kron(a, DenseMatrix<S>::Identity(b.rows(), b.rows())) + kron(DenseMatrix<S>::Identity(a.rows(), a.rows()), b);
}

template <typename D>
DenseVector<typename D::Scalar> vec(const Eigen::MatrixBase<D>& m) {
  DenseVector<typename D::Scalar> out(m.size());
  for (Eigen::Index j = 0; j < m.cols(); ++j) out.segment(j * m.rows(), m.rows()) = m.col(j);
  return out;
}

template <typename D>
DenseMatrix<typename D::Scalar> unvec(const Eigen::MatrixBase<D>& v, Eigen::Index rows, Eigen::Index cols) {
  if (v.size() != rows * cols) throw DimensionError("unvec: size mismatch");
  DenseMatrix<typename D::Scalar> out(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) out.col(j) = v.segment(j * rows, rows);
  return out;
}

// (x, x⊗x, ..., x^{⊗r})
template <typename D>
DenseVector<typename D::Scalar> stacked_kron(const Eigen::MatrixBase<D>& x, int r) {
  if (r < 1) throw DimensionError("stacked_kron: order must be at least 1");
  using S = typename D::Scalar;
  Eigen::Index total = 0, len = 1;
  for (int l = 1; l <= r; ++l) total += (len *= x.size());
  DenseVector<S> out(total);
  DenseVector<S> power = x;
  Eigen::Index pos = 0;
  for (int l = 1; l <= r; ++l) {
    out.segment(pos, power.size()) = power;
    pos += power.size();
    if (l < r) power = kron(power, x);
  }
  return out;
}

inline Eigen::Index stacked_length(Eigen::Index d, int r) {
  Eigen::Index total = 0, len = 1;
  for (int l = 1; l <= r; ++l) total += (len *= d);
  return total;
}

// Block (i,j) of the result holds the grid (A_ij ⊗ B_kl)_{kl}.
template <typename DA, typename DB>
DenseMatrix<typename DA::Scalar> tracy_singh(const Eigen::MatrixBase<DA>& a, BlockPartition pa,
                                             const Eigen::MatrixBase<DB>& b, BlockPartition pb) {
  if (pa.row_block <= 0 || pa.col_block <= 0 || pb.row_block <= 0 || pb.col_block <= 0 ||
      a.rows() % pa.row_block || a.cols() % pa.col_block || b.rows() % pb.row_block || b.cols() % pb.col_block)
    throw DimensionError("tracy_singh: partition does not divide the matrix");
  const Eigen::Index mr = pa.row_block, nc = pa.col_block, pr = pb.row_block, qc = pb.col_block;
  const Eigen::Index rows_sub = mr * pr, cols_sub = nc * qc;
  const Eigen::Index rows_super = mr * b.rows(), cols_super = nc * b.cols();
  DenseMatrix<typename DA::Scalar> out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows() / mr; ++i)
    for (Eigen::Index j = 0; j < a.cols() / nc; ++j)
      for (Eigen::Index k = 0; k < b.rows() / pr; ++k)
        for (Eigen::Index l = 0; l < b.cols() / qc; ++l)
          out.block(i * rows_super + k * rows_sub, j * cols_super + l * cols_sub, rows_sub, cols_sub) =
              kron(a.block(i * mr, j * nc, mr, nc), b.block(k * pr, l * qc, pr, qc));
  return out;
}

Mat expm(const Mat& a);

double spectral_radius(const Mat& a);

struct SteinOptions {
  Eigen::Index direct_limit = 4096;
  double tol = 1e-12;
};

Mat solve_stein(const Mat& a, const Mat& c, const SteinOptions& opts = {});

struct SymSolveResult {
  Mat solution;
  double logdet = 0.0;
  bool degenerate = false;
  Eigen::Index rank = 0;
};

SymSolveResult sym_solve(const Mat& a, const Mat& b);
double logdet(const Mat& a);
// Inverse (or pseudoinverse) of a symmetric matrix with the same diagnostics.
SymSolveResult sym_inverse(const Mat& a);

struct KronOperator {
  Mat factor;
  int power = 1;
};

Vec kron_apply(const KronOperator& op, const Vec& v);

inline Mat symmetrize(const Mat& a) { return 0.5 * (a + a.transpose()); }

}  // namespace pssm
