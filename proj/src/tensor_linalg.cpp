#include "pssm/tensor_linalg.hpp"
#include "pssm/tensor.hpp"

#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>

namespace pssm {

namespace {

void require_square(const Mat& a, const char* what) {
  if (a.rows() != a.cols()) throw DimensionError(std::string(what) + ": matrix must be square");
}

// Padé coefficients b_0..b_13 (Higham 2005).
constexpr std::array<double, 14> kPade13 = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                            1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                            670442572800.0,      33522128640.0,       1323241920.0,
                                            40840800.0,          960960.0,            16380.0,
                                            182.0,               1.0};

Mat pade_low(const Mat& a, int m) {
  static const std::array<std::array<double, 10>, 4> coeff = {{
      {120.0, 60.0, 12.0, 1.0},
      {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0},
      {17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0},
      {17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0, 2162160.0, 110880.0, 3960.0, 90.0, 1.0},
  }};
  const auto& b = coeff[(m - 3) / 2];
  const Eigen::Index n = a.rows();
  const Mat id = Mat::Identity(n, n);
  const Mat a2 = a * a;
  Mat power = id;
  Mat u = b[1] * id, v = b[0] * id;
  for (int k = 1; 2 * k <= m; ++k) {
    power = power * a2;
    v += b[2 * k] * power;
    if (2 * k + 1 <= m) u += b[2 * k + 1] * power;
  }
  u = a * u;
  return (v - u).partialPivLu().solve(v + u);
}

}  // namespace

Mat expm(const Mat& a) {
  require_square(a, "expm");
  const Eigen::Index n = a.rows();
  if (n == 0) return a;
  if (!a.allFinite()) throw DimensionError("expm: non-finite input");
  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  static const std::array<std::pair<int, double>, 4> theta = {
      {{3, 1.495585217958292e-2}, {5, 2.539398330063230e-1}, {7, 9.504178996162932e-1}, {9, 2.097847961257068e0}}};
  for (const auto& [m, th] : theta)
    if (norm1 <= th) return pade_low(a, m);

  constexpr double theta13 = 5.371920351148152;
  int s = norm1 > theta13 ? static_cast<int>(std::ceil(std::log2(norm1 / theta13))) : 0;
  const Mat x = a / std::ldexp(1.0, s);
  const Mat id = Mat::Identity(n, n);
  const Mat x2 = x * x, x4 = x2 * x2, x6 = x4 * x2;
  const auto& b = kPade13;
  Mat u = x * (x6 * (b[13] * x6 + b[11] * x4 + b[9] * x2) + b[7] * x6 + b[5] * x4 + b[3] * x2 + b[1] * id);
  Mat v = x6 * (b[12] * x6 + b[10] * x4 + b[8] * x2) + b[6] * x6 + b[4] * x4 + b[2] * x2 + b[0] * id;
  Mat r = (v - u).partialPivLu().solve(v + u);
  for (int i = 0; i < s; ++i) r = r * r;
  return r;
}

double spectral_radius(const Mat& a) {
  require_square(a, "spectral_radius");
  if (a.rows() == 0) return 0.0;
  Eigen::EigenSolver<Mat> es(a, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Mat solve_stein(const Mat& a, const Mat& c, const SteinOptions& opts) {
  require_square(a, "solve_stein");
  if (c.rows() != a.rows() || c.cols() != a.cols()) throw DimensionError("solve_stein: C does not match A");
  const Eigen::Index d = a.rows();
  const double rho = spectral_radius(a);
  if (rho >= 1.0) throw NonContractiveError("solve_stein: spectral radius " + std::to_string(rho) + " >= 1");
  if (d * d <= opts.direct_limit) {
    const Mat lhs = Mat::Identity(d * d, d * d) - kron(a, a);
    const Vec sol = lhs.partialPivLu().solve(vec(c));
    return unvec(sol, d, d);
  }
  const double steps = rho > 0.0 ? 10.0 * std::log(1e-14) / std::log(rho) : 10.0;
  const long max_iter = static_cast<long>(std::min(1e7, std::max(10.0, steps)));
  Mat lambda = c;
  for (long it = 0; it < max_iter; ++it) {
    Mat next = a * lambda * a.transpose() + c;
    const double change = (next - lambda).norm();
    lambda = std::move(next);
    if (change < opts.tol * (1.0 + lambda.norm())) break;
  }
  return lambda;
}

SymSolveResult sym_solve(const Mat& a, const Mat& b) {
  require_square(a, "sym_solve");
  if (b.rows() != a.rows()) throw DimensionError("sym_solve: right-hand side does not match");
  const double scale = a.norm();
  if ((a - a.transpose()).norm() > 1e-10 * (1.0 + scale)) throw DimensionError("sym_solve: matrix is not symmetric");
  SymSolveResult out;
  // Jacobi equilibration: components with very different magnitudes must not look degenerate.
  Vec d = Vec::Ones(a.rows());
  if (a.rows() > 0 && a.diagonal().minCoeff() > 0.0) d = a.diagonal().cwiseSqrt().cwiseInverse();
  const Mat as = d.asDiagonal() * symmetrize(a) * d.asDiagonal();
  const Mat bs = d.asDiagonal() * b;
  const double shift = -2.0 * d.array().log().sum();
  const double tol = 1e-12 * as.norm();
  Eigen::LLT<Mat> llt(as);
  if (llt.info() == Eigen::Success && a.rows() > 0) {
    const Vec diag = llt.matrixLLT().diagonal();
    if (diag.minCoeff() > 0.0 && diag.cwiseAbs2().minCoeff() >= tol) {
      out.solution = d.asDiagonal() * llt.solve(bs);
      out.logdet = 2.0 * diag.array().log().sum() + shift;
      out.rank = a.rows();
      return out;
    }
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(as);
  const Vec& ev = es.eigenvalues();
  Vec inv = Vec::Zero(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (std::abs(ev(i)) > tol && ev(i) != 0.0) {
      inv(i) = 1.0 / ev(i);
      out.logdet += std::log(std::abs(ev(i)));
      ++out.rank;
    }
  }
  if (out.rank == a.rows()) out.logdet += shift;
  out.degenerate = out.rank < a.rows() || ev.minCoeff() <= 0.0;
  out.solution = d.asDiagonal() * (es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose() * bs);
  return out;
}

double logdet(const Mat& a) { return sym_solve(a, Mat::Zero(a.rows(), 0)).logdet; }

SymSolveResult sym_inverse(const Mat& a) { return sym_solve(a, Mat::Identity(a.rows(), a.rows())); }

Vec kron_apply(const KronOperator& op, const Vec& v) {
  require_square(op.factor, "kron_apply");
  if (op.power < 1) throw DimensionError("kron_apply: power must be at least 1");
  const Eigen::Index d = op.factor.rows();
  Eigen::Index len = 1;
  for (int j = 0; j < op.power; ++j) len *= d;
  if (v.size() != len) throw DimensionError("kron_apply: vector length is not d^j");
  Tensor t(std::vector<Eigen::Index>(op.power, d), v);
  for (int axis = 0; axis < op.power; ++axis) t = mode_product(t, axis, op.factor);
  return t.data();
}

}  // namespace pssm
