#include "generators.hpp"
#include "pssm/tensor.hpp"

#include <doctest.h>

#include <cmath>

using namespace pssm;

TEST_SUITE("tensor_linalg") {
  TEST_CASE("kron of small matrices") {
    CHECK(kron(Mat::Identity(2, 2), Mat::Identity(2, 2)).isApprox(Mat::Identity(4, 4)));
    Mat a(2, 2), b(2, 2), want(4, 4);
    a << 1, 2, 3, 4;
    b << 0, 1, 1, 0;
    want << 0, 1, 0, 2, 1, 0, 2, 0, 0, 3, 0, 4, 3, 0, 4, 0;
    CHECK(kron(a, b) == want);
  }

  TEST_CASE("vec of an outer product is the reversed Kronecker product") {
    const Vec x = (Vec(2) << 1, 2).finished(), y = (Vec(2) << 3, 4).finished();
    const Vec want = (Vec(4) << 3, 6, 4, 8).finished();
    CHECK(kron(y, x) == want);
    CHECK(vec(Mat(x * y.transpose())) == want);
  }

  TEST_CASE("vec layout") {
    Mat m(2, 2);
    m << 1, 2, 3, 4;
    CHECK(vec(m) == (Vec(4) << 1, 3, 2, 4).finished());
    CHECK(vec(Mat(Mat::Identity(2, 2))) == (Vec(4) << 1, 0, 0, 1).finished());
    CHECK(unvec(vec(m), 2, 2) == m);
  }

  TEST_CASE("property: (A⊗B)vec(C) = vec(BCAᵀ)") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
      const Mat A = gen::matrix(rng, 2, 2), B = gen::matrix(rng, 2, 2), C = gen::matrix(rng, 2, 2);
      CHECK((kron(A, B) * vec(C) - vec(Mat(B * C * A.transpose()))).norm() <= 1e-12 * (1 + kron(A, B).norm() * C.norm()));
    }
  }

  TEST_CASE("property: mixed product rule") {
    Rng rng(12);
    for (int trial = 0; trial < 30; ++trial) {
      const Mat A = gen::matrix(rng, 2, 3), B = gen::matrix(rng, 3, 2), C = gen::matrix(rng, 3, 2), D = gen::matrix(rng, 2, 3);
      CHECK(gen::rel_err(kron(A, B) * kron(C, D), kron(Mat(A * C), Mat(B * D))) <= 1e-12);
    }
  }

  TEST_CASE("kron_sum") {
    CHECK(kron_sum(Mat::Constant(1, 1, 2.0), Mat::Constant(1, 1, 3.0))(0, 0) == 5.0);
    CHECK(kron_sum(Mat::Zero(2, 2), Mat::Zero(2, 2)).isZero(0.0));
    Rng rng(13);
    for (int trial = 0; trial < 30; ++trial) {
      const Mat A = gen::matrix(rng, 2, 2), B = gen::matrix(rng, 2, 2);
      CHECK(gen::rel_err(expm(kron_sum(A, B)), kron(expm(A), expm(B))) <= 1e-10);
    }
    CHECK_THROWS_AS(kron_sum(Mat::Zero(2, 3), Mat::Zero(2, 2)), DimensionError);
  }

  TEST_CASE("stacked_kron") {
    CHECK(stacked_kron(Vec::Constant(1, 2.0), 3) == (Vec(3) << 2, 4, 8).finished());
    CHECK(stacked_kron((Vec(2) << 1, 0).finished(), 2) == (Vec(6) << 1, 0, 1, 0, 0, 0).finished());
    CHECK(stacked_length(3, 4) == 120);
    CHECK(stacked_kron(Vec::Ones(3), 4).size() == 120);
  }

  TEST_CASE("tracy_singh") {
    Mat a(2, 2), b(2, 2), want(4, 4);
    a << 1, 2, 3, 4;
    b << 5, 6, 7, 8;
    want << 5, 6, 10, 12, 7, 8, 14, 16, 15, 18, 20, 24, 21, 24, 28, 32;
    CHECK(tracy_singh(a, {1, 1}, b, {1, 1}) == want);
    Rng rng(14);
    const Mat A = gen::matrix(rng, 4, 4), B = gen::matrix(rng, 4, 4);
    CHECK(tracy_singh(A, {4, 4}, B, {4, 4}) == kron(A, B));
    // 2×2 blocks: block (i,j) of the result is the grid (A_ij ⊗ B_kl)_{kl}.
    const Mat ts = tracy_singh(A, {2, 2}, B, {2, 2});
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k)
          for (int l = 0; l < 2; ++l)
            CHECK(ts.block(i * 8 + k * 4, j * 8 + l * 4, 4, 4) ==
                  kron(Mat(A.block(2 * i, 2 * j, 2, 2)), Mat(B.block(2 * k, 2 * l, 2, 2))));
    CHECK_THROWS_AS(tracy_singh(A, {3, 3}, B, {2, 2}), DimensionError);
  }

  TEST_CASE("expm") {
    CHECK(expm(Mat::Zero(3, 3)).isApprox(Mat::Identity(3, 3)));
    const Mat d = expm(Vec((Vec(2) << 1, -1).finished()).asDiagonal().toDenseMatrix());
    CHECK(d(0, 0) == doctest::Approx(std::exp(1.0)).epsilon(1e-14));
    CHECK(d(1, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
    Mat q(2, 2);
    q << 1, 0, -0.5, 0.5;
    const Mat e = expm(-q);
    CHECK(e(0, 0) == doctest::Approx(0.367879).epsilon(1e-6));
    CHECK(e(0, 1) == 0.0);
    CHECK(e(1, 0) == doctest::Approx(0.5 * (std::exp(-0.5) - std::exp(-1.0)) / 0.5).epsilon(1e-13));
    CHECK(e(1, 0) == doctest::Approx(0.238651).epsilon(1e-6));
    CHECK(e(1, 1) == doctest::Approx(0.606531).epsilon(1e-6));
  }

  TEST_CASE("property: expm of symmetric matrices matches the eigen decomposition") {
    Rng rng(15);
    for (double scale : {0.01, 0.5, 3.0, 40.0}) {
      const Mat b = gen::matrix(rng, 4, 4);
      const Mat s = scale * (b + b.transpose()) / 2.0;
      Eigen::SelfAdjointEigenSolver<Mat> es(s);
      const Mat want = es.eigenvectors() * es.eigenvalues().array().exp().matrix().asDiagonal() * es.eigenvectors().transpose();
      CHECK(gen::rel_err(expm(s), want) <= 1e-11);
    }
  }

  TEST_CASE("spectral radius") {
    CHECK(spectral_radius(Vec((Vec(2) << 0.5, 0.3).finished()).asDiagonal().toDenseMatrix()) == doctest::Approx(0.5));
    Mat n(2, 2);
    n << 0, 1, 0, 0;
    CHECK(spectral_radius(n) == 0.0);
    Rng rng(16);
    for (int trial = 0; trial < 20; ++trial) {
      const Mat A = gen::matrix(rng, 3, 3);
      CHECK(spectral_radius(kron(A, A)) == doctest::Approx(std::pow(spectral_radius(A), 2)).epsilon(1e-8));
    }
  }

  TEST_CASE("solve_stein") {
    CHECK(solve_stein(Mat::Constant(1, 1, 0.5), Mat::Constant(1, 1, 1.0))(0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
    Rng rng(17);
    const Mat C = gen::spd(rng, 3);
    CHECK(solve_stein(Mat::Zero(3, 3), C).isApprox(C));
    CHECK_THROWS_AS(solve_stein(Mat::Identity(2, 2), Mat::Identity(2, 2)), NonContractiveError);
  }

  TEST_CASE("property: Stein residual, direct and iterative") {
    Rng rng(18);
    for (int trial = 0; trial < 40; ++trial) {
      const Eigen::Index d = 1 + trial % 5;
      const Mat A = gen::stable(rng, d, 0.2 + 0.7 * rng.uniform()), C = gen::spd(rng, d);
      for (Eigen::Index limit : {Eigen::Index(4096), Eigen::Index(0)}) {
        SteinOptions opts;
        opts.direct_limit = limit;
        const Mat L = solve_stein(A, C, opts);
        CHECK((L - A * L * A.transpose() - C).norm() <= 1e-10 * (1.0 + L.norm()));
      }
    }
  }

  TEST_CASE("sym_solve and logdet") {
    const Vec b = (Vec(2) << 1, 2).finished();
    CHECK(sym_solve(Mat::Identity(2, 2), b).solution == b);
    CHECK(logdet(Mat::Identity(3, 3)) == 0.0);
    CHECK(logdet(Vec((Vec(2) << 2, 3).finished()).asDiagonal().toDenseMatrix()) == doctest::Approx(std::log(6.0)).epsilon(1e-14));
    const SymSolveResult r = sym_solve(Vec((Vec(2) << 1, 0).finished()).asDiagonal().toDenseMatrix(), Vec::Ones(2));
    CHECK(r.degenerate);
    CHECK(r.rank == 1);
    CHECK((r.solution - (Vec(2) << 1, 0).finished()).norm() <= 1e-14);
    CHECK_THROWS_AS(sym_solve((Mat(2, 2) << 1, 2, 0, 1).finished(), b), DimensionError);
  }

  TEST_CASE("sym_solve on badly scaled but well-conditioned matrices") {
    Rng rng(19);
    for (int trial = 0; trial < 20; ++trial) {
      const Mat corr = gen::spd(rng, 4, 1.0);
      const Vec scale = (Vec(4) << 1.0, 1e-3, 1e-6, 1e-10).finished();
      const Mat a = scale.asDiagonal() * corr * scale.asDiagonal();
      // x = diag(scale)⁻¹ y keeps every component of a·x representable.
      const Vec y = gen::vector(rng, 4);
      const Vec x = y.cwiseQuotient(scale);
      const SymSolveResult r = sym_solve(a, Vec(scale.cwiseProduct(corr * y)));
      Eigen::SelfAdjointEigenSolver<Mat> es(corr);
      const double cond = es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff();
      CHECK_FALSE(r.degenerate);
      CHECK((r.solution - x).cwiseQuotient(x).cwiseAbs().maxCoeff() <= 1e-13 * cond);
      CHECK(r.logdet == doctest::Approx(std::log(a.determinant())).epsilon(1e-9));
    }
  }

  TEST_CASE("kron_apply") {
    Rng rng(20);
    const Mat A = gen::matrix(rng, 2, 2);
    const Vec v2 = gen::vector(rng, 2), v4 = gen::vector(rng, 4);
    CHECK((kron_apply({A, 1}, v2) - A * v2).norm() <= 1e-14);
    CHECK((kron_apply({A, 2}, v4) - kron(A, A) * v4).norm() <= 1e-12 * (1 + v4.norm()));
    const Vec v81 = gen::vector(rng, 81);
    CHECK(kron_apply({Mat::Identity(3, 3), 4}, v81) == v81);
    const Mat B = gen::matrix(rng, 3, 3);
    CHECK(gen::rel_err(kron_apply({B, 3}, Vec(v81.head(27))), kron(B, kron(B, B)) * v81.head(27)) <= 1e-12);
    CHECK_THROWS_AS(kron_apply({A, 2}, v2), DimensionError);
  }

  TEST_CASE("tensor mode product matches matrix products") {
    Rng rng(21);
    const Mat m = gen::matrix(rng, 3, 4), a = gen::matrix(rng, 2, 3), b = gen::matrix(rng, 5, 4);
    // Row-major storage of m is vec(mᵀ).
    const Tensor t({3, 4}, vec(Mat(m.transpose())));
    const Tensor left = mode_product(t, 0, a), right = mode_product(t, 1, b);
    CHECK(gen::rel_err(left.data(), vec(Mat((a * m).transpose()))) <= 1e-13);
    CHECK(gen::rel_err(right.data(), vec(Mat((m * b.transpose()).transpose()))) <= 1e-13);
  }
}
