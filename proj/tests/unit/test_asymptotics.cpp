#include "generators.hpp"
#include "pssm/asymptotics.hpp"
#include "pssm/models/heston.hpp"
#include "pssm/models/iid_gaussian.hpp"
#include "pssm/models/ou.hpp"

#include <doctest.h>

#include <cmath>

using namespace pssm;

namespace {

// Scalar chain Y' = b + φY + N with E[N²] = s2, written as an augmented model of dimension 1.
AugmentedModel scalar_chain(double b, double phi, double s2) {
  AugmentedModel aug;
  aug.n = 1;
  aug.d = 1;
  aug.abar = Vec::Constant(1, b);
  aug.Abar = Mat::Constant(1, 1, phi);
  aug.Pi = Mat::Constant(1, 1, 2.0 * b * phi);
  aug.O = Mat::Constant(1, 1, phi * phi);
  aug.abar2 = (Vec(2) << b, b * b + s2).finished();
  aug.Abar2 = (Mat(2, 2) << phi, 0.0, 2.0 * b * phi, phi * phi).finished();
  return aug;
}

class SecondOrderOnly : public gen::LinearGaussianModel {
 public:
  using gen::LinearGaussianModel::LinearGaussianModel;
  int max_noise_order() const override { return 2; }
};

}  // namespace

TEST_SUITE("asymptotics") {
  TEST_CASE("i.i.d. Gaussian chain") {
    const IidGaussianModel model(2.0);
    const ExplicitResult r = explicit_covariance(model, Vec::Constant(1, 0.3));
    CHECK(r.report.W(0, 0) == doctest::Approx(-0.5).epsilon(1e-8));
    CHECK(r.report.U(0, 0) == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(r.report.V(0, 0) == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(r.report.W_invertible);
  }

  TEST_CASE("Poisson equation for a scalar chain") {
    const AugmentedModel aug = scalar_chain(1.0, 0.5, 1.0);
    // Stationary mean 2 and second moment 4 + 4/3.
    PolyCoeffs f = zero_poly(1, 1, 2);
    f.alpha << 1.0, 1.0;
    f.beta << -(2.0 + 4.0 + 4.0 / 3.0);
    const PoissonSolution p = solve_poisson(f, aug);
    CHECK(p.g.alpha(0, 1) == doctest::Approx(-4.0 / 3.0).epsilon(1e-14));
    CHECK(p.g.alpha(0, 0) == doctest::Approx(-14.0 / 3.0).epsilon(1e-14));
    CHECK(p.alpha_residual <= 1e-12);
    CHECK(p.beta_residual <= 1e-12);
    for (double y : {-1.0, 0.0, 0.7, 3.0}) {
      const Vec x = Vec::Constant(1, y);
      CHECK(p.h.evaluate(x)(0) - p.g.evaluate(x)(0) == doctest::Approx(f.evaluate(x)(0)).epsilon(1e-12));
    }
  }

  TEST_CASE("Poisson residuals and contraction on the example models") {
    const HestonModel heston;
    const OuModel ou;
    for (const auto& [model, th] : std::vector<std::pair<const Model*, Vec>>{{&heston, HestonModel::reference_theta()},
                                                                             {&ou, OuModel::reference_theta()}}) {
      const ExplicitResult r = explicit_covariance(*model, th);
      CHECK(r.diagnostics.poisson_alpha_residual <= 1e-10);
      CHECK(r.diagnostics.poisson_beta_residual <= 1e-10);
      CHECK(r.diagnostics.rho_Abar < 1.0);
      CHECK(r.diagnostics.rho_O < 1.0);
      CHECK(r.report.W_invertible);
      Eigen::SelfAdjointEigenSolver<Mat> es(r.report.V);
      CHECK(es.eigenvalues().minCoeff() > 0.0);
    }
  }

  TEST_CASE("score polynomial agrees with the homogeneous score") {
    const HestonModel model;
    const Vec th = HestonModel::reference_theta();
    const LimitCoefficients lc = limit_coefficients(model, th, 1);
    const ScorePolys sp = score_limit_polys(lc);
    Rng rng(61);
    for (int trial = 0; trial < 10; ++trial) {
      const Vec xbar = 0.1 * gen::vector(rng, (2 + lc.k) * lc.d);
      std::vector<Vec> V;
      for (Eigen::Index j = 0; j < lc.k; ++j) V.push_back(xbar.segment((2 + j) * lc.d, lc.d));
      const Vec want = homogeneous_score(lc, xbar.head(lc.d), xbar.segment(lc.d, lc.d), V);
      CHECK((sp.f.evaluate(xbar) - want).norm() <= 1e-10 * (1.0 + want.norm()));
    }
  }

  TEST_CASE("covariance report and confidence intervals") {
    const CovarianceReport id = covariance_report(-Mat::Identity(2, 2), Mat::Identity(2, 2));
    CHECK(id.V.isApprox(Mat::Identity(2, 2)));
    CHECK(id.std.isApprox(Vec::Ones(2)));
    const CovarianceReport one = covariance_report(-Mat::Identity(1, 1), Mat::Identity(1, 1));
    const std::vector<Interval> ci = confidence_interval(one, Vec::Zero(1), 100.0, 0.95);
    CHECK(ci[0].upper == doctest::Approx(0.19600).epsilon(1e-4));
    CHECK(ci[0].lower == doctest::Approx(-0.19600).epsilon(1e-4));
    const CovarianceReport sing = covariance_report(Mat::Zero(2, 2), Mat::Identity(2, 2));
    CHECK_FALSE(sing.W_invertible);
    CHECK_FALSE(sing.flags.empty());
  }

  TEST_CASE("property: sandwich covariance is invariant under state rescaling") {
    HestonModel::Options opts;
    opts.dt = 1.0 / 50.0;
    const auto plain = std::make_shared<HestonModel>(opts);
    const Vec th = HestonModel::reference_theta();
    const Mat V0 = explicit_covariance(*plain, th).report.V;
    Rng rng(62);
    for (int trial = 0; trial < 3; ++trial) {
      Vec scale(3);
      for (int i = 0; i < 3; ++i) scale(i) = std::exp(2.0 * rng.uniform() - 1.0);
      const ScaledModel scaled(plain, scale);
      CHECK(gen::rel_err(explicit_covariance(scaled, th).report.V, V0) <= 1e-6);
    }
    CHECK(gen::rel_err(explicit_covariance(*heston_scaled(opts), th).report.V, V0) <= 1e-6);
  }

  TEST_CASE("explicit U needs fourth-order noise moments") {
    const auto base = gen::hidden_ar1();
    const SecondOrderOnly model(
        2, 1, base->param_space(), [&](const Vec& t) { return base->transition_vector(t); },
        [&](const Vec& t) { return base->transition_matrix(t); },
        [&](const Vec& t) { return unvec(base->noise_moments(t, 2).coeff(2, 0).col(0), 2, 2); },
        base->initial_law(Vec::Zero(2)));
    const Vec th = (Vec(2) << 0.6, 0.5).finished();
    CHECK_NOTHROW(explicit_W(model, th));
    CHECK_THROWS_AS(explicit_U(model, th), MethodUnavailableError);
  }

  TEST_CASE("empirical W is the averaged observed Fisher information") {
    const IidGaussianModel model(2.0);
    Rng rng(63);
    const Mat x = gen::matrix(rng, 30, 1);
    const PassResult f = fisher_pass(model, Vec::Constant(1, 0.0), x);
    CHECK(gen::rel_err(empirical_W(f, 30), Mat(f.dZ / 30.0)) <= 1e-14);
  }

  TEST_CASE("empirical covariance approaches the explicit one on a hidden AR(1)") {
    const auto model = gen::hidden_ar1();
    const Vec th = (Vec(2) << 0.6, 0.5).finished();
    const Mat V = explicit_covariance(*model, th).report.V;
    Rng rng(64);
    const Mat states = gen::simulate(*model, th, 40000, rng);
    const EmpiricalResult e = empirical_covariance(*model, th, states.rightCols(1));
    const EmpiricalResult el = empirical_covariance(*model, th, states.rightCols(1), &states);
    for (int i = 0; i < 2; ++i) {
      CHECK(e.report.V(i, i) == doctest::Approx(V(i, i)).epsilon(0.15));
      CHECK(el.report.V(i, i) == doctest::Approx(V(i, i)).epsilon(0.15));
    }
  }
}
