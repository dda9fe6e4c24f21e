#include "generators.hpp"
#include "pssm/score_fisher.hpp"
#include "pssm/models/heston.hpp"
#include "pssm/models/iid_gaussian.hpp"
#include "pssm/models/ou.hpp"

#include <doctest.h>

using namespace pssm;

namespace {

double loglik(const Model& model, const Vec& theta, const Mat& data) { return quasi_loglik(model, theta, data, false).loglik; }

Vec fd_gradient(const Model& model, const Vec& theta, const Mat& data, double h) {
  Vec g(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    Vec up = theta, dn = theta;
    up(i) += h;
    dn(i) -= h;
    g(i) = (loglik(model, up, data) - loglik(model, dn, data)) / (2 * h);
  }
  return g;
}

Mat fd_jacobian_of_score(const Model& model, const Vec& theta, const Mat& data, double h) {
  Mat J(theta.size(), theta.size());
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    Vec up = theta, dn = theta;
    up(j) += h;
    dn(j) -= h;
    J.col(j) = (score_pass(model, up, data).Z - score_pass(model, dn, data).Z) / (2 * h);
  }
  return J;
}

void check_derivatives(const Model& model, const Vec& theta, const Mat& data) {
  const PassResult f = fisher_pass(model, theta, data);
  const PassResult s = score_pass(model, theta, data);
  CHECK(f.loglik == doctest::Approx(loglik(model, theta, data)).epsilon(1e-12));
  CHECK(gen::rel_err(s.Z, f.Z) <= 1e-12);
  CHECK(gen::rel_err(f.Z, fd_gradient(model, theta, data, 1e-5)) <= 1e-5);
  CHECK(gen::rel_err(f.dZ, fd_jacobian_of_score(model, theta, data, 1e-5)) <= 1e-4);
  CHECK((f.dZ - f.dZ.transpose()).norm() <= 1e-8 * f.dZ.norm());
}

}  // namespace

TEST_SUITE("score_fisher") {
  TEST_CASE("i.i.d. Gaussian score and Fisher information") {
    const IidGaussianModel model(2.0);
    const Vec x = (Vec(5) << 0.3, -1.1, 2.0, 0.7, 0.4).finished();
    const Vec th = Vec::Constant(1, 0.25);
    const PassResult r = fisher_pass(model, th, Mat(x));
    CHECK(r.Z(0) == doctest::Approx((x.array() - 0.25).sum() / 2.0).epsilon(1e-7));
    CHECK(r.dZ(0, 0) == doctest::Approx(-5.0 / 2.0).epsilon(1e-7));
  }

  TEST_CASE("i.i.d. Gaussian with estimated variance") {
    const IidGaussianModel model(1.0, true);
    Rng rng(51);
    const Mat x = gen::matrix(rng, 40, 1);
    const Vec th = (Vec(2) << 0.1, 1.3).finished();
    const PassResult r = fisher_pass(model, th, x);
    const double s2 = 1.3, T = 40.0;
    const double sum = (x.array() - 0.1).sum(), ss = (x.array() - 0.1).square().sum();
    CHECK(r.Z(0) == doctest::Approx(sum / s2).epsilon(1e-7));
    CHECK(r.Z(1) == doctest::Approx(-0.5 * T / s2 + 0.5 * ss / (s2 * s2)).epsilon(1e-7));
    CHECK(r.dZ(0, 0) == doctest::Approx(-T / s2).epsilon(1e-7));
    CHECK(r.dZ(0, 1) == doctest::Approx(-sum / (s2 * s2)).epsilon(1e-7));
    CHECK(r.dZ(1, 1) == doctest::Approx(0.5 * T / (s2 * s2) - ss / (s2 * s2 * s2)).epsilon(1e-7));
  }

  TEST_CASE("property: score and Fisher match finite differences on the Heston model") {
    const HestonModel model;
    const Vec th = HestonModel::reference_theta();
    for (std::uint64_t stream = 0; stream < 3; ++stream)
      check_derivatives(model, th, heston_simulate(th, 50, 7, {}, stream).observations());
  }

  TEST_CASE("property: score and Fisher match finite differences on the OU model") {
    const OuModel model;
    const Vec th = OuModel::reference_theta();
    OuSimOptions so;
    so.mesh = 1.0 / 500.0;
    for (std::uint64_t stream = 0; stream < 3; ++stream)
      check_derivatives(model, th, ou_simulate(th, 50, 8, so, stream).observations());
  }

  TEST_CASE("property: score and Fisher match finite differences on random hidden AR(1) paths") {
    Rng rng(52);
    const auto model = gen::hidden_ar1();
    for (int trial = 0; trial < 5; ++trial) {
      const Vec th = (Vec(2) << -0.8 + 1.6 * rng.uniform(), 0.2 + 2.0 * rng.uniform()).finished();
      const Mat data = gen::simulate(*model, th, 60, rng).rightCols(1);
      check_derivatives(*model, th, data);
    }
  }

  TEST_CASE("limit coefficients are the long-run values of the recursions") {
    const HestonModel model;
    const Vec th = HestonModel::reference_theta();
    const LimitCoefficients lc = limit_coefficients(model, th, 2);
    CHECK(lc.converged);
    CHECK(spectral_radius(lc.F) < 1.0);
    PassOptions po;
    po.keep_states = true;
    const PassResult r = fisher_pass(model, th, heston_simulate(th, 300, 9).observations(), po);
    const ScoreState& s = r.score_states.back();
    const FisherState& f = r.fisher_states.back();
    for (Eigen::Index j = 0; j < lc.k; ++j) {
      CHECK(gen::rel_err(s.S_pred[j], lc.S[j]) <= 1e-8);
      CHECK(gen::rel_err(s.N[j], lc.N[j]) <= 1e-8);
    }
    CHECK(gen::rel_err(f.mu, lc.mu) <= 1e-8);
    CHECK(gen::rel_err(r.filter_states.back().P_pred, lc.P) <= 1e-10);
  }

  TEST_CASE("homogeneous score reproduces the score increment at the steady state") {
    const auto model = gen::hidden_ar1();
    const Vec th = (Vec(2) << 0.6, 0.5).finished();
    const LimitCoefficients lc = limit_coefficients(*model, th, 1);
    Rng rng(53);
    const Mat data = gen::simulate(*model, th, 200, rng);
    PassOptions po;
    po.keep_trajectory = true;
    const PassResult r = score_pass(*model, th, data.rightCols(1), po);
    const Trajectory& tr = r.trajectory;
    // Far from the start the recursions are homogeneous to machine precision.
    for (long t = 150; t <= 200; t += 10) {
      std::vector<Vec> V;
      for (Eigen::Index j = 0; j < lc.k; ++j) V.push_back(tr.v_pred.row(t).segment(j * 2, 2).transpose());
      const Vec z = homogeneous_score(lc, data.row(t - 1).transpose(), tr.x_pred.row(t).transpose(), V);
      CHECK(gen::rel_err(z, tr.z_inc.row(t).transpose()) <= 1e-8);
    }
  }
}
