#include "generators.hpp"
#include "pssm/model_core.hpp"
#include "pssm/models/heston.hpp"
#include "pssm/models/ou.hpp"

#include <doctest.h>

#include <cmath>

using namespace pssm;

namespace {

std::shared_ptr<gen::LinearGaussianModel> scalar_ar(double a, double A, double c, double x0) {
  ParamSpace box{Vec::Constant(1, -10.0), Vec::Constant(1, 10.0)};
  return std::make_shared<gen::LinearGaussianModel>(
      1, 0, box, [a](const Vec&) { return Vec(Vec::Constant(1, a)); }, [A](const Vec&) { return Mat(Mat::Constant(1, 1, A)); },
      [c](const Vec&) { return Mat(Mat::Constant(1, 1, c)); }, InitialLaw::dirac(Vec::Constant(1, x0)));
}

std::shared_ptr<gen::LinearGaussianModel> random_model(Rng& rng, Eigen::Index d) {
  const Vec a = gen::vector(rng, d);
  const Mat A = gen::stable(rng, d, 0.3 + 0.6 * rng.uniform()), C = gen::spd(rng, d);
  const Vec x0 = gen::vector(rng, d);
  ParamSpace box{Vec::Constant(1, -1.0), Vec::Constant(1, 1.0)};
  return std::make_shared<gen::LinearGaussianModel>(
      d, 0, box, [a](const Vec&) { return a; }, [A](const Vec&) { return A; }, [C](const Vec&) { return C; },
      InitialLaw::dirac(x0));
}

}  // namespace

TEST_SUITE("model_core") {
  TEST_CASE("order-r transition of a scalar model") {
    const auto m = scalar_ar(1.0, 0.5, 1.0, 0.0);
    const Vec th = Vec::Zero(1);
    const TransitionOrderR t1 = transition_order_r(*m, th, 1);
    CHECK(t1.a_r(0) == 1.0);
    CHECK(t1.materialize()(0, 0) == 0.5);
    const TransitionOrderR t2 = transition_order_r(*m, th, 2);
    CHECK(t2.a_r(0) == doctest::Approx(1.0));
    CHECK(t2.a_r(1) == doctest::Approx(2.0));
    const Mat A2 = t2.materialize();
    CHECK(A2(1, 0) == doctest::Approx(1.0));
    CHECK(A2(1, 1) == doctest::Approx(0.25));
    CHECK(A2(0, 1) == 0.0);
  }

  TEST_CASE("property: order-2 transition matches the moments of one step") {
    Rng rng(31);
    for (int trial = 0; trial < 10; ++trial) {
      const auto m = random_model(rng, 2);
      const Vec th = Vec::Zero(1), x = gen::vector(rng, 2);
      const Vec a = m->transition_vector(th);
      const Mat A = m->transition_matrix(th);
      const Mat C = m->noise_moments(th, 2).coeff(2, 0).reshaped(2, 2);
      const Vec mean = a + A * x;
      const Vec want = (Vec(6) << mean, kron(mean, mean) + vec(C)).finished();
      const TransitionOrderR t2 = transition_order_r(*m, th, 2);
      CHECK(gen::rel_err(t2.a_r + t2.apply(stacked_kron(x, 2)), want) <= 1e-12);
    }
  }

  TEST_CASE("Monte Carlo: OU order-2 transition") {
    const Vec th = OuModel::reference_theta();
    const Vec x = (Vec(2) << 0.4, -0.7).finished();
    OuModel::Options mo;
    mo.x0 = x;
    const OuModel model(mo);
    const TransitionOrderR t2 = transition_order_r(model, th, 2);
    const Vec want = t2.a_r + t2.apply(stacked_kron(x, 2));
    OuSimOptions so;
    so.x0 = x;
    so.mesh = 1.0 / 500.0;
    const int n = 4000;
    Vec sum = Vec::Zero(6), sum2 = Vec::Zero(6);
    for (int i = 0; i < n; ++i) {
      const SimulationResult s = ou_simulate(th, 1, 99 * 100000 + static_cast<std::uint64_t>(i), so);
      const Vec v = stacked_kron(Vec(s.states.row(0).transpose()), 2);
      sum += v;
      sum2 += v.cwiseAbs2();
    }
    const Vec mean = sum / n;
    const Vec se = ((sum2 / n - mean.cwiseAbs2()) / n).cwiseSqrt();
    for (int i = 0; i < 6; ++i) CHECK(std::abs(mean(i) - want(i)) <= 3.0 * se(i) + 1e-3);
  }

  TEST_CASE("moment paths") {
    const auto m = scalar_ar(1.0, 0.5, 1.0, 2.0);
    const Vec th = Vec::Zero(1);
    CHECK(moment_path(*m, th, 1, Vec::Constant(1, 2.0), 0)(0) == 2.0);
    CHECK(moment_path(*m, th, 1, Vec::Constant(1, 2.0), 2)(0) == doctest::Approx(2.0));
    CHECK(moment_path(*m, th, 2, Vec::Constant(1, 3.0), 0) == (Vec(2) << 3, 9).finished());
    const auto halving = scalar_ar(0.0, 0.5, 1.0, 8.0);
    CHECK(unconditional_moments(*halving, th, 1, 3)(0) == doctest::Approx(1.0));
  }

  TEST_CASE("property: moment path equals the n-fold recursion") {
    Rng rng(32);
    for (int trial = 0; trial < 10; ++trial) {
      const auto m = random_model(rng, 2);
      const Vec th = Vec::Zero(1), x = gen::vector(rng, 2);
      for (int r : {1, 2, 3}) {
        const TransitionOrderR t = transition_order_r(*m, th, r);
        Vec v = stacked_kron(x, r);
        for (int n = 0; n < 7; ++n) v = t.a_r + t.apply(v);
        CHECK(gen::rel_err(moment_path(*m, th, r, x, 7), v) <= 1e-12);
      }
    }
  }

  TEST_CASE("unconditional moments converge to the stationary ones") {
    Rng rng(33);
    for (int trial = 0; trial < 5; ++trial) {
      const auto m = random_model(rng, 2);
      const Vec th = Vec::Zero(1);
      if (spectral_radius(m->transition_matrix(th)) > 0.7) continue;
      CHECK(gen::rel_err(unconditional_moments(*m, th, 2, 200), stationary_moments(*m, th, 2)) <= 1e-8);
    }
  }

  TEST_CASE("stationary moments") {
    const auto m = scalar_ar(1.0, 0.5, 1.0, 0.0);
    const Vec th = Vec::Zero(1);
    CHECK(stationary_moments(*m, th, 1)(0) == doctest::Approx(2.0));
    const Vec s = stationary_moments(*m, th, 4);
    const double mu = s(0), var = 1.0 / 0.75;
    CHECK(s(1) - mu * mu == doctest::Approx(var).epsilon(1e-10));
    const double central4 = s(3) - 4 * mu * s(2) + 6 * mu * mu * s(1) - 3 * std::pow(mu, 4);
    CHECK(central4 == doctest::Approx(3 * var * var).epsilon(1e-8));
  }

  TEST_CASE("property: stationary covariance solves the Stein equation") {
    for (const Model* model : std::initializer_list<const Model*>{new OuModel(), new HestonModel()}) {
      const Vec th = model->name() == "heston" ? HestonModel::reference_theta() : OuModel::reference_theta();
      const Eigen::Index d = model->state_dim();
      const Vec s = stationary_moments(*model, th, 2);
      const Vec mu = s.head(d);
      const Mat cov = s.segment(d, d * d).reshaped(d, d) - mu * mu.transpose();
      const Mat A = model->transition_matrix(th), C = noise_cov_limit(*model, th);
      CHECK((cov - A * cov * A.transpose() - C).norm() <= 1e-10 * (1 + cov.norm()));
      delete model;
    }
  }

  TEST_CASE("noise covariances") {
    const auto iid = scalar_ar(0.3, 0.0, 2.0, 0.0);
    const Vec th = Vec::Zero(1);
    for (long t = 1; t <= 5; ++t) CHECK(noise_cov(*iid, th, t)(0, 0) == doctest::Approx(2.0));
    const OuModel ou;
    const Vec tho = OuModel::reference_theta();
    for (long t : {1L, 2L, 10L}) CHECK(gen::rel_err(noise_cov(ou, tho, t), ou.noise_cov_closed_form(tho)) <= 1e-10);
    CHECK(gen::rel_err(noise_cov_limit(ou, tho), ou.noise_cov_closed_form(tho)) <= 1e-10);
  }

  TEST_CASE("Monte Carlo: Heston C(1) from the Dirac start") {
    const Vec th = HestonModel::reference_theta();
    const HestonModel model;
    const Mat C1 = noise_cov(model, th, 1);
    HestonSimOptions so;
    so.inner_dt = 1.0 / 1000.0;
    const int n = 4000;
    Mat xs(n, 3);
    for (int i = 0; i < n; ++i) xs.row(i) = heston_simulate(th, 1, 5 * 100000 + static_cast<std::uint64_t>(i), so).states.row(0);
    const Vec mean = xs.colwise().mean();
    const Mat c = xs.rowwise() - mean.transpose();
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) {
        const Vec prod = c.col(i).cwiseProduct(c.col(j));
        const double est = prod.mean();
        const double se = std::sqrt((prod.array() - est).square().mean() / n);
        CHECK(std::abs(est - C1(i, j)) <= 3.0 * se + 1e-4 * std::abs(C1(i, j)));
      }
  }

  TEST_CASE("param_jet") {
    const Vec th = (Vec(2) << 0.3, -1.2).finished();
    const MatrixJet lin = param_jet([](const Vec& t) { return Mat(Mat::Constant(1, 1, 2 * t(0) - 3 * t(1))); }, th, 2);
    CHECK(lin.d1[0](0, 0) == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(lin.d1[1](0, 0) == doctest::Approx(-3.0).epsilon(1e-8));
    for (const Mat& h : lin.d2) CHECK(std::abs(h(0, 0)) <= 1e-6);
    const MatrixJet ex = param_jet([](const Vec& t) { return Mat(Mat::Constant(1, 1, std::exp(-t(0)))); }, Vec::Ones(1), 2);
    CHECK(ex.d1[0](0, 0) == doctest::Approx(-std::exp(-1.0)).epsilon(1e-8));
    CHECK(ex.d2[0](0, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-5));
  }

  TEST_CASE("param_jet on the OU transition matrix against its closed form") {
    const OuModel ou;
    const Vec th = OuModel::reference_theta();
    const double l = th(0), k = th(1);
    const MatrixJet jet = param_jet([&](const Vec& t) { return ou.transition_matrix(t); }, th, 1, &ou.param_space());
    const double el = std::exp(-l), ek = std::exp(-k);
    Mat dl = Mat::Zero(2, 2), dk = Mat::Zero(2, 2);
    dl(0, 0) = -el;
    dl(1, 0) = k * (el * (l - k) - (ek - el)) / ((l - k) * (l - k));
    dk(1, 1) = -ek;
    dk(1, 0) = ((ek - el) + k * (-ek)) / (l - k) + k * (ek - el) / ((l - k) * (l - k));
    CHECK((jet.d1[0] - dl).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK((jet.d1[1] - dk).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(jet.d1[2].cwiseAbs().maxCoeff() <= 1e-6);
  }

  TEST_CASE("validate_model") {
    const HestonModel heston;
    const ModelDiagnostics ok = validate_model(heston, HestonModel::reference_theta());
    CHECK(ok.ok());
    CHECK(ok.rho_A < 1.0);
    CHECK(ok.rho_order2 < 1.0);
    CHECK(ok.rho_order4 < 1.0);
    const Vec th = Vec::Zero(1);
    CHECK_FALSE(validate_model(*scalar_ar(0.0, 1.2, 1.0, 0.0), th).contractive);
    CHECK_FALSE(validate_model(*scalar_ar(0.0, 0.5, 0.0, 0.0), th).covariances_pd);
  }
}
