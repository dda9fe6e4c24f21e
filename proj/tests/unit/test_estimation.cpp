#include "generators.hpp"
#include "pssm/asymptotics.hpp"
#include "pssm/estimation.hpp"
#include "pssm/models/iid_gaussian.hpp"

#include <doctest.h>

#include <cmath>

using namespace pssm;

TEST_SUITE("estimation") {
  TEST_CASE("i.i.d. Gaussian mean") {
    const IidGaussianModel model(1.0);
    Rng rng(71);
    for (int trial = 0; trial < 5; ++trial) {
      const Mat x = (gen::matrix(rng, 50, 1).array() + 2.0 * rng.normal()).matrix();
      const EstimationResult r = qml_estimate(model, x);
      CHECK(r.converged);
      CHECK(r.theta_hat(0) == doctest::Approx(x.mean()).epsilon(1e-8));
      CHECK_FALSE(r.boundary_active[0]);
    }
  }

  TEST_CASE("i.i.d. Gaussian mean and variance") {
    const IidGaussianModel model(1.0, true);
    Rng rng(72);
    const Mat x = (1.5 * gen::matrix(rng, 200, 1).array() - 0.4).matrix();
    const EstimationResult r = qml_estimate(model, x);
    const double mean = x.mean();
    CHECK(r.converged);
    CHECK(r.theta_hat(0) == doctest::Approx(mean).epsilon(1e-7));
    CHECK(r.theta_hat(1) == doctest::Approx((x.array() - mean).square().mean()).epsilon(1e-4));
  }

  TEST_CASE("estimate path is the running mean") {
    const IidGaussianModel model(1.0);
    const Vec x = (Vec(6) << 1.0, 3.0, -1.0, 0.5, 2.5, 0.0).finished();
    const std::vector<long> grid{1, 2, 3, 4, 5, 6};
    const std::vector<EstimationResult> path = estimate_path(model, Mat(x), grid);
    REQUIRE(path.size() == grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
      CHECK(path[i].theta_hat(0) == doctest::Approx(x.head(grid[i]).mean()).epsilon(1e-8));
  }

  TEST_CASE("boundary solutions are flagged") {
    const IidGaussianModel model(1.0, false, 10.0);
    const Mat x = Mat::Constant(20, 1, 25.0);
    const EstimationResult r = qml_estimate(model, x);
    CHECK(r.boundary_active[0]);
    CHECK(r.theta_hat(0) <= 10.0);
    CHECK(r.theta_hat(0) >= 9.99);
  }

  TEST_CASE("pinned estimate") {
    const IidGaussianModel model(1.0, true);
    Rng rng(73);
    const Mat x = (gen::matrix(rng, 100, 1).array() + 0.3).matrix();
    const Constraint pin = pin_constraint({0}, Vec::Zero(1), 2);
    const EstimationResult r = constrained_estimate(model, x, pin);
    CHECK(r.converged);
    CHECK(std::abs(r.theta_hat(0)) <= 1e-8);
    CHECK(r.theta_hat(1) == doctest::Approx(x.array().square().mean()).epsilon(1e-6));
    // The constrained score lies in the row space of the constraint Jacobian; multipliers are per observation.
    const PassResult s = score_pass(model, r.theta_hat, x);
    CHECK(std::abs(s.Z(1)) <= 1e-5 * x.rows());
    CHECK(r.multiplier.size() == 1);
    CHECK(r.multiplier(0) == doctest::Approx(s.Z(0) / x.rows()).epsilon(1e-4));
  }

  TEST_CASE("a pin at the unconstrained optimum has a vanishing multiplier") {
    const IidGaussianModel model(1.0, true);
    Rng rng(74);
    const Mat x = gen::matrix(rng, 100, 1);
    const EstimationResult u = qml_estimate(model, x);
    const Constraint pin = pin_constraint({0}, Vec::Constant(1, u.theta_hat(0)), 2);
    const EstimationResult c = constrained_estimate(model, x, pin);
    CHECK(std::abs(c.multiplier(0)) <= 1e-4);
    CHECK(c.loglik == doctest::Approx(u.loglik).epsilon(1e-10));
  }

  TEST_CASE("linear constraints and their rank") {
    const Constraint lin = linear_constraint((Mat(1, 2) << 1.0, -1.0).finished(), Vec::Zero(1));
    CHECK(lin.residual((Vec(2) << 2.0, 0.5).finished())(0) == doctest::Approx(1.5));
    CHECK_NOTHROW(check_constraint_rank(lin, Vec::Zero(2)));
    const Constraint dup = linear_constraint((Mat(2, 2) << 1.0, 2.0, 2.0, 4.0).finished(), Vec::Zero(2));
    CHECK_THROWS_AS(check_constraint_rank(dup, Vec::Zero(2)), MethodUnavailableError);
    Constraint nonlinear;
    nonlinear.R = [](const Vec& t) { return Vec(Vec::Constant(1, t(0) * t(1))); };
    nonlinear.r = Vec::Zero(1);
    const Mat J = nonlinear.jacobian((Vec(2) << 2.0, 3.0).finished());
    CHECK(J(0, 0) == doctest::Approx(3.0).epsilon(1e-7));
    CHECK(J(0, 1) == doctest::Approx(2.0).epsilon(1e-7));
  }

  TEST_CASE("Halton points are deterministic and inside the box") {
    const ParamSpace box{(Vec(3) << -1, 0, 5).finished(), (Vec(3) << 1, 2, 6).finished()};
    const std::vector<Vec> p = halton_points(box, 20), q = halton_points(box, 20);
    REQUIRE(p.size() == 20);
    for (std::size_t i = 0; i < p.size(); ++i) {
      CHECK(p[i] == q[i]);
      CHECK(box.contains(p[i]));
    }
  }

  TEST_CASE("hidden AR(1): estimates fall within the asymptotic spread") {
    const auto model = gen::hidden_ar1();
    const Vec th = (Vec(2) << 0.6, 0.5).finished();
    const Vec sd = explicit_covariance(*model, th).report.std;
    Rng rng(75);
    const long T = 4000;
    for (int trial = 0; trial < 3; ++trial) {
      const Mat data = gen::simulate(*model, th, T, rng).rightCols(1);
      const EstimationResult r = qml_estimate(*model, data);
      CHECK(r.converged);
      for (int i = 0; i < 2; ++i) CHECK(std::abs(r.theta_hat(i) - th(i)) <= 4.0 * sd(i) / std::sqrt(double(T)));
    }
  }
}
