#include "pssm/asymptotics.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>

namespace pssm {

namespace {

Mat selector(Eigen::Index d, Eigen::Index n, Eigen::Index block) {
  Mat s = Mat::Zero(d, n);
  s.block(0, block * d, d, d).setIdentity();
  return s;
}

Mat reshape_rows(const Vec& flat, Eigen::Index k) {
  Mat out(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) out(i, j) = flat(i * k + j);
  return out;
}

}  // namespace

AugmentedModel build_augmented(const LimitCoefficients& lc, const NoiseMoments& noise, AugmentLevel level) {
  const Eigen::Index d = lc.d, k = lc.k;
  if (level == AugmentLevel::fisher && lc.C1.empty())
    throw std::invalid_argument("build_augmented: second-order limit coefficients required");
  AugmentedModel aug;
  aug.level = level;
  aug.d = d;
  aug.k = k;
  const Eigen::Index blocks = level == AugmentLevel::score ? k + 2 : k * k + k + 2;
  const Eigen::Index n = blocks * d;
  aug.n = n;
  aug.abar = Vec::Zero(n);
  aug.Abar = Mat::Zero(n, n);
  aug.abar.segment(0, d) = lc.a;
  aug.abar.segment(d, d) = lc.a;
  aug.Abar.block(0, 0, d, d) = lc.A;
  aug.Abar.block(d, 0, d, d) = lc.K * lc.H;
  aug.Abar.block(d, d, d, d) = lc.F;
  for (Eigen::Index j = 0; j < k; ++j) {
    const Eigen::Index r = (2 + j) * d;
    aug.abar.segment(r, d) = lc.da[j];
    aug.Abar.block(r, 0, d, d) = lc.B1[j];
    aug.Abar.block(r, d, d, d) = lc.B2[j];
    aug.Abar.block(r, r, d, d) = lc.F;
  }
  if (level == AugmentLevel::fisher) {
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = 0; j < k; ++j) {
        const Eigen::Index ij = i * k + j;
        const Eigen::Index r = (2 + k + ij) * d;
        aug.abar.segment(r, d) = lc.d2a[ij];
        aug.Abar.block(r, 0, d, d) = lc.C1[ij];
        aug.Abar.block(r, d, d, d) = lc.C2[ij];
        aug.Abar.block(r, (2 + j) * d, d, d) += lc.D[ij];
        aug.Abar.block(r, (2 + i) * d, d, d) += lc.D[j * k + i];
        aug.Abar.block(r, r, d, d) = lc.F;
      }
  }
  aug.E1 = Mat::Zero(n, d);
  aug.E1.topRows(d).setIdentity();
  aug.chain = MomentChain{aug.abar, aug.Abar, aug.E1, aug.E1.transpose(), noise};
  if (level == AugmentLevel::score) {
    const Mat E2 = kron(aug.E1, aug.E1);
    const Mat P2 = kron(aug.E1.transpose(), aug.E1.transpose());
    aug.Qbar2 = E2 * noise.coeff(2, 2) * P2;
    aug.Qbar1 = E2 * noise.coeff(2, 1) * aug.E1.transpose();
    aug.qbar = E2 * noise.coeff(2, 0).col(0);
    aug.Pi = kron(aug.abar, aug.Abar) + kron(aug.Abar, aug.abar) + aug.Qbar1;
    aug.O = kron(aug.Abar, aug.Abar) + aug.Qbar2;
    aug.abar2.resize(n + n * n);
    aug.abar2 << aug.abar, kron(aug.abar, aug.abar).col(0) + aug.qbar;
    aug.Abar2 = Mat::Zero(n + n * n, n + n * n);
    aug.Abar2.topLeftCorner(n, n) = aug.Abar;
    aug.Abar2.bottomLeftCorner(n * n, n) = aug.Pi;
    aug.Abar2.bottomRightCorner(n * n, n * n) = aug.O;
  }
  return aug;
}

ScorePolys score_limit_polys(const LimitCoefficients& lc) {
  const Eigen::Index d = lc.d, k = lc.k, n = (k + 2) * d;
  ScorePolys out;
  out.f = zero_poly(k, n, 2);
  out.Gamma.resize(k, n * n);
  const Mat Gamma1 = lc.H.transpose() * lc.G * lc.H;
  for (Eigen::Index j = 0; j < k; ++j) {
    const Mat Gamma2 = lc.H.transpose() * lc.Stilde[j] * lc.H;
    Mat g = Mat::Zero(n, n);
    g.block(0, 0, d, d) = Gamma2;
    g.block(0, d, d, d) = -Gamma2;
    g.block(d, 0, d, d) = -Gamma2;
    g.block(d, d, d, d) = Gamma2;
    const Eigen::Index r = (2 + j) * d;
    g.block(r, 0, d, d) = Gamma1;
    g.block(r, d, d, d) = -Gamma1;
    g.block(0, r, d, d) = Gamma1.transpose();
    g.block(d, r, d, d) = -Gamma1.transpose();
    g *= 0.5;
    out.Gamma.row(j) = vec(g).transpose();
    out.Gamma_j.push_back(std::move(g));
  }
  out.f.alpha.rightCols(n * n) = out.Gamma;
  out.f.beta = -0.5 * lc.kappa;
  return out;
}

PoissonSolution solve_poisson(const PolyCoeffs& f, const AugmentedModel& aug) {
  const Eigen::Index n = aug.n, k = f.rows();
  if (f.order != 2 || f.n != n) throw DimensionError("solve_poisson: f must be quadratic on the augmented state");
  if (aug.O.size() == 0) throw std::invalid_argument("solve_poisson: augmented model lacks the order-2 transition");
  const Mat I1 = Mat::Identity(n, n), I2 = Mat::Identity(n * n, n * n);
  const Mat alpha1 = f.alpha.leftCols(n), alpha2 = f.alpha.rightCols(n * n);
  const Eigen::PartialPivLU<Mat> lu_o((aug.O - I2).transpose());
  const Eigen::PartialPivLU<Mat> lu_a((aug.Abar - I1).transpose());
  const Mat y2 = lu_o.solve(alpha2.transpose()).transpose();
  const Mat y1 = lu_a.solve((alpha1 - y2 * aug.Pi).transpose()).transpose();
  PoissonSolution out;
  out.g = zero_poly(k, n, 2);
  out.g.alpha << y1, y2;
  out.h = zero_poly(k, n, 2);
  out.h.alpha = out.g.alpha * aug.Abar2;
  out.h.beta = out.g.alpha * aug.abar2;
  const Mat I = Mat::Identity(n + n * n, n + n * n);
  out.alpha_residual = (f.alpha - out.g.alpha * (aug.Abar2 - I)).norm();
  out.beta_residual = (f.beta - out.h.beta).norm();
  return out;
}

PolyCoeffs fisher_limit_poly(const LimitCoefficients& lc) {
  if (lc.M.empty()) throw std::invalid_argument("fisher_limit_poly: second-order limit coefficients required");
  const Eigen::Index d = lc.d, k = lc.k, n = (2 + k + k * k) * d;
  PolyCoeffs out = zero_poly(k * k, n, 2);
  const Mat L_eps = lc.H * (selector(d, n, 0) - selector(d, n, 1));
  std::vector<Mat> L_V;
  for (Eigen::Index j = 0; j < k; ++j) L_V.push_back(lc.H * selector(d, n, 2 + j));
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) {
      const Eigen::Index ij = i * k + j;
      const Mat L_W = lc.H * selector(d, n, 2 + k + ij);
      const Mat q = -0.5 * (2.0 * L_V[j].transpose() * lc.Stilde[i] * L_eps + 2.0 * L_V[i].transpose() * lc.Stilde[j] * L_eps -
                            2.0 * L_W.transpose() * lc.G * L_eps + 2.0 * L_V[j].transpose() * lc.G * L_V[i] -
                            L_eps.transpose() * lc.dStilde[ij] * L_eps);
      out.alpha.row(ij).tail(n * n) = vec(q).transpose();
      out.beta(ij) = -0.5 * lc.mu(i, j);
    }
  return out;
}

CovarianceReport covariance_report(const Mat& W, const Mat& U, const std::string& method) {
  CovarianceReport r;
  r.method = method;
  r.W = W;
  r.U = U;
  const Eigen::Index k = W.rows();
  Eigen::FullPivLU<Mat> lu(W);
  lu.setThreshold(1e-12);
  r.W_invertible = k > 0 && lu.isInvertible() && W.allFinite();
  if (!r.W_invertible) {
    r.flags.push_back("W singular: V not available");
    return r;
  }
  const Mat Winv = lu.inverse();
  r.V = symmetrize(Winv * U * Winv.transpose());
  r.std = r.V.diagonal().cwiseMax(0.0).cwiseSqrt();
  r.corr = Mat::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j)
      r.corr(i, j) = i == j ? 1.0 : (r.std(i) > 0 && r.std(j) > 0 ? r.V(i, j) / (r.std(i) * r.std(j)) : 0.0);
  if ((W - W.transpose()).norm() > 1e-8 * (1.0 + W.norm())) r.flags.push_back("W asymmetric");
  const double min_eig = Eigen::SelfAdjointEigenSolver<Mat>(r.V).eigenvalues().minCoeff();
  if (min_eig < -1e-8 * (1.0 + r.V.norm())) r.flags.push_back("V not positive semidefinite");
  return r;
}

std::vector<Interval> confidence_interval(const CovarianceReport& report, const Vec& theta_hat, double T, double level) {
  if (!report.W_invertible) throw std::invalid_argument("confidence_interval: covariance not available");
  if (!(level > 0.0 && level < 1.0) || T <= 0) throw std::invalid_argument("confidence_interval: invalid level or T");
  const double z = boost::math::quantile(boost::math::normal(), 1.0 - (1.0 - level) / 2.0);
  std::vector<Interval> out;
  for (Eigen::Index j = 0; j < theta_hat.size(); ++j) {
    const double half = std::sqrt(std::max(report.V(j, j), 0.0) / T) * z;
    out.push_back({theta_hat(j) - half, theta_hat(j) + half});
  }
  return out;
}

namespace {

NoiseMoments noise_for_U(const Model& model, const Vec& theta) {
  if (model.max_noise_order() < 4)
    throw MethodUnavailableError("explicit U requires conditional noise moments up to order 4");
  return model.noise_moments(theta, 4);
}

Mat explicit_U_from(const LimitCoefficients& lc, const NoiseMoments& noise, const StationaryOptions& so,
                    ExplicitDiagnostics* diag) {
  const AugmentedModel aug = build_augmented(lc, noise, AugmentLevel::score);
  const ScorePolys polys = score_limit_polys(lc);
  const PoissonSolution sol = solve_poisson(polys.f, aug);
  const PolyCoeffs quartic = outer_product(sol.g, sol.g) - outer_product(sol.h, sol.h);
  const StationaryMoments st = stationary_moment_solve(aug.chain, 4, so);
  if (diag) {
    diag->poisson_alpha_residual = sol.alpha_residual;
    diag->poisson_beta_residual = sol.beta_residual;
    diag->rho_Abar = spectral_radius(aug.Abar);
    diag->rho_O = spectral_radius(aug.O);
    diag->moment_iterations = st.iterations;
    diag->moment_ratios = st.last_ratio;
  }
  return symmetrize(reshape_rows(quartic.expectation(st.moments), lc.k));
}

Mat explicit_W_from(const LimitCoefficients& lc, const NoiseMoments& noise, const StationaryOptions& so) {
  const AugmentedModel aug = build_augmented(lc, noise.truncated(2), AugmentLevel::fisher);
  const StationaryMoments st = stationary_moment_solve(aug.chain, 2, so);
  return reshape_rows(fisher_limit_poly(lc).expectation(st.moments), lc.k);
}

}  // namespace

Mat explicit_W(const Model& model, const Vec& theta, const ExplicitOptions& opts) {
  const LimitCoefficients lc = limit_coefficients(evaluate_model(model, theta, 2, 1));
  return explicit_W_from(lc, model.noise_moments(theta, 2), opts.stationary);
}

Mat explicit_U(const Model& model, const Vec& theta, const ExplicitOptions& opts, ExplicitDiagnostics* diag) {
  const NoiseMoments noise = noise_for_U(model, theta);
  const LimitCoefficients lc = limit_coefficients(evaluate_model(model, theta, 1, 1));
  return explicit_U_from(lc, noise, opts.stationary, diag);
}

ExplicitResult explicit_covariance(const Model& model, const Vec& theta, const ExplicitOptions& opts) {
  const NoiseMoments noise = noise_for_U(model, theta);
  const LimitCoefficients lc = limit_coefficients(evaluate_model(model, theta, 2, 1));
  if (!lc.converged) throw ConvergenceError("explicit covariance: steady state did not converge");
  ExplicitResult out;
  const Mat U = explicit_U_from(lc, noise, opts.stationary, &out.diagnostics);
  const Mat W = explicit_W_from(lc, noise, opts.stationary);
  out.report = covariance_report(W, U, "explicit");
  return out;
}

Mat empirical_W(const PassResult& fisher, long T) {
  if (fisher.dZ.size() == 0) throw std::invalid_argument("empirical_W: Fisher pass required");
  return fisher.dZ / static_cast<double>(T);
}

Mat empirical_U(const PoissonSolution& poly, const Trajectory& traj, const Mat& data, Eigen::Index d, Eigen::Index m,
                Eigen::Index k, const Mat* latent) {
  const Eigen::Index T = data.rows(), n = (k + 2) * d;
  if (traj.x_filt.rows() != T + 1) throw std::invalid_argument("empirical_U: trajectory does not match data");
  if (latent && latent->rows() != T) throw DimensionError("empirical_U: latent path must have T rows");
  Mat acc = Mat::Zero(k, k);
  Vec xbar(n), v2(n + n * n);
  for (Eigen::Index t = 1; t <= T; ++t) {
    if (latent)
      xbar.head(d) = latent->row(t - 1).transpose();
    else {
      xbar.head(m) = traj.x_filt.row(t).head(m).transpose();
      xbar.segment(m, d - m) = observed_row(data, t - 1, d, m);
    }
    xbar.segment(d, d) = traj.x_pred.row(t).transpose();
    xbar.tail(k * d) = traj.v_pred.row(t).transpose();
    v2.head(n) = xbar;
    for (Eigen::Index i = 0; i < n; ++i) v2.segment(n + i * n, n) = xbar(i) * xbar;
    const Vec g = poly.g.alpha * v2 + poly.g.beta;
    const Vec h = poly.h.alpha * v2 + poly.h.beta;
    acc.noalias() += g * g.transpose() - h * h.transpose();
  }
  return symmetrize(acc / static_cast<double>(T));
}

EmpiricalResult empirical_covariance(const Model& model, const Vec& theta_hat, const Mat& data, const Mat* latent) {
  const ModelEvaluation ev = evaluate_model(model, theta_hat, 2, data.rows());
  PassOptions opts;
  opts.keep_trajectory = true;
  const PassResult pass = fisher_pass(ev, data, opts);
  const LimitCoefficients lc = limit_coefficients(ev);
  const AugmentedModel aug = build_augmented(lc, model.noise_moments(theta_hat, 2), AugmentLevel::score);
  const PoissonSolution sol = solve_poisson(score_limit_polys(lc).f, aug);
  const Mat U = empirical_U(sol, pass.trajectory, data, ev.d, ev.m, ev.k, latent);
  EmpiricalResult out;
  out.report = covariance_report(empirical_W(pass, data.rows()), U, "empirical");
  out.loglik = pass.loglik;
  out.Z = pass.Z;
  if (data.rows() < 1000) out.report.flags.push_back("short sample: empirical covariance has high variance");
  return out;
}

}  // namespace pssm
