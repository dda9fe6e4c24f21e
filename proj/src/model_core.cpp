#include "pssm/model_core.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace pssm {

namespace {

MomentChain model_chain(const Model& model, const Vec& theta, int r) {
  const int order = std::min(std::max(r, 2), model.max_noise_order());
  if (r > model.max_noise_order()) throw DimensionError("noise moments missing for requested order");
  return state_chain(model.transition_vector(theta), model.transition_matrix(theta), model.noise_moments(theta, order));
}

Mat cov_from_moments(const NoiseMoments& noise, const Vec& m1, const Vec& m2) {
  const Eigen::Index d = noise.dim();
  const Vec v = noise.coeff(2, 2) * m2 + noise.coeff(2, 1) * m1 + noise.coeff(2, 0).col(0);
  return symmetrize(unvec(v, d, d));
}

double min_eig(const Mat& c) {
  if (c.rows() == 0) return 0.0;
  return Eigen::SelfAdjointEigenSolver<Mat>(symmetrize(c), Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

}  // namespace

std::vector<Vec> split_stacked(const Vec& stacked, Eigen::Index d, int r, double mass) {
  if (stacked.size() != stacked_length(d, r)) throw DimensionError("split_stacked: length mismatch");
  std::vector<Vec> out(r + 1);
  out[0] = Vec::Constant(1, mass);
  Eigen::Index pos = 0, len = 1;
  for (int q = 1; q <= r; ++q) {
    len *= d;
    out[q] = stacked.segment(pos, len);
    pos += len;
  }
  return out;
}

Vec join_stacked(const std::vector<Vec>& moments, int r) {
  Eigen::Index total = 0;
  for (int q = 1; q <= r; ++q) total += moments[q].size();
  Vec out(total);
  Eigen::Index pos = 0;
  for (int q = 1; q <= r; ++q) {
    out.segment(pos, moments[q].size()) = moments[q];
    pos += moments[q].size();
  }
  return out;
}

TransitionOrderR transition_order_r(const Model& model, const Vec& theta, int r) {
  if (r < 1 || r > 4) throw DimensionError("transition_order_r: order must be in 1..4");
  TransitionOrderR tr;
  tr.r = r;
  tr.d = model.state_dim();
  tr.chain = model_chain(model, theta, r);
  std::vector<Vec> mass{Vec::Ones(1)};
  tr.a_r = join_stacked(propagate_moments(tr.chain, mass, r), r);
  return tr;
}

Vec TransitionOrderR::apply(const Vec& v) const {
  std::vector<Vec> blocks = split_stacked(v, d, r);
  blocks[0] = Vec();
  return join_stacked(propagate_moments(chain, blocks, r), r);
}

Mat TransitionOrderR::materialize() const {
  const Eigen::Index n = length();
  Mat out(n, n);
  Vec e = Vec::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    e(j) = 1.0;
    out.col(j) = apply(e);
    e(j) = 0.0;
  }
  return out;
}

Mat TransitionOrderR::companion() const {
  const Eigen::Index n = length();
  Mat out = Mat::Zero(n + 1, n + 1);
  out(0, 0) = 1.0;
  out.block(1, 0, n, 1) = a_r;
  out.block(1, 1, n, n) = materialize();
  return out;
}

Vec moment_path(const TransitionOrderR& tr, const Vec& start_stacked, long n) {
  if (n < 0) throw DimensionError("moment_path: negative step count");
  std::vector<Vec> m = split_stacked(start_stacked, tr.d, tr.r);
  for (long i = 0; i < n; ++i) m = propagate_moments(tr.chain, m, tr.r);
  return join_stacked(m, tr.r);
}

Vec moment_path(const Model& model, const Vec& theta, int r, const Vec& x0, long n) {
  return moment_path(transition_order_r(model, theta, r), stacked_kron(x0, r), n);
}

Vec unconditional_moments(const Model& model, const Vec& theta, int r, long t) {
  const TransitionOrderR tr = transition_order_r(model, theta, r);
  return moment_path(tr, join_stacked(initial_moments(model.initial_law(theta), r), r), t);
}

Vec stationary_moments(const Model& model, const Vec& theta, int r) {
  return join_stacked(stationary_moment_solve(model_chain(model, theta, r), r).moments, r);
}

Mat noise_cov(const Model& model, const Vec& theta, long t) {
  if (t < 1) throw DimensionError("noise_cov: t must be at least 1");
  const Vec m = unconditional_moments(model, theta, 2, t - 1);
  const Eigen::Index d = model.state_dim();
  return cov_from_moments(model.noise_moments(theta, 2), m.head(d), m.tail(d * d));
}

Mat noise_cov_limit(const Model& model, const Vec& theta) {
  const MomentChain chain = model_chain(model, theta, 2);
  const auto st = stationary_moment_solve(chain, 2);
  return cov_from_moments(chain.noise, st.moments[1], st.moments[2]);
}

NoiseCovSequence noise_cov_sequence(const Model& model, const Vec& theta, long T, double tol) {
  const MomentChain chain = model_chain(model, theta, 2);
  const auto st = stationary_moment_solve(chain, 2);
  Mat limit = cov_from_moments(chain.noise, st.moments[1], st.moments[2]);
  std::vector<Vec> m = initial_moments(model.initial_law(theta), 2);
  std::vector<Mat> head;
  const double scale = 1.0 + limit.norm();
  for (long t = 1; t <= T; ++t) {
    Mat c = cov_from_moments(chain.noise, m[1], m[2]);
    if ((c - limit).norm() <= tol * scale) break;
    head.push_back(std::move(c));
    m = propagate_moments(chain, m, 2);
  }
  return NoiseCovSequence(std::move(head), std::move(limit));
}

ModelEvaluation evaluate_model(const Model& model, const Vec& theta, int order, long T) {
  ModelEvaluation ev;
  ev.theta = theta;
  ev.order = order;
  ev.d = model.state_dim();
  ev.m = model.hidden_dim();
  ev.k = model.param_dim();
  const ParamSpace& box = model.param_space();
  JetStencil stencil(theta, order, &box);
  ev.one_sided = stencil.one_sided();

  auto jet_or_fd = [&](std::optional<MatrixJet> analytic, auto&& fn) {
    if (analytic) return *analytic;
    std::vector<Mat> values;
    for (const auto& p : stencil.points()) values.push_back(fn(p));
    return stencil.combine(values);
  };
  ev.a = jet_or_fd(order > 0 ? model.transition_vector_jet(theta, order) : std::nullopt,
                   [&](const Vec& p) -> Mat { return model.transition_vector(p); });
  ev.A = jet_or_fd(order > 0 ? model.transition_matrix_jet(theta, order) : std::nullopt,
                   [&](const Vec& p) -> Mat { return model.transition_matrix(p); });

  std::vector<Mat> mean_values, cov_values;
  std::vector<NoiseCovSequence> seqs;
  long horizon = 0;
  for (const auto& p : stencil.points()) {
    const InitialLaw law = model.initial_law(p);
    mean_values.push_back(law.mean);
    cov_values.push_back(law.cov);
    seqs.push_back(noise_cov_sequence(model, p, T));
    horizon = std::max(horizon, seqs.back().horizon());
  }
  ev.init_mean = stencil.combine(mean_values);
  ev.init_cov = stencil.combine(cov_values);
  std::vector<MatrixJet> head;
  head.reserve(horizon);
  for (long t = 1; t <= horizon; ++t)
    head.push_back(stencil.combine([&](std::size_t i) -> const Mat& { return seqs[i].at(t); }));
  MatrixJet limit = stencil.combine([&](std::size_t i) -> const Mat& { return seqs[i].limit(); });
  ev.C = TimeVaryingJet(std::move(head), std::move(limit));
  return ev;
}

ModelDiagnostics validate_model(const Model& model, const Vec& theta) {
  ModelDiagnostics diag;
  const Eigen::Index d = model.state_dim();
  diag.rho_A = spectral_radius(model.transition_matrix(theta));
  diag.contractive = diag.rho_A < 1.0;
  if (!diag.contractive) diag.messages.push_back("non-contractive transition matrix");
  try {
    diag.rho_order2 = spectral_radius(transition_order_r(model, theta, 2).materialize());
    diag.contractive = diag.contractive && diag.rho_order2 < 1.0;
    if (model.max_noise_order() >= 4 && stacked_length(d, 4) <= 1000) {
      diag.rho_order4 = spectral_radius(transition_order_r(model, theta, 4).materialize());
      diag.contractive = diag.contractive && diag.rho_order4 < 1.0;
    }
  } catch (const std::exception& e) {
    diag.contractive = false;
    diag.messages.push_back(e.what());
  }
  if (!diag.contractive) {
    diag.covariances_pd = false;
    return diag;
  }
  const NoiseCovSequence seq = noise_cov_sequence(model, theta, 10);
  diag.covariances_pd = true;
  for (long t = 1; t <= 10; ++t) {
    diag.cov_min_eig.push_back(min_eig(seq.at(t)));
    if (diag.cov_min_eig.back() <= 0.0) diag.covariances_pd = false;
  }
  diag.cov_limit_min_eig = min_eig(seq.limit());
  if (diag.cov_limit_min_eig <= 0.0) diag.covariances_pd = false;
  if (!diag.covariances_pd) diag.messages.push_back("noise covariance not positive definite");
  try {
    const ModelEvaluation ev = evaluate_model(model, theta, 1, 10);
    for (const auto& m : ev.A.d1) diag.derivatives_finite = diag.derivatives_finite && m.allFinite();
    for (const auto& m : ev.a.d1) diag.derivatives_finite = diag.derivatives_finite && m.allFinite();
    for (const auto& m : ev.C.limit().d1) diag.derivatives_finite = diag.derivatives_finite && m.allFinite();
  } catch (const std::exception& e) {
    diag.derivatives_finite = false;
    diag.messages.push_back(e.what());
  }
  if (!diag.derivatives_finite) diag.messages.push_back("non-finite parameter derivatives");
  return diag;
}

}  // namespace pssm
