#include "pssm/score_fisher.hpp"

#include <cmath>

namespace pssm {

namespace {

// Derivatives of the measurement update with respect to θ, given the predicted covariance P and
// its first (S) and second (R) parameter derivatives.
struct Compound {
  UpdateTerms u;
  std::vector<Mat> Scross, So, Stilde, N;
  Vec kappa;
  std::vector<Mat> M, dStilde;
  Mat mu;
};

Compound compound(const Vec& x_pred, const Mat& P, const std::vector<Mat>& S, const std::vector<Mat>* R,
                  const Vec& obs, Eigen::Index m) {
  const Eigen::Index d = P.rows(), o = d - m, k = static_cast<Eigen::Index>(S.size());
  Compound c;
  c.u = update_terms(x_pred, P, obs, m);
  const Mat& G = c.u.G;
  const Mat& cross = c.u.cross;
  c.kappa.resize(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    c.Scross.push_back(S[j].rightCols(o));
    c.So.push_back(S[j].bottomRightCorner(o, o));
    c.Stilde.push_back(G * c.So[j] * G);
    c.N.push_back(c.Scross[j] * G - cross * c.Stilde[j]);
    c.kappa(j) = (G * c.So[j]).trace();
  }
  if (!R) return c;
  c.mu.resize(k, k);
  c.M.resize(k * k);
  c.dStilde.resize(k * k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) {
      const Mat& Rij = (*R)[i * k + j];
      const Mat Ro = Rij.bottomRightCorner(o, o);
      const Mat dSt = G * Ro * G - c.Stilde[i] * c.So[j] * G - G * c.So[j] * c.Stilde[i];
      c.dStilde[i * k + j] = dSt;
      c.M[i * k + j] = Rij.rightCols(o) * G - c.Scross[j] * c.Stilde[i] - c.Scross[i] * c.Stilde[j] - cross * dSt;
      c.mu(i, j) = (G * Ro - c.Stilde[i] * c.So[j]).trace();
    }
  return c;
}

struct FilteredDerivs {
  Mat P;
  std::vector<Mat> S, R;
};

FilteredDerivs filter_covariances(const Mat& P, const std::vector<Mat>& S, const std::vector<Mat>* R, const Compound& c) {
  const Eigen::Index k = static_cast<Eigen::Index>(S.size());
  FilteredDerivs f;
  const Mat crossT = c.u.cross.transpose();
  f.P = symmetrize(P - c.u.Ktilde * crossT);
  for (Eigen::Index j = 0; j < k; ++j) f.S.push_back(S[j] - c.N[j] * crossT - c.u.Ktilde * c.Scross[j].transpose());
  if (R)
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = 0; j < k; ++j)
        f.R.push_back((*R)[i * k + j] - c.M[i * k + j] * crossT - c.N[j] * c.Scross[i].transpose() -
                      c.N[i] * c.Scross[j].transpose() - c.u.Ktilde * (*R)[i * k + j].rightCols(c.u.cross.cols()).transpose());
  return f;
}

struct Coeffs {
  const Mat* A;
  const std::vector<Mat>* dA;
  const std::vector<Mat>* d2A;
};

// Predicted covariance derivatives; the caller adds ∂C and ∂²C.
void predict_cov_derivs(const Coeffs& cf, const FilteredDerivs& f, std::vector<Mat>& S, std::vector<Mat>* R) {
  const Mat& A = *cf.A;
  const Eigen::Index k = static_cast<Eigen::Index>(f.S.size());
  const Mat At = A.transpose();
  std::vector<Mat> dAPf(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    dAPf[j] = (*cf.dA)[j] * f.P;
    const Mat x = dAPf[j] * At;
    S[j] = x + x.transpose() + A * f.S[j] * At;
  }
  if (!R) return;
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) {
      const Mat& dAi = (*cf.dA)[i];
      const Mat& dAj = (*cf.dA)[j];
      const Mat x = (*cf.d2A)[i * k + j] * f.P * At + dAj * f.S[i] * At + dAi * f.S[j] * At + dAPf[j] * dAi.transpose();
      (*R)[i * k + j] = x + x.transpose() + A * f.R[i * k + j] * At;
    }
}

long symmetrize_all(std::vector<Mat>& mats, double flag_tol) {
  long flags = 0;
  for (auto& m : mats) {
    if ((m - m.transpose()).norm() > flag_tol * (1.0 + m.norm())) ++flags;
    m = symmetrize(m);
  }
  return flags;
}

PassResult run_pass(const ModelEvaluation& ev, const Mat& data, int level, const PassOptions& opts) {
  if (ev.order < level) throw std::invalid_argument("model evaluation lacks the required derivative order");
  check_data(data, ev.d, ev.m);
  const Eigen::Index d = ev.d, m = ev.m, k = ev.k, o = d - m;
  const long T = data.rows();
  const bool second = level >= 2;
  const Mat& A = ev.A.value;
  const Mat At = A.transpose();
  const Coeffs cf{&A, &ev.A.d1, &ev.A.d2};

  PassResult out;
  out.Z = Vec::Zero(k);
  if (second) out.dZ = Mat::Zero(k, k);

  // filtered quantities at time t−1
  Vec xf = ev.init_mean.value;
  FilteredDerivs fd;
  fd.P = ev.init_cov.value;
  fd.S = ev.init_cov.d1;
  std::vector<Vec> Vf(k), Wf;
  for (Eigen::Index j = 0; j < k; ++j) Vf[j] = ev.init_mean.d1[j].col(0);
  if (second) {
    fd.R = ev.init_cov.d2;
    for (Eigen::Index ij = 0; ij < k * k; ++ij) Wf.push_back(ev.init_mean.d2[ij].col(0));
  }

  if (opts.keep_trajectory) {
    out.trajectory.x_filt.resize(T + 1, d);
    out.trajectory.x_pred.resize(T + 1, d);
    out.trajectory.v_pred.resize(T + 1, d * k);
    out.trajectory.z_inc = Mat::Zero(T + 1, k);
    out.trajectory.x_filt.row(0) = xf.transpose();
    out.trajectory.x_pred.row(0) = xf.transpose();
    for (Eigen::Index j = 0; j < k; ++j) out.trajectory.v_pred.row(0).segment(j * d, d) = Vf[j].transpose();
  }
  if (opts.keep_states) {
    FilterState f0;
    f0.x_pred = f0.x_filt = xf;
    f0.P_pred = f0.P_filt = fd.P;
    out.filter_states.push_back(f0);
    ScoreState s0;
    s0.V_pred = s0.V_filt = Vf;
    s0.S_pred = s0.S_filt = fd.S;
    out.score_states.push_back(s0);
    if (second) {
      FisherState w0;
      w0.W_pred = w0.W_filt = Wf;
      w0.R_pred = w0.R_filt = fd.R;
      out.fisher_states.push_back(w0);
    }
  }

  std::vector<Mat> S(k), R(second ? k * k : 0);
  std::vector<Vec> V(k), W(second ? k * k : 0);
  for (long t = 1; t <= T; ++t) {
    const MatrixJet& C = ev.C.at(t);
    const Vec x_pred = ev.a.value + A * xf;
    const Mat P = symmetrize(A * fd.P * At + C.value);
    for (Eigen::Index j = 0; j < k; ++j) V[j] = ev.a.d1[j].col(0) + ev.A.d1[j] * xf + A * Vf[j];
    predict_cov_derivs(cf, fd, S, second ? &R : nullptr);
    for (Eigen::Index j = 0; j < k; ++j) S[j] += C.d1[j];
    out.asymmetry_flags += symmetrize_all(S, 1e-8);
    if (second) {
      for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j) {
          const Eigen::Index ij = i * k + j;
          W[ij] = ev.a.d2[ij].col(0) + ev.A.d2[ij] * xf + ev.A.d1[i] * Vf[j] + ev.A.d1[j] * Vf[i] + A * Wf[ij];
          R[ij] += C.d2[ij];
        }
      out.asymmetry_flags += symmetrize_all(R, 1e-8);
    }

    const Vec obs = observed_row(data, t - 1, d, m);
    const Compound c = compound(x_pred, P, S, second ? &R : nullptr, obs, m);
    const Vec& eps = c.u.innovation;
    const Vec Geps = c.u.G * eps;
    const double inc = -0.5 * (c.u.logdet + eps.dot(Geps));
    out.loglik += inc;
    if (c.u.degenerate) ++out.degenerate_steps;

    Vec z(k);
    for (Eigen::Index j = 0; j < k; ++j)
      z(j) = -0.5 * (c.kappa(j) - 2.0 * V[j].tail(o).dot(Geps) - eps.dot(c.Stilde[j] * eps));
    out.Z += z;
    Mat dz;
    if (second) {
      dz.resize(k, k);
      std::vector<Vec> StEps(k);
      for (Eigen::Index j = 0; j < k; ++j) StEps[j] = c.Stilde[j] * eps;
      for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j) {
          const Eigen::Index ij = i * k + j;
          const Vec Voi = V[i].tail(o), Voj = V[j].tail(o);
          const double nu = Voj.dot(StEps[i]) + Voi.dot(StEps[j]) - W[ij].tail(o).dot(Geps);
          dz(i, j) = -0.5 * (c.mu(i, j) + 2.0 * nu + 2.0 * Voj.dot(c.u.G * Voi) - eps.dot(c.dStilde[ij] * eps));
        }
      out.dZ += dz;
    }

    // measurement update of the state and its derivatives
    const Vec x_filt = x_pred + c.u.Ktilde * eps;
    FilteredDerivs nf = filter_covariances(P, S, second ? &R : nullptr, c);
    std::vector<Vec> nVf(k), nWf(second ? k * k : 0);
    for (Eigen::Index j = 0; j < k; ++j) nVf[j] = V[j] + c.N[j] * eps - c.u.Ktilde * V[j].tail(o);
    if (second)
      for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j) {
          const Eigen::Index ij = i * k + j;
          nWf[ij] = W[ij] + c.M[ij] * eps - c.N[j] * V[i].tail(o) - c.N[i] * V[j].tail(o) - c.u.Ktilde * W[ij].tail(o);
        }

    if (opts.keep_trajectory) {
      out.trajectory.x_filt.row(t) = x_filt.transpose();
      out.trajectory.x_pred.row(t) = x_pred.transpose();
      for (Eigen::Index j = 0; j < k; ++j) out.trajectory.v_pred.row(t).segment(j * d, d) = V[j].transpose();
      out.trajectory.z_inc.row(t) = z.transpose();
    }
    if (opts.keep_states) {
      FilterState fs;
      fs.t = t;
      fs.x_pred = x_pred;
      fs.P_pred = P;
      fs.x_filt = x_filt;
      fs.P_filt = nf.P;
      fs.innovation = eps;
      fs.loglik_increment = inc;
      fs.degenerate = c.u.degenerate;
      out.filter_states.push_back(fs);
      ScoreState ss;
      ss.t = t;
      ss.V_pred = V;
      ss.V_filt = nVf;
      ss.S_pred = S;
      ss.S_filt = nf.S;
      ss.kappa = c.kappa;
      ss.Stilde = c.Stilde;
      ss.N = c.N;
      ss.Ktilde = c.u.Ktilde;
      ss.z_increment = z;
      out.score_states.push_back(std::move(ss));
      if (second) {
        FisherState ws;
        ws.t = t;
        ws.W_pred = W;
        ws.W_filt = nWf;
        ws.R_pred = R;
        ws.R_filt = nf.R;
        ws.mu = c.mu;
        ws.M = c.M;
        ws.dz_increment = dz;
        out.fisher_states.push_back(std::move(ws));
      }
    }
    xf = x_filt;
    fd = std::move(nf);
    Vf = std::move(nVf);
    Wf = std::move(nWf);
  }
  return out;
}

}  // namespace

PassResult score_pass(const ModelEvaluation& ev, const Mat& data, const PassOptions& opts) {
  return run_pass(ev, data, 1, opts);
}

PassResult fisher_pass(const ModelEvaluation& ev, const Mat& data, const PassOptions& opts) {
  return run_pass(ev, data, 2, opts);
}

PassResult score_pass(const Model& model, const Vec& theta, const Mat& data, const PassOptions& opts) {
  return run_pass(evaluate_model(model, theta, 1, data.rows()), data, 1, opts);
}

PassResult fisher_pass(const Model& model, const Vec& theta, const Mat& data, const PassOptions& opts) {
  return run_pass(evaluate_model(model, theta, 2, data.rows()), data, 2, opts);
}

LimitCoefficients limit_coefficients(const ModelEvaluation& ev, double tol, long max_iter) {
  LimitCoefficients lc;
  lc.d = ev.d;
  lc.m = ev.m;
  lc.k = ev.k;
  const Eigen::Index d = ev.d, m = ev.m, k = ev.k, o = d - m;
  const bool second = ev.order >= 2;
  lc.a = ev.a.value.col(0);
  lc.A = ev.A.value;
  lc.H = observation_matrix(d, m);
  for (const auto& x : ev.a.d1) lc.da.push_back(x.col(0));
  for (const auto& x : ev.a.d2) lc.d2a.push_back(x.col(0));
  lc.dA = ev.A.d1;
  lc.d2A = ev.A.d2;
  const MatrixJet& C = ev.C.limit();
  lc.steady = steady_state(lc.A, C.value, m, tol, max_iter);
  lc.P = lc.steady.P_inf;
  lc.G = lc.steady.G;
  lc.Ktilde = lc.steady.Ktilde;
  lc.K = lc.steady.K;
  lc.F = lc.steady.F;
  const Coeffs cf{&lc.A, &lc.dA, &lc.d2A};
  const Vec zero_x = Vec::Zero(d), zero_o = Vec::Zero(o);

  // One step of the S (R == nullptr) or R recursion at the steady state; affine in its target.
  auto step = [&](const std::vector<Mat>& S, const std::vector<Mat>* R) {
    const Compound c = compound(zero_x, lc.P, S, R, zero_o, m);
    const FilteredDerivs f = filter_covariances(lc.P, S, R, c);
    std::vector<Mat> nS(k), nR(R ? R->size() : 0);
    predict_cov_derivs(cf, f, nS, R ? &nR : nullptr);
    std::vector<Mat>& fresh = R ? nR : nS;
    const std::vector<Mat>& add = R ? C.d2 : C.d1;
    for (std::size_t i = 0; i < fresh.size(); ++i) fresh[i] = symmetrize(fresh[i] + add[i]);
    return fresh;
  };
  auto flatten = [d](const std::vector<Mat>& xs) {
    Vec v(static_cast<Eigen::Index>(xs.size()) * d * d);
    for (std::size_t i = 0; i < xs.size(); ++i) v.segment(static_cast<Eigen::Index>(i) * d * d, d * d) = vec(xs[i]);
    return v;
  };
  auto unflatten = [d](const Vec& v, std::vector<Mat>& xs) {
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = unvec(v.segment(static_cast<Eigen::Index>(i) * d * d, d * d), d, d);
  };
  auto iterate = [&](std::vector<Mat>& S, std::vector<Mat>* R) {
    std::vector<Mat>& target = R ? *R : S;
    auto apply = [&](const std::vector<Mat>& x) { return R ? step(S, &x) : step(x, nullptr); };
    double floor = lc.P.squaredNorm();
    if (R)
      for (const Mat& x : S) floor += x.squaredNorm();
    auto converged = [&](const std::vector<Mat>& x, const std::vector<Mat>& next) {
      double change = 0.0, scale = floor;
      for (std::size_t i = 0; i < x.size(); ++i) {
        change += (next[i] - x[i]).squaredNorm();
        scale += next[i].squaredNorm();
      }
      return std::sqrt(change) <= tol * std::sqrt(scale);
    };
    const long plain = std::min<long>(max_iter, 200);
    for (long it = 0; it < plain; ++it) {
      std::vector<Mat> next = apply(target);
      const bool done = converged(target, next);
      target = std::move(next);
      lc.iterations = std::max(lc.iterations, it + 1);
      if (done) return true;
    }
    // slow contraction: solve x = Lx + b directly, probing the affine map column by column
    std::vector<Mat> probe(target.size(), Mat::Zero(d, d));
    const Vec b = flatten(apply(probe));
    const Eigen::Index n = b.size();
    Mat L(n, n);
    for (Eigen::Index col = 0; col < n; ++col) {
      Vec e = Vec::Zero(n);
      e(col) = 1.0;
      unflatten(e, probe);
      L.col(col) = flatten(apply(probe)) - b;
    }
    unflatten((Mat::Identity(n, n) - L).partialPivLu().solve(b), target);
    for (auto& x : target) x = symmetrize(x);
    return converged(target, apply(target));
  };
  lc.S.assign(k, Mat::Zero(d, d));
  lc.converged = lc.steady.converged && iterate(lc.S, nullptr);
  if (second) {
    lc.R.assign(k * k, Mat::Zero(d, d));
    lc.converged = lc.converged && iterate(lc.S, &lc.R);
  }
  const Compound c = compound(zero_x, lc.P, lc.S, second ? &lc.R : nullptr, zero_o, m);
  lc.Stilde = c.Stilde;
  lc.N = c.N;
  lc.kappa = c.kappa;
  lc.M = c.M;
  lc.dStilde = c.dStilde;
  lc.mu = c.mu;
  const Mat I = Mat::Identity(d, d);
  const Mat IminusKH = I - lc.Ktilde * lc.H;
  for (Eigen::Index j = 0; j < k; ++j) {
    lc.B1.push_back((lc.dA[j] * lc.Ktilde + lc.A * lc.N[j]) * lc.H);
    lc.B2.push_back(lc.dA[j] - lc.B1[j]);
  }
  if (second)
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = 0; j < k; ++j) {
        const Eigen::Index ij = i * k + j;
        lc.C1.push_back((lc.d2A[ij] * lc.Ktilde + lc.dA[i] * lc.N[j] + lc.dA[j] * lc.N[i] + lc.A * lc.M[ij]) * lc.H);
        lc.C2.push_back(lc.d2A[ij] - lc.C1.back());
        lc.D.push_back(lc.dA[i] * IminusKH - lc.A * lc.N[i] * lc.H);
      }
  return lc;
}

LimitCoefficients limit_coefficients(const Model& model, const Vec& theta, int order) {
  return limit_coefficients(evaluate_model(model, theta, order, 1));
}

Vec homogeneous_score(const LimitCoefficients& lc, const Vec& x, const Vec& x_pred, const std::vector<Vec>& V_pred) {
  const Eigen::Index o = lc.d - lc.m;
  const Vec eps = x.tail(o) - x_pred.tail(o);
  const Vec Geps = lc.G * eps;
  Vec z(lc.k);
  for (Eigen::Index j = 0; j < lc.k; ++j)
    z(j) = -0.5 * (lc.kappa(j) - 2.0 * V_pred[j].tail(o).dot(Geps) - eps.dot(lc.Stilde[j] * eps));
  return z;
}

}  // namespace pssm
