#include "pssm/kalman.hpp"

#include <algorithm>
#include <cmath>

namespace pssm {

UpdateTerms update_terms(const Vec& x_pred, const Mat& P_pred, const Vec& obs, Eigen::Index m) {
  const Eigen::Index d = x_pred.size(), o = d - m;
  UpdateTerms u;
  u.cross = P_pred.rightCols(o);
  const SymSolveResult inv = sym_inverse(P_pred.bottomRightCorner(o, o));
  u.G = symmetrize(inv.solution);
  u.logdet = inv.logdet;
  u.degenerate = inv.degenerate;
  u.Ktilde = u.cross * u.G;
  u.innovation = obs - x_pred.tail(o);
  return u;
}

FilterState filter_init(const Model& model, const Vec& theta) {
  const InitialLaw law = model.initial_law(theta);
  FilterState s;
  s.x_pred = s.x_filt = law.mean;
  s.P_pred = s.P_filt = law.cov;
  return s;
}

FilterState filter_init(const ModelEvaluation& ev) {
  FilterState s;
  s.x_pred = s.x_filt = ev.init_mean.value;
  s.P_pred = s.P_filt = ev.init_cov.value;
  return s;
}

void filter_update(FilterState& s, const Vec& obs, Eigen::Index m) {
  const UpdateTerms u = update_terms(s.x_pred, s.P_pred, obs, m);
  s.innovation = u.innovation;
  s.x_filt = s.x_pred + u.Ktilde * u.innovation;
  s.P_filt = symmetrize(s.P_pred - u.Ktilde * u.cross.transpose());
  s.loglik_increment = -0.5 * (u.logdet + u.innovation.dot(u.G * u.innovation));
  s.degenerate = u.degenerate;
}

namespace {

FilterState predict(const FilterState& prev, const Vec& a, const Mat& A, const Mat& C) {
  FilterState s;
  s.t = prev.t + 1;
  s.x_pred = a + A * prev.x_filt;
  s.P_pred = symmetrize(A * prev.P_filt * A.transpose() + C);
  return s;
}

}  // namespace

FilterState filter_step(const FilterState& prev, const Vec& obs, const ModelEvaluation& ev) {
  FilterState s = predict(prev, ev.a.value, ev.A.value, ev.C.at(prev.t + 1).value);
  filter_update(s, obs, ev.m);
  return s;
}

FilterState filter_step(const FilterState& prev, const Vec& obs, const Model& model, const Vec& theta) {
  FilterState s = predict(prev, model.transition_vector(theta), model.transition_matrix(theta),
                          noise_cov(model, theta, prev.t + 1));
  filter_update(s, obs, model.hidden_dim());
  return s;
}

void check_data(const Mat& data, Eigen::Index d, Eigen::Index m) {
  if (data.rows() < 1) throw DimensionError("data must contain at least one observation");
  if (data.cols() != d - m && data.cols() != d)
    throw DimensionError("data rows must have " + std::to_string(d - m) + " observed components");
  if (!data.allFinite()) throw std::invalid_argument("data contains NaN or infinite values");
}

Vec observed_row(const Mat& data, Eigen::Index row, Eigen::Index d, Eigen::Index m) {
  return data.row(row).tail(d - m).transpose();
}

LoglikResult quasi_loglik(const ModelEvaluation& ev, const Mat& data, bool keep_states) {
  check_data(data, ev.d, ev.m);
  LoglikResult out;
  FilterState s = filter_init(ev);
  if (keep_states) out.states.push_back(s);
  for (Eigen::Index t = 0; t < data.rows(); ++t) {
    s = filter_step(s, observed_row(data, t, ev.d, ev.m), ev);
    out.loglik += s.loglik_increment;
    if (s.degenerate) ++out.degenerate_steps;
    if (keep_states) out.states.push_back(s);
  }
  return out;
}

LoglikResult quasi_loglik(const Model& model, const Vec& theta, const Mat& data, bool keep_states) {
  return quasi_loglik(evaluate_model(model, theta, 0, data.rows()), data, keep_states);
}

SteadyState steady_state(const Mat& A, const Mat& C_inf, Eigen::Index m, double tol, long max_iter) {
  const Eigen::Index d = A.rows(), o = d - m;
  const Mat H = observation_matrix(d, m);
  const Vec zero = Vec::Zero(d), zero_o = Vec::Zero(o);
  SteadyState ss;
  ss.C_inf = C_inf;
  auto riccati = [&](const Mat& P) {
    const UpdateTerms u = update_terms(zero, P, zero_o, m);
    return Mat(symmetrize(A * (P - u.Ktilde * u.cross.transpose()) * A.transpose() + C_inf));
  };
  Mat P = C_inf;
  // plain iteration first, then Hewer steps P = F P Fᵀ + C with F = A(I − K̃H) for slow filters
  const long plain = std::min<long>(max_iter, 200);
  for (long it = 0; it < plain; ++it) {
    Mat next = riccati(P);
    const double change = (next - P).norm();
    P = std::move(next);
    ss.iterations = it + 1;
    if (change <= tol * P.norm()) {
      ss.converged = true;
      break;
    }
  }
  for (long it = 0; !ss.converged && it < 100 && ss.iterations < max_iter; ++it) {
    const UpdateTerms u = update_terms(zero, P, zero_o, m);
    const Mat F = A * (Mat::Identity(d, d) - u.Ktilde * H);
    Mat next;
    try {
      SteinOptions so;
      so.tol = 0.1 * tol;
      next = symmetrize(solve_stein(F, C_inf, so));
    } catch (const NonContractiveError&) {
      next = riccati(P);
    }
    const double change = (next - P).norm();
    P = std::move(next);
    ++ss.iterations;
    if (change <= tol * P.norm()) ss.converged = (riccati(P) - P).norm() <= 10.0 * tol * P.norm();
  }
  const UpdateTerms u = update_terms(zero, P, zero_o, m);
  ss.P_inf = P;
  ss.G = u.G;
  ss.Ktilde = u.Ktilde;
  ss.P_filt = symmetrize(P - u.Ktilde * u.cross.transpose());
  ss.K = A * ss.Ktilde;
  ss.F = A - ss.K * H;
  ss.rho_F = spectral_radius(ss.F);
  return ss;
}

SteadyState steady_state(const Model& model, const Vec& theta, double tol, long max_iter) {
  return steady_state(model.transition_matrix(theta), noise_cov_limit(model, theta), model.hidden_dim(), tol, max_iter);
}

}  // namespace pssm
