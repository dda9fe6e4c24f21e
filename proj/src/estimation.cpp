#include "pssm/estimation.hpp"

#include "pssm/kalman.hpp"
#include "pssm/score_fisher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

namespace pssm {

Mat Constraint::jacobian(const Vec& theta) const {
  if (R_jac) return R_jac(theta);
  const Eigen::Index k = theta.size();
  Mat J(dim(), k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double h = std::cbrt(std::numeric_limits<double>::epsilon()) * std::max(1.0, std::abs(theta(j)));
    Vec up = theta, dn = theta;
    up(j) += h;
    dn(j) -= h;
    J.col(j) = (R(up) - R(dn)) / (2.0 * h);
  }
  return J;
}

Constraint linear_constraint(const Mat& R, const Vec& r) {
  if (R.rows() != r.size()) throw DimensionError("linear_constraint: R and r disagree");
  Constraint c;
  c.R = [R](const Vec& theta) { return Vec(R * theta); };
  c.R_jac = [R](const Vec&) { return R; };
  c.r = r;
  return c;
}

Constraint pin_constraint(const std::vector<Eigen::Index>& indices, const Vec& values, Eigen::Index k) {
  if (static_cast<Eigen::Index>(indices.size()) != values.size()) throw DimensionError("pin_constraint: size mismatch");
  Mat R = Mat::Zero(values.size(), k);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || indices[i] >= k) throw DimensionError("pin_constraint: index out of range");
    R(static_cast<Eigen::Index>(i), indices[i]) = 1.0;
  }
  return linear_constraint(R, values);
}

void check_constraint_rank(const Constraint& c, const Vec& theta) {
  const Mat J = c.jacobian(theta);
  if (J.cols() != theta.size() || J.rows() != c.dim()) throw DimensionError("constraint: Jacobian has the wrong shape");
  if (c.dim() > theta.size()) throw MethodUnavailableError("constraint: more restrictions than parameters");
  Eigen::FullPivLU<Mat> lu(J);
  lu.setThreshold(1e-10);
  if (lu.rank() < c.dim()) throw MethodUnavailableError("constraint: Jacobian is rank deficient");
}

std::vector<Vec> halton_points(const ParamSpace& box, int n) {
  static constexpr int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71};
  const Eigen::Index k = box.dim();
  if (k > 20) throw DimensionError("halton_points: at most 20 dimensions");
  std::vector<Vec> out;
  for (int i = 1; i <= n; ++i) {
    Vec p(k);
    for (Eigen::Index j = 0; j < k; ++j) {
      double f = 1.0, u = 0.0;
      for (int idx = i; idx > 0; idx /= primes[j]) {
        f /= primes[j];
        u += f * (idx % primes[j]);
      }
      p(j) = box.lower(j) + u * (box.upper(j) - box.lower(j));
    }
    out.push_back(p);
  }
  return out;
}

namespace {

struct Eval {
  double value = -std::numeric_limits<double>::infinity();
  Vec grad;
  Mat hess;
  bool ok = false;
};

// Objective on the L/T scale.
struct Objective {
  std::function<double(const Vec&)> value;
  std::function<Eval(const Vec&)> full;
};

struct LocalResult {
  Vec theta;
  Eval eval;
  double pg_norm = std::numeric_limits<double>::infinity();
  long iterations = 0;
  bool converged = false;
  std::string message;
};

Vec projected_gradient(const Vec& theta, const Vec& grad, const ParamSpace& box, std::vector<bool>& fixed) {
  Vec pg = grad;
  fixed.assign(theta.size(), false);
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double tol = 1e-12 * std::max(1.0, box.upper(i) - box.lower(i));
    if ((theta(i) <= box.lower(i) + tol && grad(i) < 0.0) || (theta(i) >= box.upper(i) - tol && grad(i) > 0.0)) {
      fixed[i] = true;
      pg(i) = 0.0;
    }
  }
  return pg;
}

Vec newton_direction(const Mat& hess, const Vec& grad, const std::vector<bool>& fixed) {
  const Eigen::Index k = grad.size();
  std::vector<Eigen::Index> free;
  for (Eigen::Index i = 0; i < k; ++i)
    if (!fixed[i]) free.push_back(i);
  Vec dir = Vec::Zero(k);
  if (free.empty()) return dir;
  const Eigen::Index f = static_cast<Eigen::Index>(free.size());
  Mat negH(f, f);
  Vec g(f);
  for (Eigen::Index a = 0; a < f; ++a) {
    g(a) = grad(free[a]);
    for (Eigen::Index b = 0; b < f; ++b) negH(a, b) = -hess(free[a], free[b]);
  }
  negH = symmetrize(negH);
  double tau = 0.0;
  const double scale = std::max(negH.norm(), 1e-12);
  for (int attempt = 0; attempt < 60; ++attempt) {
    Eigen::LLT<Mat> llt(negH + tau * Mat::Identity(f, f));
    if (llt.info() == Eigen::Success && negH.allFinite()) {
      const Vec step = llt.solve(g);
      if (step.allFinite()) {
        for (Eigen::Index a = 0; a < f; ++a) dir(free[a]) = step(a);
        return dir;
      }
    }
    tau = tau == 0.0 ? 1e-8 * scale : tau * 10.0;
  }
  for (Eigen::Index a = 0; a < f; ++a) dir(free[a]) = g(a) / scale;
  return dir;
}

LocalResult local_solve(const Objective& obj, const Vec& start, const ParamSpace& box, const EstimateOptions& opts) {
  LocalResult res;
  res.theta = box.project(start);
  res.eval = obj.full(res.theta);
  if (!res.eval.ok) {
    res.message = "objective not finite at start";
    return res;
  }
  std::vector<bool> fixed;
  for (long it = 0; it < opts.max_iter; ++it) {
    res.iterations = it;
    const Vec pg = projected_gradient(res.theta, res.eval.grad, box, fixed);
    res.pg_norm = pg.norm();
    if (res.pg_norm < opts.gtol) {
      res.converged = true;
      return res;
    }
    bool accepted = false;
    Vec candidate;
    double cand_value = 0.0;
    for (int pass = 0; pass < 2 && !accepted; ++pass) {
      const Vec dir = pass == 0 ? newton_direction(res.eval.hess, res.eval.grad, fixed) : Vec(pg / std::max(1.0, pg.norm()));
      double alpha = 1.0;
      for (int ls = 0; ls < 50; ++ls, alpha *= 0.5) {
        candidate = box.project(res.theta + alpha * dir);
        const Vec delta = candidate - res.theta;
        if (delta.norm() <= opts.step_tol * (1.0 + res.theta.norm())) break;
        cand_value = obj.value(candidate);
        if (std::isfinite(cand_value) && cand_value >= res.eval.value + 1e-4 * res.eval.grad.dot(delta)) {
          accepted = true;
          break;
        }
      }
    }
    if (!accepted) {
      res.converged = res.pg_norm < 10.0 * opts.gtol;
      res.message = "line search made no progress";
      return res;
    }
    const double step = (candidate - res.theta).norm();
    Eval next = obj.full(candidate);
    if (!next.ok) {
      res.message = "derivatives not finite at accepted step";
      return res;
    }
    res.theta = candidate;
    res.eval = std::move(next);
    if (step <= opts.step_tol * (1.0 + res.theta.norm())) {
      res.pg_norm = projected_gradient(res.theta, res.eval.grad, box, fixed).norm();
      res.converged = true;
      res.iterations = it + 1;
      return res;
    }
  }
  res.iterations = opts.max_iter;
  res.message = "iteration limit reached";
  return res;
}

Objective likelihood_objective(const Model& model, const Mat& data) {
  const double T = static_cast<double>(data.rows());
  Objective obj;
  obj.value = [&model, &data, T](const Vec& theta) {
    try {
      const double v = quasi_loglik(model, theta, data, false).loglik / T;
      return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
    } catch (const std::exception&) {
      return -std::numeric_limits<double>::infinity();
    }
  };
  obj.full = [&model, &data, T](const Vec& theta) {
    Eval e;
    try {
      const PassResult p = fisher_pass(model, theta, data);
      e.value = p.loglik / T;
      e.grad = p.Z / T;
      e.hess = p.dZ / T;
      e.ok = std::isfinite(e.value) && e.grad.allFinite() && e.hess.allFinite();
    } catch (const std::exception&) {
      e.ok = false;
    }
    return e;
  };
  return obj;
}

bool better(const LocalResult& a, const LocalResult& b) {
  if (!a.eval.ok) return false;
  if (!b.eval.ok) return true;
  const double tie = 1e-12 * (1.0 + std::abs(a.eval.value) + std::abs(b.eval.value));
  if (a.eval.value > b.eval.value + tie) return true;
  if (b.eval.value > a.eval.value + tie) return false;
  for (Eigen::Index i = 0; i < a.theta.size(); ++i) {
    if (a.theta(i) < b.theta(i)) return true;
    if (a.theta(i) > b.theta(i)) return false;
  }
  return false;
}

std::vector<Vec> start_points(const ParamSpace& box, const EstimateOptions& opts) {
  std::vector<Vec> starts;
  if (opts.start) {
    if (opts.start->size() != box.dim()) throw DimensionError("estimate: start has the wrong dimension");
    starts.push_back(box.project(*opts.start));
  }
  for (const Vec& p : halton_points(box, opts.n_starts)) starts.push_back(p);
  if (starts.empty()) starts.push_back(box.project(0.5 * (box.lower + box.upper)));
  return starts;
}

std::vector<LocalResult> run_starts(const Objective& obj, const std::vector<Vec>& starts, const ParamSpace& box,
                                    const EstimateOptions& opts) {
  std::vector<LocalResult> results(starts.size());
  const int threads = std::max(1, std::min<int>(opts.threads, static_cast<int>(starts.size())));
  if (threads == 1) {
    for (std::size_t i = 0; i < starts.size(); ++i) results[i] = local_solve(obj, starts[i], box, opts);
    return results;
  }
  std::mutex mutex;
  std::size_t next = 0;
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i;
        {
          std::lock_guard<std::mutex> lock(mutex);
          if (next >= starts.size()) return;
          i = next++;
        }
        results[i] = local_solve(obj, starts[i], box, opts);
      }
    });
  for (auto& t : pool) t.join();
  return results;
}

EstimationResult finish(const LocalResult& best, const ParamSpace& box, double T, int starts) {
  EstimationResult out;
  out.theta_hat = best.theta;
  out.loglik = best.eval.value * T;
  out.grad_norm = best.pg_norm;
  out.iterations = best.iterations;
  out.converged = best.converged && best.eval.ok;
  out.starts_used = starts;
  out.boundary_active.assign(best.theta.size(), false);
  for (Eigen::Index i = 0; i < best.theta.size(); ++i) {
    const double tol = 1e-8 * std::max(1.0, box.upper(i) - box.lower(i));
    out.boundary_active[i] = best.theta(i) <= box.lower(i) + tol || best.theta(i) >= box.upper(i) - tol;
  }
  if (!best.message.empty()) out.messages.push_back(best.message);
  return out;
}

}  // namespace

EstimationResult qml_estimate(const Model& model, const Mat& data, const EstimateOptions& opts) {
  if (data.rows() < 1) throw std::invalid_argument("qml_estimate: data is empty");
  validate_param_space(model.param_space());
  const ParamSpace box = model.param_space().shrunk(opts.bound_shrink);
  const Objective obj = likelihood_objective(model, data);
  const std::vector<Vec> starts = start_points(box, opts);
  const std::vector<LocalResult> results = run_starts(obj, starts, box, opts);
  std::size_t best = 0;
  for (std::size_t i = 1; i < results.size(); ++i)
    if (better(results[i], results[best])) best = i;
  EstimationResult out = finish(results[best], box, static_cast<double>(data.rows()), static_cast<int>(starts.size()));
  if (!results[best].eval.ok) out.messages.push_back("all starts failed");
  return out;
}

EstimationResult constrained_estimate(const Model& model, const Mat& data, const Constraint& constraint,
                                      const EstimateOptions& opts) {
  if (data.rows() < 1) throw std::invalid_argument("constrained_estimate: data is empty");
  const ParamSpace box = model.param_space().shrunk(opts.bound_shrink);
  const Eigen::Index mdim = constraint.dim();
  if (!constraint.R) throw std::invalid_argument("constrained_estimate: constraint function missing");
  const Vec probe = box.project(opts.start ? *opts.start : Vec(0.5 * (box.lower + box.upper)));
  if (constraint.R(probe).size() != mdim) throw DimensionError("constrained_estimate: R(θ) has the wrong length");
  check_constraint_rank(constraint, probe);

  const Objective base = likelihood_objective(model, data);
  Vec lambda = Vec::Zero(mdim);
  double mu = 10.0;
  std::vector<Vec> starts = start_points(box, opts);
  LocalResult best;
  double prev_violation = std::numeric_limits<double>::infinity();
  long total_iter = 0;
  EstimateOptions inner = opts;
  for (int outer = 0; outer < 40; ++outer) {
    Objective al;
    al.value = [&, lambda, mu](const Vec& theta) {
      const Vec c = constraint.residual(theta);
      return base.value(theta) - lambda.dot(c) - 0.5 * mu * c.squaredNorm();
    };
    al.full = [&, lambda, mu](const Vec& theta) {
      Eval e = base.full(theta);
      if (!e.ok) return e;
      const Vec c = constraint.residual(theta);
      const Mat J = constraint.jacobian(theta);
      e.value -= lambda.dot(c) + 0.5 * mu * c.squaredNorm();
      e.grad -= J.transpose() * (lambda + mu * c);
      e.hess -= mu * J.transpose() * J;
      return e;
    };
    inner.gtol = std::min(opts.gtol, 1e-3 / (1.0 + outer));
    const std::vector<LocalResult> results = run_starts(al, starts, box, inner);
    std::size_t b = 0;
    for (std::size_t i = 1; i < results.size(); ++i)
      if (better(results[i], results[b])) b = i;
    best = results[b];
    total_iter += best.iterations;
    if (!best.eval.ok) break;
    starts.assign(1, best.theta);
    const Vec c = constraint.residual(best.theta);
    const double violation = c.norm();
    lambda += mu * c;
    if (violation <= 1e-10 && best.converged) break;
    if (violation > 0.25 * prev_violation) mu *= 10.0;
    prev_violation = violation;
  }
  if (!best.eval.ok) {
    EstimationResult fail;
    fail.theta_hat = best.theta;
    fail.messages.push_back("all starts failed");
    return fail;
  }
  const Vec c = constraint.residual(best.theta);
  if (c.norm() > 1e-6) throw std::invalid_argument("constrained_estimate: constraint infeasible within Θ");

  // report the likelihood itself, not the augmented objective
  const Eval at = base.full(best.theta);
  best.eval = at;
  const Mat J = constraint.jacobian(best.theta);
  EstimationResult out = finish(best, box, static_cast<double>(data.rows()), static_cast<int>(start_points(box, opts).size()));
  out.iterations = total_iter;
  out.multiplier = J.transpose().colPivHouseholderQr().solve(at.grad);
  const double residual = (at.grad - J.transpose() * out.multiplier).norm();
  out.grad_norm = residual;
  out.converged = out.converged && at.ok && residual <= std::max(10.0 * opts.gtol, 1e-5);
  return out;
}

std::vector<EstimationResult> estimate_path(const Model& model, const Mat& data, const std::vector<long>& grid,
                                            const EstimateOptions& opts) {
  std::vector<EstimationResult> out;
  long prev = 0;
  EstimateOptions o = opts;
  for (long t : grid) {
    if (t <= prev || t > data.rows()) throw std::invalid_argument("estimate_path: grid must increase within 1..T");
    prev = t;
    out.push_back(qml_estimate(model, data.topRows(t), o));
    o.start = out.back().theta_hat;
    o.n_starts = 0;
  }
  return out;
}

}  // namespace pssm
