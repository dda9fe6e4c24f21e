#include "pssm/param_jet.hpp"

#include <cmath>
#include <limits>

namespace pssm {

JetStencil::JetStencil(const Vec& theta, int order, const ParamSpace* box) : order_(order) {
  if (order < 0 || order > 2) throw DimensionError("param_jet: order must be 0, 1 or 2");
  const double eps = std::numeric_limits<double>::epsilon();
  const Eigen::Index k = theta.size();
  points_.push_back(theta);
  if (order == 0) return;
  coords_.resize(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    Coord& c = coords_[j];
    const double scale = std::max(1.0, std::abs(theta(j)));
    c.h1 = std::cbrt(eps) * scale;
    c.h2 = std::pow(eps, 0.25) * scale;
    const double reach = 2.0 * (order == 2 ? c.h2 : c.h1);
    if (box) {
      const bool low = theta(j) - reach < box->lower(j);
      const bool high = theta(j) + reach > box->upper(j);
      if (low != high) {
        c.centered = false;
        c.dir = low ? 1.0 : -1.0;
        one_sided_ = true;
      }
    }
    auto shifted = [&](double step) {
      Vec p = theta;
      p(j) += step;
      return p;
    };
    if (c.centered) {
      c.p1a = add(shifted(c.h1));
      c.p1b = add(shifted(-c.h1));
    } else {
      c.p1a = add(shifted(c.dir * c.h1));
      c.p1b = add(shifted(2.0 * c.dir * c.h1));
    }
    if (order == 2) {
      if (c.centered) {
        c.p2a = add(shifted(c.h2));
        c.p2b = add(shifted(-c.h2));
      } else {
        c.p2a = add(shifted(c.dir * c.h2));
        c.p2b = add(shifted(2.0 * c.dir * c.h2));
      }
    }
  }
  if (order == 2) {
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = i + 1; j < k; ++j) {
        const Coord &ci = coords_[i], &cj = coords_[j];
        auto pt = [&](double si, double sj) {
          Vec p = theta;
          p(i) += si;
          p(j) += sj;
          return p;
        };
        std::array<std::size_t, 4> idx{};
        if (ci.centered && cj.centered) {
          idx = {add(pt(ci.h2, cj.h2)), add(pt(ci.h2, -cj.h2)), add(pt(-ci.h2, cj.h2)), add(pt(-ci.h2, -cj.h2))};
        } else {
          const double si = ci.dir * ci.h2, sj = cj.dir * cj.h2;
          idx = {add(pt(si, sj)), add(pt(si, 0.0)), add(pt(0.0, sj)), 0};
        }
        mixed_.push_back(idx);
      }
  }
}

std::size_t JetStencil::add(const Vec& point) {
  points_.push_back(point);
  return points_.size() - 1;
}

MatrixJet JetStencil::combine(const std::vector<Mat>& values) const {
  return combine([&](std::size_t p) -> const Mat& { return values[p]; });
}

MatrixJet JetStencil::combine(const std::function<const Mat&(std::size_t)>& value_at) const {
  MatrixJet jet;
  jet.value = value_at(0);
  jet.one_sided = one_sided_;
  if (order_ == 0) return jet;
  const std::size_t k = coords_.size();
  const Mat& f0 = jet.value;
  for (const Coord& c : coords_) {
    if (c.centered)
      jet.d1.push_back((value_at(c.p1a) - value_at(c.p1b)) / (2.0 * c.h1));
    else
      jet.d1.push_back((-3.0 * f0 + 4.0 * value_at(c.p1a) - value_at(c.p1b)) / (2.0 * c.dir * c.h1));
  }
  if (order_ < 2) return jet;
  jet.d2.assign(k * k, Mat());
  for (std::size_t j = 0; j < k; ++j) {
    const Coord& c = coords_[j];
    if (c.centered)
      jet.d2[j * k + j] = (value_at(c.p2a) - 2.0 * f0 + value_at(c.p2b)) / (c.h2 * c.h2);
    else
      jet.d2[j * k + j] = (f0 - 2.0 * value_at(c.p2a) + value_at(c.p2b)) / (c.h2 * c.h2);
  }
  std::size_t m = 0;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j, ++m) {
      const Coord &ci = coords_[i], &cj = coords_[j];
      const auto& idx = mixed_[m];
      Mat v;
      if (ci.centered && cj.centered)
        v = (value_at(idx[0]) - value_at(idx[1]) - value_at(idx[2]) + value_at(idx[3])) / (4.0 * ci.h2 * cj.h2);
      else
        v = (value_at(idx[0]) - value_at(idx[1]) - value_at(idx[2]) + f0) / (ci.dir * ci.h2 * cj.dir * cj.h2);
      jet.d2[i * k + j] = v;
      jet.d2[j * k + i] = v;
    }
  return jet;
}

MatrixJet param_jet(const std::function<Mat(const Vec&)>& fn, const Vec& theta, int order, const ParamSpace* box) {
  JetStencil stencil(theta, order, box);
  std::vector<Mat> values;
  values.reserve(stencil.points().size());
  for (const auto& p : stencil.points()) values.push_back(fn(p));
  return stencil.combine(values);
}

}  // namespace pssm
