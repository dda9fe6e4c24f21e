#pragma once

#include "pssm/model.hpp"

#include <array>
#include <functional>
#include <vector>

namespace pssm {

// Finite-difference evaluation points around θ together with the rule that turns values at
// those points into first and second derivatives. Central differences with steps
// h₁ = ε^{1/3}max(1,|θ_j|) and h₂ = ε^{1/4}max(1,|θ_j|); one-sided near the box boundary.
class JetStencil {
 public:
  JetStencil(const Vec& theta, int order, const ParamSpace* box = nullptr);

  const std::vector<Vec>& points() const { return points_; }
  int order() const { return order_; }
  bool one_sided() const { return one_sided_; }

  MatrixJet combine(const std::function<const Mat&(std::size_t)>& value_at) const;
  MatrixJet combine(const std::vector<Mat>& values) const;

 private:
  std::size_t add(const Vec& point);

  struct Coord {
    double h1 = 0.0, h2 = 0.0, dir = 1.0;
    bool centered = true;
    std::size_t p1a = 0, p1b = 0, p2a = 0, p2b = 0;
  };
  int order_;
  bool one_sided_ = false;
  std::vector<Vec> points_;
  std::vector<Coord> coords_;
  std::vector<std::array<std::size_t, 4>> mixed_;  // i<j, flattened i*k+j
};

MatrixJet param_jet(const std::function<Mat(const Vec&)>& fn, const Vec& theta, int order,
                    const ParamSpace* box = nullptr);

}  // namespace pssm
