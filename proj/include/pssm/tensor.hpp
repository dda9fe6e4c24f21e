#pragma once

#include "pssm/tensor_linalg.hpp"

#include <span>
#include <vector>

namespace pssm {

// Dense tensor with row-major layout: the last axis is the fastest. For equal axis sizes
// this is the Kronecker layout, i.e. x⊗y has entry (i,j) at i*dim(y)+j.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::vector<Eigen::Index> dims, Vec data);

  static Tensor zeros(std::vector<Eigen::Index> dims);
  static Tensor scalar(double value);

  const std::vector<Eigen::Index>& dims() const { return dims_; }
  int order() const { return static_cast<int>(dims_.size()); }
  Eigen::Index size() const { return data_.size(); }
  const Vec& data() const { return data_; }
  Vec& data() { return data_; }

  Tensor reshaped(std::vector<Eigen::Index> dims) const;

 private:
  std::vector<Eigen::Index> dims_;
  Vec data_ = Vec::Ones(1);
};

// Contracts axis `axis` with m: out[.., i, ..] = Σ_j m(i,j) t[.., j, ..].
Tensor mode_product(const Tensor& t, int axis, const Mat& m);

// v ⊗ t, adding a leading axis.
Tensor outer(const Vec& v, const Tensor& t);

// Output axis q is input axis perm[q].
Tensor permute_axes(const Tensor& t, std::span<const int> perm);

// Replace axes [first, first+count) by one merged axis.
Tensor merge_axes(const Tensor& t, int first, int count);

}  // namespace pssm
