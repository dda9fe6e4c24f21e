#include "pssm/tensor.hpp"

#include <numeric>

namespace pssm {

namespace {

Eigen::Index product(const std::vector<Eigen::Index>& dims, std::size_t begin, std::size_t end) {
  Eigen::Index p = 1;
  for (std::size_t i = begin; i < end; ++i) p *= dims[i];
  return p;
}

using RowMajorMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

Tensor::Tensor(std::vector<Eigen::Index> dims, Vec data) : dims_(std::move(dims)), data_(std::move(data)) {
  if (product(dims_, 0, dims_.size()) != data_.size()) throw DimensionError("Tensor: data size does not match dims");
}

Tensor Tensor::zeros(std::vector<Eigen::Index> dims) {
  const Eigen::Index n = product(dims, 0, dims.size());
  return Tensor(std::move(dims), Vec::Zero(n));
}

Tensor Tensor::scalar(double value) { return Tensor({}, Vec::Constant(1, value)); }

Tensor Tensor::reshaped(std::vector<Eigen::Index> dims) const { return Tensor(std::move(dims), data_); }

Tensor mode_product(const Tensor& t, int axis, const Mat& m) {
  const auto& dims = t.dims();
  if (axis < 0 || axis >= t.order()) throw DimensionError("mode_product: axis out of range");
  if (m.cols() != dims[axis]) throw DimensionError("mode_product: matrix does not match axis size");
  const Eigen::Index outer_n = product(dims, 0, axis);
  const Eigen::Index inner_n = product(dims, axis + 1, dims.size());
  std::vector<Eigen::Index> out_dims = dims;
  out_dims[axis] = m.rows();
  Vec out(outer_n * m.rows() * inner_n);
  const Eigen::Index in_block = dims[axis] * inner_n, out_block = m.rows() * inner_n;
  for (Eigen::Index o = 0; o < outer_n; ++o) {
    Eigen::Map<const RowMajorMat> x(t.data().data() + o * in_block, dims[axis], inner_n);
    Eigen::Map<RowMajorMat> y(out.data() + o * out_block, m.rows(), inner_n);
    y.noalias() = m * x;
  }
  return Tensor(std::move(out_dims), std::move(out));
}

Tensor outer(const Vec& v, const Tensor& t) {
  std::vector<Eigen::Index> dims{v.size()};
  dims.insert(dims.end(), t.dims().begin(), t.dims().end());
  Vec out(v.size() * t.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out.segment(i * t.size(), t.size()) = v(i) * t.data();
  return Tensor(std::move(dims), std::move(out));
}

Tensor permute_axes(const Tensor& t, std::span<const int> perm) {
  const int q = t.order();
  if (static_cast<int>(perm.size()) != q) throw DimensionError("permute_axes: permutation length mismatch");
  bool identity = true;
  for (int i = 0; i < q; ++i) identity = identity && perm[i] == i;
  if (identity) return t;
  const auto& dims = t.dims();
  std::vector<Eigen::Index> in_stride(q), out_dims(q);
  Eigen::Index s = 1;
  for (int i = q - 1; i >= 0; --i) {
    in_stride[i] = s;
    s *= dims[i];
  }
  std::vector<Eigen::Index> stride(q);
  for (int i = 0; i < q; ++i) {
    out_dims[i] = dims[perm[i]];
    stride[i] = in_stride[perm[i]];
  }
  Vec out(t.size());
  std::vector<Eigen::Index> idx(q, 0);
  Eigen::Index src = 0;
  const double* in = t.data().data();
  for (Eigen::Index k = 0; k < t.size(); ++k) {
    out(k) = in[src];
    for (int a = q - 1; a >= 0; --a) {
      if (++idx[a] < out_dims[a]) {
        src += stride[a];
        break;
      }
      src -= stride[a] * (out_dims[a] - 1);
      idx[a] = 0;
    }
  }
  return Tensor(std::move(out_dims), std::move(out));
}

Tensor merge_axes(const Tensor& t, int first, int count) {
  const auto& dims = t.dims();
  if (first < 0 || count < 0 || first + count > t.order()) throw DimensionError("merge_axes: range out of bounds");
  std::vector<Eigen::Index> out(dims.begin(), dims.begin() + first);
  out.push_back(product(dims, first, first + count));
  out.insert(out.end(), dims.begin() + first + count, dims.end());
  return t.reshaped(std::move(out));
}

}  // namespace pssm
