#include "pssm/model.hpp"

namespace pssm {

bool ParamSpace::contains(const Vec& theta, double slack) const {
  if (theta.size() != lower.size()) return false;
  return ((theta.array() >= lower.array() - slack) && (theta.array() <= upper.array() + slack)).all();
}

Vec ParamSpace::project(const Vec& theta) const { return theta.cwiseMax(lower).cwiseMin(upper); }

ParamSpace ParamSpace::shrunk(double margin) const {
  ParamSpace out{lower, upper};
  const Vec width = upper - lower;
  for (Eigen::Index i = 0; i < dim(); ++i) {
    const double m = std::min(margin, 0.25 * width(i));
    out.lower(i) += m;
    out.upper(i) -= m;
  }
  return out;
}

void validate_param_space(const ParamSpace& space) {
  if (space.lower.size() == 0 || space.lower.size() != space.upper.size())
    throw DimensionError("ParamSpace: bounds must be non-empty and of equal length");
  if (!(space.lower.array() < space.upper.array()).all())
    throw std::invalid_argument("ParamSpace: lower must be strictly below upper");
}

NoiseMoments::NoiseMoments(Eigen::Index dim, int max_order) : dim_(dim), max_order_(max_order) {
  if (max_order < 2 || max_order > 4) throw DimensionError("NoiseMoments: order must be in 2..4");
  coeff_.resize(max_order + 1);
  Eigen::Index rows = dim;
  for (int s = 2; s <= max_order; ++s) {
    rows *= dim;
    Eigen::Index cols = 1;
    for (int p = 0; p <= s; ++p) {
      coeff_[s].push_back(Mat::Zero(rows, cols));
      cols *= dim;
    }
  }
}

Mat& NoiseMoments::coeff(int s, int p) {
  if (s < 2 || s > max_order_ || p < 0 || p > s) throw DimensionError("NoiseMoments: index out of range");
  return coeff_[s][p];
}

const Mat& NoiseMoments::coeff(int s, int p) const {
  if (s < 2 || s > max_order_ || p < 0 || p > s) throw DimensionError("NoiseMoments: index out of range");
  return coeff_[s][p];
}

bool NoiseMoments::is_zero(int s, int p) const { return coeff(s, p).isZero(0.0); }

Vec NoiseMoments::conditional(int s, const Vec& x) const {
  Vec out = coeff(s, 0).col(0);
  Vec power = Vec::Ones(1);
  for (int p = 1; p <= s; ++p) {
    power = kron(power, x);
    out += coeff(s, p) * power;
  }
  return out;
}

NoiseMoments NoiseMoments::truncated(int max_order) const {
  NoiseMoments out(dim_, max_order);
  for (int s = 2; s <= max_order; ++s)
    for (int p = 0; p <= s; ++p) out.coeff(s, p) = coeff(s, p);
  return out;
}

InitialLaw InitialLaw::dirac(const Vec& x0) {
  return InitialLaw{Kind::dirac, x0, Mat::Zero(x0.size(), x0.size())};
}

InitialLaw InitialLaw::gaussian(const Vec& mean, const Mat& cov) { return InitialLaw{Kind::gaussian, mean, cov}; }

std::vector<std::string> Model::param_names() const {
  std::vector<std::string> out;
  for (Eigen::Index i = 0; i < param_dim(); ++i) out.push_back("theta" + std::to_string(i + 1));
  return out;
}

Mat Model::observation_matrix() const { return pssm::observation_matrix(state_dim(), hidden_dim()); }

Mat observation_matrix(Eigen::Index d, Eigen::Index m) {
  Mat h = Mat::Zero(d - m, d);
  for (Eigen::Index i = 0; i < d - m; ++i) h(i, m + i) = 1.0;
  return h;
}

SubsetModel::SubsetModel(std::shared_ptr<const Model> base, std::vector<Eigen::Index> free, Vec fixed_theta)
    : base_(std::move(base)), free_(std::move(free)), fixed_(std::move(fixed_theta)) {
  if (free_.empty()) throw DimensionError("SubsetModel: at least one free parameter required");
  if (fixed_.size() != base_->param_dim()) throw DimensionError("SubsetModel: fixed vector has wrong length");
  const auto& bs = base_->param_space();
  space_.lower.resize(free_.size());
  space_.upper.resize(free_.size());
  for (std::size_t i = 0; i < free_.size(); ++i) {
    if (free_[i] < 0 || free_[i] >= base_->param_dim()) throw DimensionError("SubsetModel: free index out of range");
    space_.lower(i) = bs.lower(free_[i]);
    space_.upper(i) = bs.upper(free_[i]);
  }
}

std::string SubsetModel::name() const { return base_->name() + "-subset"; }

std::vector<std::string> SubsetModel::param_names() const {
  const auto all = base_->param_names();
  std::vector<std::string> out;
  for (auto i : free_) out.push_back(all[i]);
  return out;
}

Vec SubsetModel::full_theta(const Vec& theta) const {
  if (theta.size() != static_cast<Eigen::Index>(free_.size())) throw DimensionError("SubsetModel: wrong theta length");
  Vec full = fixed_;
  for (std::size_t i = 0; i < free_.size(); ++i) full(free_[i]) = theta(i);
  return full;
}

Vec SubsetModel::transition_vector(const Vec& theta) const { return base_->transition_vector(full_theta(theta)); }
Mat SubsetModel::transition_matrix(const Vec& theta) const { return base_->transition_matrix(full_theta(theta)); }
NoiseMoments SubsetModel::noise_moments(const Vec& theta, int max_order) const {
  return base_->noise_moments(full_theta(theta), max_order);
}
InitialLaw SubsetModel::initial_law(const Vec& theta) const { return base_->initial_law(full_theta(theta)); }

std::optional<MatrixJet> SubsetModel::restrict_jet(std::optional<MatrixJet> jet) const {
  if (!jet) return jet;
  const std::size_t kb = jet->d1.size(), k = free_.size();
  MatrixJet out;
  out.value = jet->value;
  out.one_sided = jet->one_sided;
  for (auto i : free_) out.d1.push_back(jet->d1[i]);
  if (!jet->d2.empty())
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) out.d2.push_back(jet->d2[free_[i] * kb + free_[j]]);
  return out;
}

std::optional<MatrixJet> SubsetModel::transition_vector_jet(const Vec& theta, int order) const {
  return restrict_jet(base_->transition_vector_jet(full_theta(theta), order));
}

std::optional<MatrixJet> SubsetModel::transition_matrix_jet(const Vec& theta, int order) const {
  return restrict_jet(base_->transition_matrix_jet(full_theta(theta), order));
}

ScaledModel::ScaledModel(std::shared_ptr<const Model> base, Vec scale) : base_(std::move(base)), scale_(std::move(scale)) {
  if (scale_.size() != base_->state_dim()) throw DimensionError("ScaledModel: scale has wrong length");
  if ((scale_.array() <= 0.0).any()) throw DimensionError("ScaledModel: scale must be positive");
}

Vec ScaledModel::transition_vector(const Vec& theta) const { return scale_.asDiagonal() * base_->transition_vector(theta); }

Mat ScaledModel::transition_matrix(const Vec& theta) const {
  return scale_.asDiagonal() * base_->transition_matrix(theta) * scale_.cwiseInverse().asDiagonal();
}

NoiseMoments ScaledModel::noise_moments(const Vec& theta, int max_order) const {
  const NoiseMoments base = base_->noise_moments(theta, max_order);
  NoiseMoments out(base.dim(), base.max_order());
  const Vec inv = scale_.cwiseInverse();
  for (int s = 2; s <= base.max_order(); ++s) {
    Vec left = Vec::Ones(1);
    for (int r = 0; r < s; ++r) left = kron(left, scale_);
    Vec right = Vec::Ones(1);
    for (int p = 0; p <= s; ++p) {
      out.coeff(s, p) = left.asDiagonal() * base.coeff(s, p) * right.asDiagonal();
      right = kron(right, inv);
    }
  }
  return out;
}

InitialLaw ScaledModel::initial_law(const Vec& theta) const {
  InitialLaw law = base_->initial_law(theta);
  law.mean = scale_.asDiagonal() * law.mean;
  if (law.cov.size() > 0) law.cov = scale_.asDiagonal() * law.cov * scale_.asDiagonal();
  return law;
}

namespace {

MatrixJet scale_jet(MatrixJet jet, const Vec& left, const Vec& right) {
  auto apply = [&](Mat& m) { m = left.asDiagonal() * m * right.asDiagonal(); };
  apply(jet.value);
  for (auto& m : jet.d1) apply(m);
  for (auto& m : jet.d2) apply(m);
  return jet;
}

}  // namespace

std::optional<MatrixJet> ScaledModel::transition_vector_jet(const Vec& theta, int order) const {
  auto jet = base_->transition_vector_jet(theta, order);
  if (!jet) return jet;
  return scale_jet(std::move(*jet), scale_, Vec::Ones(1));
}

std::optional<MatrixJet> ScaledModel::transition_matrix_jet(const Vec& theta, int order) const {
  auto jet = base_->transition_matrix_jet(theta, order);
  if (!jet) return jet;
  return scale_jet(std::move(*jet), scale_, scale_.cwiseInverse());
}

}  // namespace pssm
