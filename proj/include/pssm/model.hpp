#pragma once

#include "pssm/tensor_linalg.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace pssm {

struct ParamSpace {
  Vec lower;
  Vec upper;

  Eigen::Index dim() const { return lower.size(); }
  bool contains(const Vec& theta, double slack = 0.0) const;
  Vec project(const Vec& theta) const;
  ParamSpace shrunk(double margin) const;
};

void validate_param_space(const ParamSpace& space);

// E[N^{⊗s} | X = x] = Σ_{p=0}^{s} coeff(s,p) x^{⊗p} for s = 2..max_order. Order 2 is the
// triple (Q_{⊗2}, Q, q) = (coeff(2,2), coeff(2,1), coeff(2,0)). Odd orders default to zero.
class NoiseMoments {
 public:
  NoiseMoments() = default;
  NoiseMoments(Eigen::Index dim, int max_order);

  Eigen::Index dim() const { return dim_; }
  int max_order() const { return max_order_; }
  Mat& coeff(int s, int p);
  const Mat& coeff(int s, int p) const;
  bool is_zero(int s, int p) const;
  Vec conditional(int s, const Vec& x) const;
  NoiseMoments truncated(int max_order) const;

 private:
  Eigen::Index dim_ = 0;
  int max_order_ = 0;
  std::vector<std::vector<Mat>> coeff_;
};

struct InitialLaw {
  enum class Kind { dirac, gaussian };
  Kind kind = Kind::dirac;
  Vec mean;
  Mat cov;

  static InitialLaw dirac(const Vec& x0);
  static InitialLaw gaussian(const Vec& mean, const Mat& cov);
};

// Value and parameter derivatives of a matrix-valued map; d2 is indexed i*k+j.
struct MatrixJet {
  Mat value;
  std::vector<Mat> d1;
  std::vector<Mat> d2;
  bool one_sided = false;

  const Mat& second(Eigen::Index i, Eigen::Index j) const { return d2[i * d1.size() + j]; }
};

// The capability interface every concrete parametric polynomial state space model supplies:
// X(t) = a(θ) + A(θ) X(t−1) + N(t), with the first m components unobservable.
class Model {
 public:
  virtual ~Model() = default;

  virtual std::string name() const = 0;
  virtual Eigen::Index state_dim() const = 0;
  virtual Eigen::Index hidden_dim() const = 0;
  virtual Eigen::Index param_dim() const { return param_space().dim(); }
  virtual const ParamSpace& param_space() const = 0;
  virtual std::vector<std::string> param_names() const;

  virtual Vec transition_vector(const Vec& theta) const = 0;
  virtual Mat transition_matrix(const Vec& theta) const = 0;
  virtual NoiseMoments noise_moments(const Vec& theta, int max_order) const = 0;
  virtual InitialLaw initial_law(const Vec& theta) const = 0;
  virtual int max_noise_order() const { return 4; }

  // Optional analytic derivatives; empty means finite differences are used.
  virtual std::optional<MatrixJet> transition_vector_jet(const Vec&, int) const { return std::nullopt; }
  virtual std::optional<MatrixJet> transition_matrix_jet(const Vec&, int) const { return std::nullopt; }

  Eigen::Index observed_dim() const { return state_dim() - hidden_dim(); }
  Mat observation_matrix() const;
};

// H = (δ_{m+i,j}), x_o = H x.
Mat observation_matrix(Eigen::Index d, Eigen::Index m);

// Exposes a subset of a base model's parameters; the others stay fixed.
class SubsetModel : public Model {
 public:
  SubsetModel(std::shared_ptr<const Model> base, std::vector<Eigen::Index> free, Vec fixed_theta);

  std::string name() const override;
  Eigen::Index state_dim() const override { return base_->state_dim(); }
  Eigen::Index hidden_dim() const override { return base_->hidden_dim(); }
  const ParamSpace& param_space() const override { return space_; }
  std::vector<std::string> param_names() const override;

  Vec transition_vector(const Vec& theta) const override;
  Mat transition_matrix(const Vec& theta) const override;
  NoiseMoments noise_moments(const Vec& theta, int max_order) const override;
  InitialLaw initial_law(const Vec& theta) const override;
  int max_noise_order() const override { return base_->max_noise_order(); }
  std::optional<MatrixJet> transition_vector_jet(const Vec& theta, int order) const override;
  std::optional<MatrixJet> transition_matrix_jet(const Vec& theta, int order) const override;

  Vec full_theta(const Vec& theta) const;
  const Model& base() const { return *base_; }
  const std::vector<Eigen::Index>& free_indices() const { return free_; }

 private:
  std::optional<MatrixJet> restrict_jet(std::optional<MatrixJet> jet) const;

  std::shared_ptr<const Model> base_;
  std::vector<Eigen::Index> free_;
  Vec fixed_;
  ParamSpace space_;
};

// Linear change of state coordinates X' = diag(scale) X. The quasi-likelihood estimator is
// unchanged; badly scaled components (e.g. high powers of small increments) become O(1).
class ScaledModel : public Model {
 public:
  ScaledModel(std::shared_ptr<const Model> base, Vec scale);

  std::string name() const override { return base_->name(); }
  Eigen::Index state_dim() const override { return base_->state_dim(); }
  Eigen::Index hidden_dim() const override { return base_->hidden_dim(); }
  const ParamSpace& param_space() const override { return base_->param_space(); }
  std::vector<std::string> param_names() const override { return base_->param_names(); }

  Vec transition_vector(const Vec& theta) const override;
  Mat transition_matrix(const Vec& theta) const override;
  NoiseMoments noise_moments(const Vec& theta, int max_order) const override;
  InitialLaw initial_law(const Vec& theta) const override;
  int max_noise_order() const override { return base_->max_noise_order(); }
  std::optional<MatrixJet> transition_vector_jet(const Vec& theta, int order) const override;
  std::optional<MatrixJet> transition_matrix_jet(const Vec& theta, int order) const override;

  const Vec& scale() const { return scale_; }

 private:
  std::shared_ptr<const Model> base_;
  Vec scale_;
};

}  // namespace pssm
