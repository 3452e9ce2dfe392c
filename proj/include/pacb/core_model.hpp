#pragma once

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace pacb {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Regression coefficients w of a linear predictor x -> w.x.
using WeightVector = Eigen::VectorXd;

// Stationary second moments of a regressor sequence X_1, X_2, ...
// cross_covariance(l) is E[X_{i+l} X_i^T], independent of i.
class JointCovarianceProvider {
 public:
  virtual ~JointCovarianceProvider() = default;
  [[nodiscard]] virtual Index dim() const = 0;
  [[nodiscard]] virtual Matrix cross_covariance(Index lag) const = 0;
};

// X_i mutually independent with covariance q_x.
class IndependentBlocks final : public JointCovarianceProvider {
 public:
  explicit IndependentBlocks(Matrix q_x);
  [[nodiscard]] Index dim() const override { return q_x_.rows(); }
  [[nodiscard]] Matrix cross_covariance(Index lag) const override;

 private:
  Matrix q_x_;
};

// Explicit lag blocks; lags past the end of the list are zero.
class LagBlocks final : public JointCovarianceProvider {
 public:
  explicit LagBlocks(std::vector<Matrix> blocks);
  [[nodiscard]] Index dim() const override { return blocks_.front().rows(); }
  [[nodiscard]] Matrix cross_covariance(Index lag) const override;
  [[nodiscard]] const std::vector<Matrix>& blocks() const { return blocks_; }

 private:
  std::vector<Matrix> blocks_;
};

// X_i ~ N(0, sigma_x^2 I) independent; Y_i = w*.X_i + eps_i.
struct IIDIsotropic {
  WeightVector w_star;
  double sigma_x = 1.0;
  double sigma_eps = 1.0;
};

// X_i ~ N(0, q_x), jointly Gaussian with dependence described by
// joint_cov_source; Y_i = w*.X_i + eps_i with eps_i independent of X.
struct CorrelatedGaussian {
  WeightVector w_star;
  Matrix q_x;
  std::shared_ptr<const JointCovarianceProvider> joint_cov_source;
  double sigma_eps = 1.0;
};

// y_t = sum_i a_i y_{t-i} + sum_i b_i u_{t-i} + e_t with white Gaussian u, e.
struct Arx {
  Vector a;
  Vector b;
  double sigma_e = 1.0;
  double sigma_u = 1.0;

  [[nodiscard]] Index order() const { return a.size(); }
};

using DataModel = std::variant<IIDIsotropic, CorrelatedGaussian, Arx>;

struct Dataset {
  Matrix x;  // n x d
  Vector y;  // n

  [[nodiscard]] Index n() const { return x.rows(); }
  [[nodiscard]] Index d() const { return x.cols(); }
};

// Builds a CorrelatedGaussian whose marginal covariance is the provider's lag-0 block.
CorrelatedGaussian make_correlated(WeightVector w_star,
                                   std::shared_ptr<const JointCovarianceProvider> source,
                                   double sigma_eps);

// Throws InvalidArgument / InstabilityError if the model breaks its invariants.
void validate(const DataModel& model);
void validate(const Dataset& data);

// Regressor dimension d (2k for an ARX model of order k).
Index dimension(const DataModel& model);

// Noise standard deviation of the labels.
double noise_sigma(const DataModel& model);

// Spectral radius of the companion matrix of a(z) = z^k - sum_i a_i z^{k-i}.
double arx_spectral_radius(const Arx& model);
// Throws InstabilityError unless the spectral radius is below 1 - 1e-9.
void check_arx_stable(const Arx& model);
// Best linear predictor (a || b) for the recast regression problem.
WeightVector arx_true_weights(const Arx& model);

// Everything the quadratic-loss formulas need from a data model.
struct RegressionMoments {
  WeightVector w_star;
  Matrix q_x;
  double sigma_eps2 = 0.0;
  std::optional<double> iid_sigma_x2;  // set for IIDIsotropic

  [[nodiscard]] Index dim() const { return w_star.size(); }
  // ||w* - w||^2
  [[nodiscard]] double distance2(const WeightVector& w) const;
  // Generalization loss v_w.
  [[nodiscard]] double v(const WeightVector& w) const;
};

// For ARX models this solves the stationary covariance; call once and reuse.
RegressionMoments regression_moments(const DataModel& model);

double squared_loss(double y_hat, double y);

// (1/n) sum_i (y_i - w.x_i)^2 with pairwise summation.
double empirical_loss(const WeightVector& w, const Dataset& data);

double generalization_loss(const WeightVector& w, const DataModel& model);
double generalization_loss(const WeightVector& w, const RegressionMoments& moments);

struct LossTerms {
  double v_w = 0.0;
  double rho_nw = 0.0;
};

// v_w and rho_{n,w} = rho_n ||w* - w||^2 + sigma_eps^2.
LossTerms v_and_rho_terms(const WeightVector& w, const DataModel& model, double rho_n);
LossTerms v_and_rho_terms(const WeightVector& w, const RegressionMoments& moments, double rho_n);

// E[min(Z^2, L)] for Z ~ N(mean, sd^2); the squared loss clipped to [0, L].
double clipped_square_moment(double mean, double sd, double loss_bound);

// (1/n) sum_i min((y_i - w.x_i)^2, L)
double clipped_empirical_loss(const WeightVector& w, const Dataset& data, double loss_bound);

// Pairwise (cascade) summation; error grows as O(log n) instead of O(n).
double pairwise_sum(std::span<const double> values);

}  // namespace pacb
