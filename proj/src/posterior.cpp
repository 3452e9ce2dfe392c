#include "pacb/posterior.hpp"

#include "pacb/errors.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <vector>
#include <numbers>
#include <string>

namespace pacb {
namespace {

void require_dims(Index got, Index want, const char* what) {
  if (got != want) {
    throw DimensionMismatch(std::string(what) + ": dimension " + std::to_string(got) + " does not match " +
                            std::to_string(want));
  }
}

Matrix cholesky_lower(const Matrix& cov) {
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) throw InvalidArgument("covariance is not positive definite");
  return llt.matrixL();
}

double log_det_from_cholesky(const Matrix& lower) { return 2.0 * lower.diagonal().array().log().sum(); }

}  // namespace

GaussianWeightMeasure GaussianWeightMeasure::isotropic(Index d, double sigma, WeightVector mean) {
  if (d < 1) throw InvalidArgument("dimension must be positive");
  if (!(sigma > 0.0)) throw InvalidArgument("sigma must be positive");
  if (mean.size() == 0) mean = WeightVector::Zero(d);
  require_dims(mean.size(), d, "mean");
  return {std::move(mean), sigma * sigma * Matrix::Identity(d, d)};
}

void validate(const GaussianWeightMeasure& m) {
  if (m.mean.size() < 1) throw InvalidArgument("Gaussian measure must have dimension >= 1");
  require_dims(m.cov.rows(), m.mean.size(), "covariance rows");
  require_dims(m.cov.cols(), m.mean.size(), "covariance cols");
  if (!m.mean.allFinite() || !m.cov.allFinite()) throw InvalidArgument("Gaussian measure must be finite");
  const double norm = m.cov.cwiseAbs().maxCoeff();
  const double asym = (m.cov - m.cov.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * norm) throw InvalidArgument("covariance is not symmetric");
  Eigen::LLT<Matrix> llt(m.cov);
  if (llt.info() != Eigen::Success) throw InvalidArgument("covariance is not positive definite");
}

double log_density(const GaussianWeightMeasure& m, const WeightVector& w) {
  require_dims(w.size(), m.dim(), "weight vector");
  const Matrix lower = cholesky_lower(m.cov);
  const Vector z = lower.triangularView<Eigen::Lower>().solve(w - m.mean);
  const double d = static_cast<double>(m.dim());
  return -0.5 * (z.squaredNorm() + log_det_from_cholesky(lower) + d * std::log(2.0 * std::numbers::pi));
}

GaussianWeightMeasure gibbs_posterior(const GaussianWeightMeasure& prior, const Dataset& data, double lambda) {
  validate(prior);
  require_dims(data.d(), prior.dim(), "dataset");
  require_dims(data.y.size(), data.n(), "dataset labels");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be positive and finite");
  const Index d = prior.dim();
  const double beta = 2.0 * lambda / static_cast<double>(data.n());
  const Matrix gram = data.x.transpose() * data.x;
  if (beta * gram.cwiseAbs().maxCoeff() == 0.0) return prior;

  // With prior.cov = L L^T and K = I + beta L^T X^T X L = M M^T:
  //   cov  = L K^-1 L^T = (L M^-T)(L M^-T)^T
  //   mean = L K^-1 (L^-1 mu_prior + beta L^T X^T y)
  const Matrix lower = cholesky_lower(prior.cov);
  Matrix k = Matrix::Identity(d, d);
  k.noalias() += beta * lower.transpose() * gram * lower;
  k = 0.5 * (k + k.transpose()).eval();
  Eigen::LLT<Matrix> kllt(k);
  if (kllt.info() != Eigen::Success) throw Error("posterior precision is singular");
  const Matrix m_lower = kllt.matrixL();
  // G = L M^-T, i.e. G M^T = L.
  const Matrix g = m_lower.triangularView<Eigen::Lower>().solve(lower.transpose()).transpose();

  Vector rhs = lower.triangularView<Eigen::Lower>().solve(prior.mean);
  rhs.noalias() += beta * lower.transpose() * (data.x.transpose() * data.y);
  const Vector inner = kllt.solve(rhs);

  GaussianWeightMeasure post;
  post.mean = lower * inner;
  post.cov = g * g.transpose();
  post.cov = 0.5 * (post.cov + post.cov.transpose()).eval();
  return post;
}

double kl_gaussian(const GaussianWeightMeasure& rho, const GaussianWeightMeasure& pi) {
  require_dims(rho.dim(), pi.dim(), "KL arguments");
  validate(rho);
  validate(pi);
  const Matrix l_pi = cholesky_lower(pi.cov);
  const Matrix l_rho = cholesky_lower(rho.cov);
  const auto tri = l_pi.triangularView<Eigen::Lower>();
  const double trace = tri.solve(l_rho).squaredNorm();
  const double quad = tri.solve(pi.mean - rho.mean).squaredNorm();
  const double d = static_cast<double>(rho.dim());
  const double kl = 0.5 * (trace + quad - d + log_det_from_cholesky(l_pi) - log_det_from_cholesky(l_rho));
  return kl > 0.0 ? kl : 0.0;
}

double expected_empirical_loss(const GaussianWeightMeasure& rho, const Dataset& data) {
  require_dims(rho.dim(), data.d(), "posterior");
  const double n = static_cast<double>(data.n());
  const double fit = empirical_loss(rho.mean, data);
  // tr(X Sigma X^T) = sum_ij (X^T X)_ij Sigma_ij
  const Matrix gram = data.x.transpose() * data.x;
  const double spread = gram.cwiseProduct(rho.cov).sum() / n;
  return fit + spread;
}

double expected_clipped_empirical_loss(const GaussianWeightMeasure& rho, const Dataset& data, double loss_bound) {
  require_dims(rho.dim(), data.d(), "posterior");
  const Vector means = data.y - data.x * rho.mean;
  const Vector vars = (data.x * rho.cov).cwiseProduct(data.x).rowwise().sum();
  std::vector<double> terms(static_cast<std::size_t>(data.n()));
  for (Index i = 0; i < data.n(); ++i) {
    terms[static_cast<std::size_t>(i)] = clipped_square_moment(means(i), std::sqrt(std::max(0.0, vars(i))), loss_bound);
  }
  return pairwise_sum(terms) / static_cast<double>(data.n());
}

double expected_generalization_loss(const GaussianWeightMeasure& rho, const RegressionMoments& moments) {
  require_dims(rho.dim(), moments.dim(), "posterior");
  const Vector diff = moments.w_star - rho.mean;
  const double trace = moments.q_x.cwiseProduct(rho.cov).sum();
  return diff.dot(moments.q_x * diff) + trace + moments.sigma_eps2;
}

double expected_generalization_loss(const GaussianWeightMeasure& rho, const DataModel& model) {
  require_dims(rho.dim(), dimension(model), "posterior");
  return expected_generalization_loss(rho, regression_moments(model));
}

double gibbs_objective(const GaussianWeightMeasure& rho, const Dataset& data, double lambda,
                       const GaussianWeightMeasure& prior) {
  if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be non-negative");
  const double kl = kl_gaussian(rho, prior);
  if (lambda == 0.0) return kl;
  return lambda * expected_empirical_loss(rho, data) + kl;
}

}  // namespace pacb
