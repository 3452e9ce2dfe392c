#include "pacb/core_model.hpp"

#include "pacb/errors.hpp"
#include "pacb/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace pacb {
namespace {

bool all_finite(const Eigen::Ref<const Matrix>& m) { return m.allFinite(); }

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw InvalidArgument(std::string(name) + " must be positive and finite");
  }
}

void require_dims(Index got, Index want, const char* what) {
  if (got != want) {
    throw DimensionMismatch(std::string(what) + ": dimension " + std::to_string(got) + " does not match " +
                            std::to_string(want));
  }
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

IndependentBlocks::IndependentBlocks(Matrix q_x) : q_x_(std::move(q_x)) {
  if (q_x_.rows() != q_x_.cols() || q_x_.rows() == 0) throw InvalidArgument("q_x must be square and non-empty");
}

Matrix IndependentBlocks::cross_covariance(Index lag) const {
  if (lag == 0) return q_x_;
  return Matrix::Zero(q_x_.rows(), q_x_.cols());
}

LagBlocks::LagBlocks(std::vector<Matrix> blocks) : blocks_(std::move(blocks)) {
  if (blocks_.empty()) throw InvalidArgument("LagBlocks needs at least the lag-0 block");
  const Index d = blocks_.front().rows();
  for (const auto& b : blocks_) {
    if (b.rows() != d || b.cols() != d) throw DimensionMismatch("lag blocks must all be d x d");
  }
}

Matrix LagBlocks::cross_covariance(Index lag) const {
  if (lag < static_cast<Index>(blocks_.size())) return blocks_[static_cast<std::size_t>(lag)];
  return Matrix::Zero(dim(), dim());
}

CorrelatedGaussian make_correlated(WeightVector w_star, std::shared_ptr<const JointCovarianceProvider> source,
                                   double sigma_eps) {
  if (!source) throw InvalidArgument("correlated model needs a covariance source");
  CorrelatedGaussian m;
  m.q_x = source->cross_covariance(0);
  m.w_star = std::move(w_star);
  m.joint_cov_source = std::move(source);
  m.sigma_eps = sigma_eps;
  return m;
}

double arx_spectral_radius(const Arx& model) {
  const Index k = model.order();
  if (k < 1) throw InvalidArgument("ARX order must be at least 1");
  Matrix companion = Matrix::Zero(k, k);
  companion.row(0) = model.a.transpose();
  for (Index i = 1; i < k; ++i) companion(i, i - 1) = 1.0;
  Eigen::EigenSolver<Matrix> es(companion, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

void check_arx_stable(const Arx& model) {
  const double r = arx_spectral_radius(model);
  if (!(r < 1.0 - 1e-9)) {
    throw InstabilityError("ARX model unstable: companion spectral radius " + std::to_string(r) +
                           " is not below 1 - 1e-9");
  }
}

WeightVector arx_true_weights(const Arx& model) {
  WeightVector w(2 * model.order());
  w << model.a, model.b;
  return w;
}

void validate(const DataModel& model) {
  std::visit(Overloaded{
                 [](const IIDIsotropic& m) {
                   if (m.w_star.size() < 1) throw InvalidArgument("w_star must have d >= 1");
                   if (!m.w_star.allFinite()) throw InvalidArgument("w_star must be finite");
                   require_positive(m.sigma_x, "sigma_x");
                   require_positive(m.sigma_eps, "sigma_eps");
                 },
                 [](const CorrelatedGaussian& m) {
                   if (m.w_star.size() < 1) throw InvalidArgument("w_star must have d >= 1");
                   if (!m.w_star.allFinite()) throw InvalidArgument("w_star must be finite");
                   require_positive(m.sigma_eps, "sigma_eps");
                   require_dims(m.q_x.rows(), m.w_star.size(), "q_x");
                   require_dims(m.q_x.cols(), m.w_star.size(), "q_x");
                   if (!all_finite(m.q_x)) throw InvalidArgument("q_x must be finite");
                   if (!m.joint_cov_source) throw InvalidArgument("correlated model needs a covariance source");
                   require_dims(m.joint_cov_source->dim(), m.w_star.size(), "covariance source");
                   if (!(min_eigenvalue(m.q_x) > 0.0)) throw InvalidArgument("q_x must be positive definite");
                 },
                 [](const Arx& m) {
                   if (m.a.size() < 1) throw InvalidArgument("ARX order must be at least 1");
                   require_dims(m.b.size(), m.a.size(), "ARX b coefficients");
                   if (!m.a.allFinite() || !m.b.allFinite()) throw InvalidArgument("ARX coefficients must be finite");
                   require_positive(m.sigma_e, "sigma_e");
                   require_positive(m.sigma_u, "sigma_u");
                   check_arx_stable(m);
                 },
             },
             model);
}

void validate(const Dataset& data) {
  if (data.n() < 1) throw InvalidArgument("dataset must have n >= 1 rows");
  if (data.d() < 1) throw InvalidArgument("dataset must have d >= 1 columns");
  require_dims(data.y.size(), data.n(), "dataset labels");
  if (!data.x.allFinite() || !data.y.allFinite()) throw InvalidArgument("dataset values must be finite");
}

Index dimension(const DataModel& model) {
  return std::visit(Overloaded{
                        [](const IIDIsotropic& m) { return m.w_star.size(); },
                        [](const CorrelatedGaussian& m) { return m.w_star.size(); },
                        [](const Arx& m) { return 2 * m.order(); },
                    },
                    model);
}

double noise_sigma(const DataModel& model) {
  return std::visit(Overloaded{
                        [](const IIDIsotropic& m) { return m.sigma_eps; },
                        [](const CorrelatedGaussian& m) { return m.sigma_eps; },
                        [](const Arx& m) { return m.sigma_e; },
                    },
                    model);
}

double RegressionMoments::distance2(const WeightVector& w) const {
  require_dims(w.size(), dim(), "weight vector");
  return (w_star - w).squaredNorm();
}

double RegressionMoments::v(const WeightVector& w) const {
  require_dims(w.size(), dim(), "weight vector");
  const Vector diff = w_star - w;
  if (iid_sigma_x2) return *iid_sigma_x2 * diff.squaredNorm() + sigma_eps2;
  return diff.dot(q_x * diff) + sigma_eps2;
}

RegressionMoments regression_moments(const DataModel& model) {
  validate(model);
  return std::visit(Overloaded{
                        [](const IIDIsotropic& m) {
                          const Index d = m.w_star.size();
                          const double s2 = m.sigma_x * m.sigma_x;
                          return RegressionMoments{m.w_star, s2 * Matrix::Identity(d, d), m.sigma_eps * m.sigma_eps, s2};
                        },
                        [](const CorrelatedGaussian& m) {
                          return RegressionMoments{m.w_star, m.q_x, m.sigma_eps * m.sigma_eps, std::nullopt};
                        },
                        [](const Arx& m) {
                          return RegressionMoments{arx_true_weights(m), arx_state_covariance(m).q_x,
                                                   m.sigma_e * m.sigma_e, std::nullopt};
                        },
                    },
                    model);
}

double squared_loss(double y_hat, double y) {
  if (!std::isfinite(y_hat) || !std::isfinite(y)) throw InvalidArgument("squared_loss needs finite inputs");
  const double r = y - y_hat;
  return r * r;
}

double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kBlock = 128;
  if (values.size() <= kBlock) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double clipped_square_moment(double mean, double sd, double loss_bound) {
  if (!(loss_bound > 0.0)) throw InvalidArgument("loss bound must be positive");
  if (!(sd >= 0.0)) throw InvalidArgument("standard deviation must be non-negative");
  if (sd == 0.0) return std::min(mean * mean, loss_bound);
  const double a = std::sqrt(loss_bound);
  const double alpha = (-a - mean) / sd;
  const double beta = (a - mean) / sd;
  const auto pdf = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi); };
  const auto cdf = [](double t) { return 0.5 * std::erfc(-t / std::numbers::sqrt2); };
  const double inside = cdf(beta) - cdf(alpha);
  const double pa = pdf(alpha);
  const double pb = pdf(beta);
  // E[Z^2 1{|Z| <= a}] with Z = mean + sd U
  const double truncated = mean * mean * inside + 2.0 * mean * sd * (pa - pb) +
                           sd * sd * (inside + alpha * pa - beta * pb);
  return truncated + loss_bound * (1.0 - inside);
}

double clipped_empirical_loss(const WeightVector& w, const Dataset& data, double loss_bound) {
  require_dims(w.size(), data.d(), "weight vector");
  if (!(loss_bound > 0.0)) throw InvalidArgument("loss bound must be positive");
  const Vector residual = data.y - data.x * w;
  const Vector clipped = residual.array().square().min(loss_bound);
  return pairwise_sum(std::span<const double>(clipped.data(), static_cast<std::size_t>(clipped.size()))) /
         static_cast<double>(data.n());
}

double empirical_loss(const WeightVector& w, const Dataset& data) {
  require_dims(w.size(), data.d(), "weight vector");
  require_dims(data.y.size(), data.n(), "dataset labels");
  if (data.n() < 1) throw InvalidArgument("empirical_loss needs n >= 1");
  const Vector residual = data.y - data.x * w;
  const Vector sq = residual.array().square();
  return pairwise_sum(std::span<const double>(sq.data(), static_cast<std::size_t>(sq.size()))) /
         static_cast<double>(data.n());
}

double generalization_loss(const WeightVector& w, const RegressionMoments& moments) { return moments.v(w); }

double generalization_loss(const WeightVector& w, const DataModel& model) {
  require_dims(w.size(), dimension(model), "weight vector");
  return regression_moments(model).v(w);
}

LossTerms v_and_rho_terms(const WeightVector& w, const RegressionMoments& moments, double rho_n) {
  if (!(rho_n >= 0.0) || !std::isfinite(rho_n)) throw InvalidArgument("rho_n must be non-negative and finite");
  const double dist2 = moments.distance2(w);
  return {moments.v(w), rho_n * dist2 + moments.sigma_eps2};
}

LossTerms v_and_rho_terms(const WeightVector& w, const DataModel& model, double rho_n) {
  if (!(rho_n >= 0.0)) throw InvalidArgument("rho_n must be non-negative");
  require_dims(w.size(), dimension(model), "weight vector");
  return v_and_rho_terms(w, regression_moments(model), rho_n);
}

}  // namespace pacb
