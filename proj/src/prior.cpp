#include "pacb/prior.hpp"

#include "pacb/errors.hpp"
#include "pacb/spectral.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <Eigen/Cholesky>

#include <cmath>
#include <numbers>

namespace pacb {

PriorSpec PriorSpec::gaussian(Index d, double sigma_pi) {
  return {GaussianWeightMeasure::isotropic(d, sigma_pi), std::nullopt};
}

PriorSpec PriorSpec::truncated_gaussian(Index d, double sigma_pi, std::optional<double> radius) {
  return {GaussianWeightMeasure::isotropic(d, sigma_pi), radius.value_or(5.0 * sigma_pi)};
}

std::optional<double> isotropic_sigma(const GaussianWeightMeasure& m) {
  const Index d = m.dim();
  const double s2 = m.cov(0, 0);
  if (!(s2 > 0.0)) return std::nullopt;
  if (m.cov != s2 * Matrix::Identity(d, d)) return std::nullopt;
  return std::sqrt(s2);
}

void validate(const PriorSpec& prior) {
  validate(prior.base);
  if (prior.truncation_radius) {
    if (!(*prior.truncation_radius > 0.0) || !std::isfinite(*prior.truncation_radius)) {
      throw InvalidArgument("truncation radius must be positive and finite");
    }
    if (!isotropic_sigma(prior.base)) throw InvalidArgument("truncated priors need an isotropic base covariance");
  }
}

double log_ball_mass(const PriorSpec& prior) {
  if (!prior.truncation_radius) return 0.0;
  const double sigma = *isotropic_sigma(prior.base);
  const double d = static_cast<double>(prior.dim());
  const double t = *prior.truncation_radius / sigma;
  // P(chi^2_d <= t^2); log1p of the upper tail keeps precision near 1.
  const double tail = boost::math::gamma_q(0.5 * d, 0.5 * t * t);
  return std::log1p(-tail);
}

double ball_escape_bound(const GaussianWeightMeasure& rho, const Vector& center, double radius) {
  const double offset = (rho.mean - center).norm();
  const double spread = std::sqrt(max_eigenvalue(rho.cov));
  const double t = (radius - offset) / spread;
  if (!(t > 0.0)) return 1.0;
  return boost::math::gamma_q(0.5 * static_cast<double>(rho.dim()), 0.5 * t * t);
}

PriorSampler::PriorSampler(const PriorSpec& prior) : mean_(prior.base.mean), radius_(prior.truncation_radius) {
  validate(prior);
  Eigen::LLT<Matrix> llt(prior.base.cov);
  lower_ = llt.matrixL();
  const double d = static_cast<double>(dim());
  log_normalizer_ = -0.5 * d * std::log(2.0 * std::numbers::pi) - lower_.diagonal().array().log().sum();
  if (radius_) {
    sigma_ = *isotropic_sigma(prior.base);
    log_mass_ = log_ball_mass(prior);
    const double log_volume =
        0.5 * d * std::log(std::numbers::pi) + d * std::log(*radius_) - std::lgamma(0.5 * d + 1.0);
    log_uniform_density_ = -log_volume;
  }
}

void PriorSampler::draw(Engine& eng, std::normal_distribution<double>& normal, Vector& w,
                        double& log_weight) const {
  const Index d = dim();
  Vector z(d);
  if (!radius_) {
    for (Index i = 0; i < d; ++i) z(i) = normal(eng);
    w = mean_ + lower_ * z;
    log_weight = 0.0;
    return;
  }
  const double radius = *radius_;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(eng) < 0.5) {
    // Base Gaussian restricted to the ball, by rejection.
    do {
      for (Index i = 0; i < d; ++i) z(i) = sigma_ * normal(eng);
    } while (z.norm() > radius);
  } else {
    double norm = 0.0;
    do {
      for (Index i = 0; i < d; ++i) z(i) = normal(eng);
      norm = z.norm();
    } while (norm == 0.0);
    const double r = radius * std::pow(unit(eng), 1.0 / static_cast<double>(d));
    z *= r / norm;
  }
  w = mean_ + z;
  const double log_prior = log_normalizer_ - 0.5 * z.squaredNorm() / (sigma_ * sigma_) - log_mass_;
  // ln [prior / (prior/2 + uniform/2)] = ln 2 - ln(1 + uniform/prior)
  log_weight = std::numbers::ln2 - std::log1p(std::exp(log_uniform_density_ - log_prior));
}

}  // namespace pacb
