#pragma once

#include "pacb/core_model.hpp"

namespace pacb {

// Gaussian distribution N(mean, cov) over weight vectors.
struct GaussianWeightMeasure {
  WeightVector mean;
  Matrix cov;

  [[nodiscard]] Index dim() const { return mean.size(); }

  static GaussianWeightMeasure isotropic(Index d, double sigma, WeightVector mean = {});
};

// Throws InvalidArgument unless cov is symmetric (asymmetry <= 1e-12 ||cov||)
// and positive definite with dimensions matching the mean.
void validate(const GaussianWeightMeasure& measure);

// Log density at w.
double log_density(const GaussianWeightMeasure& measure, const WeightVector& w);

// Minimizer of lambda * E_rho[empirical loss] + KL(rho || prior) for a
// Gaussian prior: precision = prior.cov^-1 + (2 lambda / n) X^T X.
// Computed with triangular solves only, in the whitened coordinates of the prior.
GaussianWeightMeasure gibbs_posterior(const GaussianWeightMeasure& prior, const Dataset& data, double lambda);

double kl_gaussian(const GaussianWeightMeasure& rho, const GaussianWeightMeasure& pi);

// (1/n) ||y - X mu||^2 + (1/n) tr(X Sigma X^T)
double expected_empirical_loss(const GaussianWeightMeasure& rho, const Dataset& data);

// E_rho[(1/n) sum_i min((y_i - w.x_i)^2, L)]; each residual is Gaussian under rho.
double expected_clipped_empirical_loss(const GaussianWeightMeasure& rho, const Dataset& data, double loss_bound);

// (w* - mu)^T Q_x (w* - mu) + tr(Q_x Sigma) + sigma_eps^2
double expected_generalization_loss(const GaussianWeightMeasure& rho, const DataModel& model);
double expected_generalization_loss(const GaussianWeightMeasure& rho, const RegressionMoments& moments);

// lambda * expected_empirical_loss + KL(rho || prior). lambda = 0 is allowed.
double gibbs_objective(const GaussianWeightMeasure& rho, const Dataset& data, double lambda,
                       const GaussianWeightMeasure& prior);

}  // namespace pacb
