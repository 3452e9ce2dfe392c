#pragma once

#include "pacb/posterior.hpp"
#include "pacb/rng.hpp"

#include <optional>
#include <random>

namespace pacb {

// Gaussian prior over weights, optionally restricted to the Euclidean ball of
// radius truncation_radius about the base mean (renormalized).
struct PriorSpec {
  GaussianWeightMeasure base;
  std::optional<double> truncation_radius;

  [[nodiscard]] Index dim() const { return base.dim(); }
  [[nodiscard]] bool truncated() const { return truncation_radius.has_value(); }

  static PriorSpec gaussian(Index d, double sigma_pi);
  // Default radius is 5 sigma_pi.
  static PriorSpec truncated_gaussian(Index d, double sigma_pi, std::optional<double> radius = std::nullopt);
};

// Truncation needs an isotropic base covariance (the ball mass is then a
// chi-square probability).
void validate(const PriorSpec& prior);

// sigma_pi if base.cov == sigma_pi^2 I exactly, otherwise nullopt.
std::optional<double> isotropic_sigma(const GaussianWeightMeasure& measure);

// ln of the base-measure mass inside the truncation ball (0 when untruncated).
double log_ball_mass(const PriorSpec& prior);

// Upper bound on P(||w - center|| > radius) for w ~ rho, from
// ||w - center|| <= ||mu - center|| + sqrt(lambda_max(Sigma)) ||z||.
double ball_escape_bound(const GaussianWeightMeasure& rho, const Vector& center, double radius);

// Draws weights for Monte Carlo averages over the prior. Untruncated priors
// are sampled directly (log_weight = 0). Truncated priors use the defensive
// mixture q = (prior + uniform-on-ball) / 2 with importance log-weight
// ln(prior(w) / q(w)), which keeps the ball boundary well covered.
class PriorSampler {
 public:
  explicit PriorSampler(const PriorSpec& prior);

  [[nodiscard]] Index dim() const { return mean_.size(); }
  void draw(Engine& eng, std::normal_distribution<double>& normal, Vector& w, double& log_weight) const;

 private:
  Vector mean_;
  Matrix lower_;
  std::optional<double> radius_;
  double sigma_ = 1.0;
  double log_mass_ = 0.0;
  double log_uniform_density_ = 0.0;
  double log_normalizer_ = 0.0;  // of the base density
};

}  // namespace pacb
