#pragma once

#include "pacb/core_model.hpp"
#include "pacb/rng.hpp"

#include <memory>
#include <vector>

namespace pacb {

inline constexpr Index kDefaultSizeCap = 4096;

// Stacked ARX state s_t = [y_t..y_{t-k+1}, u_t..u_{t-k+1}] evolving as
// s_{t+1} = A s_t + B [e_{t+1}; u_{t+1}], noise covariance W = diag(sigma_e^2, sigma_u^2).
// The regressor of Y_i = y_{i+k} is s_{i+k-1}.
struct StateSpaceForm {
  Matrix A;
  Matrix B;
  Matrix W;
};

StateSpaceForm arx_state_space(const Arx& model);

// Fixed point P = A P A^T + B W B^T of the state recursion.
struct StationaryCovariance {
  Matrix q_x;         // P = E[X_i X_i^T]
  Matrix transition;  // A
  long iterations = 0;
  double residual = 0.0;  // max-norm Lyapunov residual at exit

  // E[X_{i+lag} X_i^T] = A^lag P.
  [[nodiscard]] Matrix cross_covariance(Index lag) const;
};

// Throws InstabilityError for unstable models or if 10^6 iterations do not
// bring the increment below 1e-12 (relative to max(1, ||P||_max)).
StationaryCovariance arx_state_covariance(const Arx& model);

class ArxRegressorCovariance final : public JointCovarianceProvider {
 public:
  explicit ArxRegressorCovariance(StationaryCovariance cov) : cov_(std::move(cov)) {}
  explicit ArxRegressorCovariance(const Arx& model) : cov_(arx_state_covariance(model)) {}
  [[nodiscard]] Index dim() const override { return cov_.q_x.rows(); }
  [[nodiscard]] Matrix cross_covariance(Index lag) const override { return cov_.cross_covariance(lag); }
  [[nodiscard]] const StationaryCovariance& stationary() const { return cov_; }

 private:
  StationaryCovariance cov_;
};

// Provider of E[X_{i+l} X_i^T] for any data model.
std::shared_ptr<const JointCovarianceProvider> covariance_provider(const DataModel& model);

// Q_{X,n}: (i,j) block E[X_i X_j^T]. Exactly symmetric. Throws ResourceError if n*d > size_cap.
Matrix joint_covariance(const JointCovarianceProvider& source, Index n, Index size_cap = kDefaultSizeCap);
Matrix joint_covariance(const DataModel& model, Index n, Index size_cap = kDefaultSizeCap);

// Smallest / largest eigenvalue of a symmetric matrix. Throws InvalidArgument
// when the asymmetry exceeds 1e-10 * max(1, ||M||_max).
double min_eigenvalue(const Matrix& m);
double max_eigenvalue(const Matrix& m);

// Symmetric inverse square root of an SPD matrix.
Matrix inverse_sqrt_spd(const Matrix& m);

struct RhoStarBracket {
  double lower = 0.0;
  double upper = 0.0;
};

struct SpectralSummary {
  std::vector<double> rho;  // rho[n-1] = rho_n
  Index n_max = 0;
  RhoStarBracket rho_star_bracket;
  Matrix q_x;
};

// rho_n = lambda_min(Q_{X,n}) for n = 1..n_max; per-n eigenproblems run in
// parallel. Throws if the sequence increases by more than 1e-12 * max(1, rho_1).
SpectralSummary rho_sequence(const DataModel& model, Index n_max, Index size_cap = kDefaultSizeCap);

double rho_at(const DataModel& model, Index n, Index size_cap = kDefaultSizeCap);

// rho_n for the listed n only, from one joint covariance build.
std::vector<double> rho_at(const DataModel& model, const std::vector<Index>& ns, Index size_cap = kDefaultSizeCap);

// Bracket (max(0, rho_m - (rho_{m/2} - rho_m)), rho_m) for m = n_max, using
// only the two eigenproblems it needs.
RhoStarBracket rho_star_bracket(const DataModel& model, Index n_max, Index size_cap = kDefaultSizeCap);

// Q_{w,n} = D_w^T Q_{X,n} D_w + sigma_eps^2 I_n, D_w = blockdiag(w - w*).
Matrix prediction_error_covariance(const WeightVector& w, const DataModel& model, Index n,
                                   Index size_cap = kDefaultSizeCap);

struct WhitenReport {
  Index n = 0;
  Index samples = 0;
  double max_cov_error_in_se = 0.0;  // max |cov(S) - I| entry divided by its SE
  double chi2_mean = 0.0;
  double chi2_mean_se = 0.0;
  double chi2_var = 0.0;
  double chi2_var_se = 0.0;
  bool passed = false;
};

// Draws Z_{w,1:n}, whitens S = Q_{w,n}^{-1/2} Z and checks cov(S) ~ I_n and
// sum S_i^2 ~ chi^2_n through its first two moments, all within 5 SE.
WhitenReport whiten_check(const WeightVector& w, const DataModel& model, Index n, SeedSpec seed,
                          Index samples = 100000);

}  // namespace pacb
