#pragma once

#include "pacb/bounds.hpp"
#include "pacb/datagen.hpp"
#include "pacb/posterior.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pacb {

// Parameters of a single bound evaluation that are not the data.
struct BoundSettings {
  BoundKind kind = BoundKind::thm3_exact;
  double lambda = 1.0;
  double delta = 0.05;
  std::optional<double> c;          // older Gaussian bound; defaults to 2 sigma_x^2 sigma_pi^2
  double loss_bound = 1.0;          // L for bounded_loss (squared loss clipped to [0, L])
  std::optional<double> rho_n;      // thm4; defaults to lambda_min(Q_{X,n})
  std::optional<double> rho_star;   // cor6; defaults to the lower end of the rho_* bracket
};

// Data-independent complexity term for the requested bound at sample size n.
PsiEstimate compute_psi(const PriorSpec& prior, const DataModel& model, Index n, const BoundSettings& bound,
                        const McSettings& mc);

struct CertifiedPosterior {
  BoundCertificate certificate;
  GaussianWeightMeasure posterior;
  double lhs = 0.0;  // E_rho[L(f_w)] under the true model (clipped loss for bounded_loss)
};

// Gibbs posterior (or the supplied fixed posterior) for the data, assembled
// with the given Psi. Truncated priors require the posterior's mass outside
// the ball to be below 1e-12; the truncated KL is then KL + ln Z_prior - ln Z_post.
// lhs_seed drives the Monte Carlo average used for the clipped-loss lhs only.
CertifiedPosterior certify_with_psi(const PriorSpec& prior, const DataModel& model, const Dataset& data,
                                    const BoundSettings& bound, const PsiEstimate& psi,
                                    const std::optional<GaussianWeightMeasure>& fixed_posterior = std::nullopt,
                                    SeedSpec lhs_seed = {});

// compute_psi + certify_with_psi.
CertifiedPosterior certify(const PriorSpec& prior, const DataModel& model, const Dataset& data,
                           const BoundSettings& bound, const McSettings& mc);

struct CoverageTrial {
  Index trial = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  bool violation = false;
};

struct CoverageReport {
  Index trials = 0;
  Index violations = 0;
  double rate = 0.0;
  double delta = 0.0;
  double wilson_lower = 0.0;
  double wilson_upper = 0.0;
  std::string config_digest;
  BoundKind kind = BoundKind::thm3_exact;
  double lambda = 0.0;
  Index n = 0;
  PsiEstimate psi;
  std::vector<CoverageTrial> rows;
};

struct CoverageSettings {
  BoundSettings bound;
  Index n = 50;
  Index trials = 1000;
  SeedSpec seed;
  McSettings mc;  // Psi estimation; computed once and reused by every trial
  std::optional<GaussianWeightMeasure> fixed_posterior;
  Execution exec = Execution::parallel;
};

// 95% Wilson score interval.
std::pair<double, double> wilson_interval(Index successes, Index trials);

// Per trial: sample a dataset, form the posterior, compare lhs with rhs.
// Throws DivergedError when Psi is infinite, InvalidArgument for trials < 100.
CoverageReport coverage_experiment(const DataModel& model, const PriorSpec& prior, const CoverageSettings& settings);

// One row of a sweep. Column meaning depends on the sweep:
//   compare_bounds:        psi = thm3 Psi, lhs = rhs(thm3), rhs = rhs(thm2), gap = rhs(thm2) - rhs(thm3)
//   convergence_sweep:     lhs = E_rho L, rhs = certificate, gap = rhs - lhs
//   noniid_asymptote_sweep: psi = thm4 Psi, lhs = limit, rhs = psi, gap = psi - limit
struct SweepRow {
  Index n = 0;
  double lambda = 0.0;
  double psi_value = 0.0;
  double psi_se = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double gap = 0.0;
  bool ok = true;    // the sweep's per-row property held
  std::string note;  // set for skipped rows
  bool skipped = false;
};

struct SweepTable {
  std::string kind;
  std::string config_digest;
  std::vector<SweepRow> rows;

  [[nodiscard]] bool all_ok() const;
};

struct CompareSettings {
  std::vector<double> lambda_grid;
  double delta = 0.05;
  Index n = 50;
  std::optional<double> c;
  SeedSpec seed;
  McSettings mc;
};

// Older Gaussian-prior bound vs the chi-square based one on one dataset.
// Rows with lambda outside (0, 1/c) are skipped with a reason. Row ok means
// rhs(thm3) <= rhs(thm2) + 3 SE.
SweepTable compare_bounds(const IIDIsotropic& model, const PriorSpec& prior, const CompareSettings& settings);

enum class LambdaRule { fixed, sqrt_n, n_pow_inv_d };

struct LambdaSchedule {
  LambdaRule rule = LambdaRule::fixed;
  double value = 1.0;  // for fixed
};

// fixed -> value, sqrt_n -> sqrt(n), n_pow_inv_d -> n^{1/d} ln(1/delta)
double lambda_for(const LambdaSchedule& schedule, Index n, Index d, double delta);

struct SweepSettings {
  LambdaSchedule schedule;
  std::vector<Index> n_grid;
  double delta = 0.05;
  BoundKind kind = BoundKind::thm3_exact;
  double loss_bound = 1.0;
  SeedSpec seed;
  McSettings mc;  // same seed for every n: common random numbers
};

// Rows sorted by n. Datasets for different n are prefixes of one another.
// n_pow_inv_d needs a truncated prior (ConfigError otherwise).
SweepTable convergence_sweep(const DataModel& model, const PriorSpec& prior, const SweepSettings& settings);

struct AsymptoteSettings {
  double lambda = 1.0;
  std::vector<Index> n_grid;
  McSettings mc;
};

// psi_thm4 at the exact rho_n against the cor6 limit evaluated at the lower
// end of the rho_* bracket over n_max = max(n_grid). Row ok means
// psi >= limit - 3 SE and the gap did not grow from the previous row.
SweepTable noniid_asymptote_sweep(const Arx& arx, const PriorSpec& prior, const AsymptoteSettings& settings);

struct LossConvergenceRow {
  Index n = 0;
  double empirical = 0.0;
  double generalization = 0.0;
  double abs_gap = 0.0;
};

struct LossConvergenceTable {
  std::vector<LossConvergenceRow> rows;
  double long_run_variance = 0.0;  // batch-means estimate at the largest n
  double threshold = 0.0;          // 5 sqrt(variance / n_max)
  bool passed = false;
};

// |empirical loss - generalization loss| along one recast ARX trajectory.
LossConvergenceTable empirical_loss_convergence(const Arx& arx, const WeightVector& w, std::vector<Index> n_grid,
                                                SeedSpec seed);

struct DvReport {
  Index cases = 0;
  double max_violation = 0.0;   // max(lhs - rhs), must be <= 1e-12
  double max_tilted_gap = 0.0;  // |lhs - rhs| at the tilted measure, must be <= 1e-9
  double min_strict_slack = 0.0;
  bool passed = false;
};

// Change-of-measure inequality E_rho phi <= KL(rho||pi) + ln E_pi e^phi on
// random finite hypothesis spaces (at most 16 atoms).
DvReport dv_markov_check(SeedSpec seed, Index cases = 1000);

struct HoeffdingRow {
  double mgf = 0.0;  // MC estimate of E exp(lambda (L(f) - empirical(f)))
  double se_rel = 0.0;
  double bound = 0.0;  // exp(lambda^2 L^2 / (8 n))
  bool ok = false;
};

struct HoeffdingReport {
  std::vector<HoeffdingRow> rows;
  bool passed = false;
};

struct HoeffdingSettings {
  double loss_bound = 1.0;
  double lambda = 10.0;
  Index n = 100;
  Index trials = 20000;
  Index predictors = 20;
  SeedSpec seed;
  IIDIsotropic model{Vector::Constant(2, 0.5), 1.0, 0.5};
  double predictor_sigma = 1.0;  // random predictors w ~ N(0, predictor_sigma^2 I)
};

// Clipped squared loss in [0, L] on iid data; each predictor's MGF estimate
// must stay below exp(lambda^2 L^2 / 8n) (1 + 5 SE_rel).
HoeffdingReport hoeffding_mgf_check(const HoeffdingSettings& settings);

}  // namespace pacb
