#pragma once

#include "pacb/core_model.hpp"
#include "pacb/mc_kernel.hpp"
#include "pacb/prior.hpp"

#include <string>
#include <string_view>

namespace pacb {

enum class BoundKind { bounded_loss, thm2, thm3_exact, thm3_relaxed, thm4, cor6 };
enum class PsiMethod { closed_form, monte_carlo, diverged };

std::string_view to_string(BoundKind kind);
std::string_view to_string(PsiMethod method);
BoundKind parse_bound_kind(std::string_view name);

// Complexity term Psi (nats).
struct PsiEstimate {
  double value = 0.0;
  double std_error = 0.0;
  PsiMethod method = PsiMethod::closed_form;
  double ess = 0.0;  // Monte Carlo only
  Index samples = 0;
  std::string note;  // why it diverged, or other caveats

  [[nodiscard]] bool finite() const { return method != PsiMethod::diverged; }

  static PsiEstimate closed_form(double value);
  static PsiEstimate diverged(std::string reason, double ess = 0.0, Index samples = 0);
};

// Monte Carlo estimates collapsing to fewer effective samples than this are diverged.
inline constexpr double kMinEffectiveSamples = 10.0;
inline constexpr Index kMinPsiSamples = 1000;

struct McSettings {
  Index samples = 100000;
  SeedSpec seed;
  Execution exec = Execution::parallel;
};

// log E_prior[exp(g(w))] by Monte Carlo, with the ESS divergence rule applied.
PsiEstimate estimate_prior_log_mean_exp(const PriorSpec& prior, const LogIntegrand& g, const McSettings& mc);

// lambda^2 L^2 / (8 n)
PsiEstimate psi_bounded(double lambda, Index n, double loss_bound);

// log E_prior[exp(lambda v_w) / (1 + 2 lambda v_w / n)^{n/2}]. Accepts any
// data model (v_w uses Q_x); the classic case is IIDIsotropic.
PsiEstimate psi_thm3_exact(const PriorSpec& prior, const DataModel& model, double lambda, Index n,
                           const McSettings& mc);

// log E_prior[exp(2 lambda^2 v_w^2 / n)]; infinite for untruncated Gaussian priors.
PsiEstimate psi_thm3_relaxed(const PriorSpec& prior, const DataModel& model, double lambda, Index n,
                             const McSettings& mc);

// Additive term T of the older Gaussian-prior bound,
// T = [ (d + ||w*||^2) c / 2 + (1 - lambda c) sigma_eps^2 ] / (1 - lambda c).
// Requires c >= 2 sigma_x^2 sigma_pi^2 and 0 < lambda < 1/c (DomainError otherwise).
double thm2_additive_term(double sigma_pi, const IIDIsotropic& model, double lambda, double c);
// lambda * T, so the older bound assembles like the others.
double psi_thm2_term(double sigma_pi, const IIDIsotropic& model, double lambda, double c);
// Smallest admissible c = 2 sigma_x^2 sigma_pi^2.
double thm2_min_c(double sigma_pi, const IIDIsotropic& model);

// log E_prior[exp(lambda v_w) / (1 + 2 lambda rho_{n,w} / n)^{n/2}]
PsiEstimate psi_thm4(const PriorSpec& prior, const DataModel& model, double lambda, Index n, double rho_n,
                     const McSettings& mc);

// log E_prior[exp(lambda (w - w*)^T (Q_x - rho_* I)(w - w*))], the n -> infinity limit.
PsiEstimate psi_cor6_limit(const PriorSpec& prior, const DataModel& model, double lambda, double rho_star,
                           const McSettings& mc);

// Whether Psi is finite. Untruncated N(mu, S) priors: the quadratic exponent
// lambda (w-w*)^T Q (w-w*) is integrable iff 2 lambda lambda_max(S^{1/2} Q S^{1/2}) < 1,
// with Q = Q_x (thm3_exact, thm4) or Q_x - rho_* I (cor6). thm3_relaxed
// needs a truncated prior. Truncated priors are always finite.
bool finiteness_check(const PriorSpec& prior, const DataModel& model, double lambda, BoundKind kind,
                      double rho_star = 0.0);
// Human-readable statement of the condition checked above.
std::string finiteness_condition(const PriorSpec& prior, const DataModel& model, double lambda, BoundKind kind,
                                 double rho_star = 0.0);

struct BoundCertificate {
  BoundKind kind = BoundKind::thm3_exact;
  double lambda = 0.0;
  double delta = 0.0;
  Index n = 0;
  Index d = 0;
  double expected_empirical = 0.0;
  double kl = 0.0;
  double log_inv_delta = 0.0;
  PsiEstimate psi;
  double penalty = 0.0;  // (kl + ln(1/delta) + psi) / lambda
  double rhs = 0.0;
  double rhs_std_error = 0.0;
  std::string note;
  std::string config_digest;

  [[nodiscard]] bool finite() const { return psi.finite(); }
};

// rhs = expected_empirical + (kl + ln(1/delta) + psi) / lambda, +inf when psi diverged.
BoundCertificate assemble_certificate(double expected_empirical, double kl, const PsiEstimate& psi, double lambda,
                                      double delta, BoundKind kind = BoundKind::thm3_exact);

}  // namespace pacb
