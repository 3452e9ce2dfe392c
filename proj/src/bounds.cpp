#include "pacb/bounds.hpp"

#include "pacb/errors.hpp"
#include "pacb/spectral.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>
#include <sstream>

namespace pacb {
namespace {

void require_lambda(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be positive and finite");
}

void require_samples(const McSettings& mc) {
  if (mc.samples < kMinPsiSamples) {
    throw InvalidArgument("Monte Carlo estimate needs at least " + std::to_string(kMinPsiSamples) + " samples");
  }
}

void require_compatible(const PriorSpec& prior, const DataModel& model) {
  validate(prior);
  if (prior.dim() != dimension(model)) throw DimensionMismatch("prior dimension does not match the data model");
}

// Largest eigenvalue of S^{1/2} Q S^{1/2} for prior covariance S.
double tilted_growth_rate(const PriorSpec& prior, const Matrix& q) {
  Eigen::LLT<Matrix> llt(prior.base.cov);
  const Matrix l = llt.matrixL();
  Matrix m = l.transpose() * q * l;
  m = 0.5 * (m + m.transpose()).eval();
  return max_eigenvalue(m);
}

Matrix exponent_matrix(const RegressionMoments& mom, BoundKind kind, double rho_star) {
  if (kind == BoundKind::cor6) {
    return mom.q_x - rho_star * Matrix::Identity(mom.dim(), mom.dim());
  }
  return mom.q_x;
}

}  // namespace

std::string_view to_string(BoundKind kind) {
  switch (kind) {
    case BoundKind::bounded_loss: return "bounded_loss";
    case BoundKind::thm2: return "thm2";
    case BoundKind::thm3_exact: return "thm3_exact";
    case BoundKind::thm3_relaxed: return "thm3_relaxed";
    case BoundKind::thm4: return "thm4";
    case BoundKind::cor6: return "cor6";
  }
  return "unknown";
}

std::string_view to_string(PsiMethod method) {
  switch (method) {
    case PsiMethod::closed_form: return "closed_form";
    case PsiMethod::monte_carlo: return "monte_carlo";
    case PsiMethod::diverged: return "diverged";
  }
  return "unknown";
}

BoundKind parse_bound_kind(std::string_view name) {
  for (BoundKind k : {BoundKind::bounded_loss, BoundKind::thm2, BoundKind::thm3_exact, BoundKind::thm3_relaxed,
                      BoundKind::thm4, BoundKind::cor6}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown bound kind '" + std::string(name) + "'");
}

PsiEstimate PsiEstimate::closed_form(double value) {
  PsiEstimate p;
  p.value = value;
  p.method = PsiMethod::closed_form;
  return p;
}

PsiEstimate PsiEstimate::diverged(std::string reason, double ess, Index samples) {
  PsiEstimate p;
  p.value = std::numeric_limits<double>::infinity();
  p.method = PsiMethod::diverged;
  p.ess = ess;
  p.samples = samples;
  p.note = std::move(reason);
  return p;
}

PsiEstimate estimate_prior_log_mean_exp(const PriorSpec& prior, const LogIntegrand& g, const McSettings& mc) {
  require_samples(mc);
  const PriorSampler sampler(prior);
  const LogExpAccumulator acc = prior_log_mean_exp(sampler, mc.samples, mc.seed, g, mc.exec);
  const double value = acc.log_mean();
  const double ess = acc.effective_sample_size();
  if (!std::isfinite(value) || !(ess >= kMinEffectiveSamples)) {
    std::ostringstream why;
    why << "Monte Carlo estimate collapsed: effective sample size " << ess << " of " << mc.samples
        << " (threshold " << kMinEffectiveSamples << ")";
    return PsiEstimate::diverged(why.str(), ess, mc.samples);
  }
  PsiEstimate p;
  p.value = value;
  p.std_error = acc.log_mean_std_error();
  p.method = PsiMethod::monte_carlo;
  p.ess = ess;
  p.samples = mc.samples;
  if (prior.truncated()) p.note = "truncated prior; defensive importance sampling";
  return p;
}

PsiEstimate psi_bounded(double lambda, Index n, double loss_bound) {
  if (!(loss_bound > 0.0)) throw InvalidArgument("loss bound L must be positive");
  if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be non-negative");
  if (n < 1) throw InvalidArgument("n must be positive");
  return PsiEstimate::closed_form(lambda * lambda * loss_bound * loss_bound / (8.0 * static_cast<double>(n)));
}

PsiEstimate psi_thm3_exact(const PriorSpec& prior, const DataModel& model, double lambda, Index n,
                           const McSettings& mc) {
  require_compatible(prior, model);
  require_lambda(lambda);
  require_samples(mc);
  if (n < 1) throw InvalidArgument("n must be positive");
  if (!finiteness_check(prior, model, lambda, BoundKind::thm3_exact)) {
    return PsiEstimate::diverged(finiteness_condition(prior, model, lambda, BoundKind::thm3_exact));
  }
  const RegressionMoments mom = regression_moments(model);
  const double half_n = 0.5 * static_cast<double>(n);
  return estimate_prior_log_mean_exp(
      prior,
      [&](const Vector& w) {
        const double lv = lambda * mom.v(w);
        return lv - half_n * std::log1p(lv / half_n);
      },
      mc);
}

PsiEstimate psi_thm3_relaxed(const PriorSpec& prior, const DataModel& model, double lambda, Index n,
                             const McSettings& mc) {
  require_compatible(prior, model);
  require_lambda(lambda);
  require_samples(mc);
  if (n < 1) throw InvalidArgument("n must be positive");
  if (!finiteness_check(prior, model, lambda, BoundKind::thm3_relaxed)) {
    return PsiEstimate::diverged(finiteness_condition(prior, model, lambda, BoundKind::thm3_relaxed));
  }
  const RegressionMoments mom = regression_moments(model);
  const double scale = 2.0 * lambda * lambda / static_cast<double>(n);
  return estimate_prior_log_mean_exp(
      prior,
      [&](const Vector& w) {
        const double v = mom.v(w);
        return scale * v * v;
      },
      mc);
}

double thm2_min_c(double sigma_pi, const IIDIsotropic& model) {
  return 2.0 * model.sigma_x * model.sigma_x * sigma_pi * sigma_pi;
}

double thm2_additive_term(double sigma_pi, const IIDIsotropic& model, double lambda, double c) {
  validate(DataModel{model});
  if (!(sigma_pi > 0.0)) throw InvalidArgument("sigma_pi must be positive");
  const double c_min = thm2_min_c(sigma_pi, model);
  if (!(c >= c_min)) {
    std::ostringstream msg;
    msg << "c = " << c << " is below its floor 2 sigma_x^2 sigma_pi^2 = " << c_min;
    throw DomainError(msg.str());
  }
  if (!(lambda > 0.0) || !(lambda * c < 1.0)) {
    std::ostringstream msg;
    msg << "lambda = " << lambda << " outside (0, 1/c) = (0, " << 1.0 / c << ")";
    throw DomainError(msg.str());
  }
  const double d = static_cast<double>(model.w_star.size());
  const double slack = 1.0 - lambda * c;
  const double s2 = model.sigma_eps * model.sigma_eps;
  return (0.5 * (d + model.w_star.squaredNorm()) * c + slack * s2) / slack;
}

double psi_thm2_term(double sigma_pi, const IIDIsotropic& model, double lambda, double c) {
  return lambda * thm2_additive_term(sigma_pi, model, lambda, c);
}

PsiEstimate psi_thm4(const PriorSpec& prior, const DataModel& model, double lambda, Index n, double rho_n,
                     const McSettings& mc) {
  require_compatible(prior, model);
  require_lambda(lambda);
  require_samples(mc);
  if (n < 1) throw InvalidArgument("n must be positive");
  if (!(rho_n >= 0.0) || !std::isfinite(rho_n)) throw InvalidArgument("rho_n must be non-negative");
  if (!finiteness_check(prior, model, lambda, BoundKind::thm4)) {
    return PsiEstimate::diverged(finiteness_condition(prior, model, lambda, BoundKind::thm4));
  }
  const RegressionMoments mom = regression_moments(model);
  const double half_n = 0.5 * static_cast<double>(n);
  return estimate_prior_log_mean_exp(
      prior,
      [&](const Vector& w) {
        const double dist2 = mom.distance2(w);
        const double lv = lambda * mom.v(w);
        const double lr = lambda * (rho_n * dist2 + mom.sigma_eps2);
        return lv - half_n * std::log1p(lr / half_n);
      },
      mc);
}

PsiEstimate psi_cor6_limit(const PriorSpec& prior, const DataModel& model, double lambda, double rho_star,
                           const McSettings& mc) {
  require_compatible(prior, model);
  require_lambda(lambda);
  require_samples(mc);
  if (!(rho_star >= 0.0) || !std::isfinite(rho_star)) throw InvalidArgument("rho_star must be non-negative");
  if (!finiteness_check(prior, model, lambda, BoundKind::cor6, rho_star)) {
    return PsiEstimate::diverged(finiteness_condition(prior, model, lambda, BoundKind::cor6, rho_star));
  }
  const RegressionMoments mom = regression_moments(model);
  const Matrix gap = exponent_matrix(mom, BoundKind::cor6, rho_star);
  PsiEstimate p = estimate_prior_log_mean_exp(
      prior,
      [&](const Vector& w) {
        const Vector diff = w - mom.w_star;
        return lambda * diff.dot(gap * diff);
      },
      mc);
  if (p.finite()) p.note = "asymptote, not a certificate at finite n";
  return p;
}

bool finiteness_check(const PriorSpec& prior, const DataModel& model, double lambda, BoundKind kind,
                      double rho_star) {
  if (prior.truncated()) return true;
  switch (kind) {
    case BoundKind::bounded_loss:
    case BoundKind::thm2:
      return true;
    case BoundKind::thm3_relaxed:
      return lambda == 0.0;
    case BoundKind::thm3_exact:
    case BoundKind::thm4:
    case BoundKind::cor6: {
      const RegressionMoments mom = regression_moments(model);
      const double rate = tilted_growth_rate(prior, exponent_matrix(mom, kind, rho_star));
      return 2.0 * lambda * rate < 1.0;
    }
  }
  return false;
}

std::string finiteness_condition(const PriorSpec& prior, const DataModel& model, double lambda, BoundKind kind,
                                 double rho_star) {
  std::ostringstream out;
  if (prior.truncated()) {
    out << "truncated prior: Psi is finite for every lambda";
    return out.str();
  }
  switch (kind) {
    case BoundKind::bounded_loss:
    case BoundKind::thm2:
      out << "closed form; always finite";
      break;
    case BoundKind::thm3_relaxed:
      out << "exp(2 lambda^2 v_w^2 / n) grows like exp(c ||w||^4) and has infinite expectation under an "
             "untruncated Gaussian prior; use a truncated prior";
      break;
    default: {
      const RegressionMoments mom = regression_moments(model);
      const double rate = tilted_growth_rate(prior, exponent_matrix(mom, kind, rho_star));
      out << "finite iff 2 lambda sigma_x,max^2 sigma_pi^2 < 1 (largest eigenvalue of the prior-scaled "
          << (kind == BoundKind::cor6 ? "Q_x - rho_* I" : "Q_x") << "); here 2 * " << lambda << " * " << rate
          << " = " << 2.0 * lambda * rate;
      break;
    }
  }
  return out.str();
}

BoundCertificate assemble_certificate(double expected_empirical, double kl, const PsiEstimate& psi, double lambda,
                                      double delta, BoundKind kind) {
  if (!(delta > 0.0 && delta <= 1.0)) throw InvalidArgument("delta must lie in (0, 1]");
  require_lambda(lambda);
  if (!(kl >= 0.0)) throw InvalidArgument("KL divergence must be non-negative");
  if (!std::isfinite(expected_empirical)) throw InvalidArgument("expected empirical loss must be finite");
  BoundCertificate c;
  c.kind = kind;
  c.lambda = lambda;
  c.delta = delta;
  c.expected_empirical = expected_empirical;
  c.kl = kl;
  c.log_inv_delta = -std::log(delta);
  c.psi = psi;
  if (!psi.finite()) {
    c.penalty = std::numeric_limits<double>::infinity();
    c.rhs = std::numeric_limits<double>::infinity();
    c.rhs_std_error = 0.0;
  } else {
    c.penalty = (kl + c.log_inv_delta + psi.value) / lambda;
    c.rhs = expected_empirical + c.penalty;
    c.rhs_std_error = psi.std_error / lambda;
  }
  if (kind == BoundKind::cor6) c.note = "asymptote, not a certificate at finite n";
  return c;
}

}  // namespace pacb
