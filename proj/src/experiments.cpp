#include "pacb/experiments.hpp"

#include "pacb/errors.hpp"
#include "pacb/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace pacb {
namespace {

constexpr double kWilsonZ = 1.959963984540054;
constexpr double kMaxEscape = 1e-12;
constexpr Index kClippedLhsSamples = 4096;

const IIDIsotropic& require_iid(const DataModel& model, std::string_view what) {
  const auto* iid = std::get_if<IIDIsotropic>(&model);
  if (iid == nullptr) throw ConfigError(std::string(what) + " needs an iid isotropic data model");
  return *iid;
}

double require_thm2_prior(const PriorSpec& prior) {
  const auto sigma = isotropic_sigma(prior.base);
  if (prior.truncated() || !sigma || !prior.base.mean.isZero(0.0)) {
    throw ConfigError("thm2 needs an untruncated zero-mean isotropic Gaussian prior");
  }
  return *sigma;
}

double thm2_c(const BoundSettings& bound, double sigma_pi, const IIDIsotropic& model) {
  return bound.c.value_or(thm2_min_c(sigma_pi, model));
}

// E_rho E[min((y - w.x)^2, L)]: the residual is N(0, v_w) for a fixed w.
double clipped_generalization(const GaussianWeightMeasure& rho, const RegressionMoments& mom, double loss_bound,
                              SeedSpec seed) {
  Engine eng = seed.engine();
  std::normal_distribution<double> normal;
  Eigen::LLT<Matrix> llt(rho.cov);
  const Matrix l = llt.matrixL();
  Vector z(rho.dim());
  std::vector<double> terms(static_cast<std::size_t>(kClippedLhsSamples));
  for (auto& t : terms) {
    for (Index j = 0; j < z.size(); ++j) z(j) = normal(eng);
    const Vector w = rho.mean + l * z;
    t = clipped_square_moment(0.0, std::sqrt(mom.v(w)), loss_bound);
  }
  return pairwise_sum(terms) / static_cast<double>(kClippedLhsSamples);
}

PsiEstimate checked_psi(const PriorSpec& prior, const DataModel& model, Index n, const BoundSettings& bound,
                        const McSettings& mc) {
  PsiEstimate psi = compute_psi(prior, model, n, bound, mc);
  if (!psi.finite()) {
    throw DivergedError("Psi diverged for " + std::string(to_string(bound.kind)) + ": " + psi.note);
  }
  return psi;
}

}  // namespace

PsiEstimate compute_psi(const PriorSpec& prior, const DataModel& model, Index n, const BoundSettings& bound,
                        const McSettings& mc) {
  validate(prior);
  validate(model);
  if (prior.dim() != dimension(model)) throw DimensionMismatch("prior dimension does not match the data model");
  if (n < 1) throw InvalidArgument("n must be positive");
  switch (bound.kind) {
    case BoundKind::bounded_loss:
      require_iid(model, "bounded_loss");
      return psi_bounded(bound.lambda, n, bound.loss_bound);
    case BoundKind::thm2: {
      const auto& iid = require_iid(model, "thm2");
      const double sigma_pi = require_thm2_prior(prior);
      return PsiEstimate::closed_form(psi_thm2_term(sigma_pi, iid, bound.lambda, thm2_c(bound, sigma_pi, iid)));
    }
    case BoundKind::thm3_exact:
      return psi_thm3_exact(prior, model, bound.lambda, n, mc);
    case BoundKind::thm3_relaxed:
      return psi_thm3_relaxed(prior, model, bound.lambda, n, mc);
    case BoundKind::thm4: {
      const double rho_n = bound.rho_n ? *bound.rho_n : rho_at(model, n);
      return psi_thm4(prior, model, bound.lambda, n, rho_n, mc);
    }
    case BoundKind::cor6: {
      const double rho_star = bound.rho_star ? *bound.rho_star : rho_star_bracket(model, std::max<Index>(n, 2)).lower;
      return psi_cor6_limit(prior, model, bound.lambda, rho_star, mc);
    }
  }
  throw InvalidArgument("unknown bound kind");
}

CertifiedPosterior certify_with_psi(const PriorSpec& prior, const DataModel& model, const Dataset& data,
                                    const BoundSettings& bound, const PsiEstimate& psi,
                                    const std::optional<GaussianWeightMeasure>& fixed_posterior, SeedSpec lhs_seed) {
  validate(prior);
  validate(data);
  if (prior.dim() != data.d()) throw DimensionMismatch("prior dimension does not match the data");
  if (!(bound.lambda > 0.0)) throw InvalidArgument("lambda must be positive");

  CertifiedPosterior out;
  if (fixed_posterior) {
    validate(*fixed_posterior);
    if (fixed_posterior->dim() != data.d()) throw DimensionMismatch("fixed posterior dimension does not match the data");
    out.posterior = *fixed_posterior;
  } else {
    out.posterior = gibbs_posterior(prior.base, data, bound.lambda);
  }

  double kl = kl_gaussian(out.posterior, prior.base);
  std::string note;
  if (prior.truncated()) {
    const double escape = ball_escape_bound(out.posterior, prior.base.mean, *prior.truncation_radius);
    if (!(escape <= kMaxEscape)) {
      std::ostringstream msg;
      msg << "posterior mass outside the truncation ball may reach " << escape << " (limit " << kMaxEscape
          << "); increase the truncation radius";
      throw ConfigError(msg.str());
    }
    kl = std::max(0.0, kl + log_ball_mass(prior) - std::log1p(-escape));
    note = "posterior restricted to the truncation ball";
  }

  const RegressionMoments mom = regression_moments(model);
  double empirical = 0.0;
  if (bound.kind == BoundKind::bounded_loss) {
    empirical = expected_clipped_empirical_loss(out.posterior, data, bound.loss_bound);
    out.lhs = clipped_generalization(out.posterior, mom, bound.loss_bound, lhs_seed);
  } else {
    empirical = expected_empirical_loss(out.posterior, data);
    out.lhs = expected_generalization_loss(out.posterior, mom);
  }

  out.certificate = assemble_certificate(empirical, kl, psi, bound.lambda, bound.delta, bound.kind);
  out.certificate.n = data.n();
  out.certificate.d = data.d();
  if (!note.empty()) {
    out.certificate.note = out.certificate.note.empty() ? note : out.certificate.note + "; " + note;
  }
  return out;
}

CertifiedPosterior certify(const PriorSpec& prior, const DataModel& model, const Dataset& data,
                           const BoundSettings& bound, const McSettings& mc) {
  const PsiEstimate psi = compute_psi(prior, model, data.n(), bound, mc);
  return certify_with_psi(prior, model, data, bound, psi, std::nullopt, mc.seed.child(0xC1));
}

std::pair<double, double> wilson_interval(Index successes, Index trials) {
  if (trials <= 0 || successes < 0 || successes > trials) throw InvalidArgument("invalid counts for Wilson interval");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = kWilsonZ * kWilsonZ;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = kWilsonZ * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  const double lower = successes == 0 ? 0.0 : std::max(0.0, center - half);
  const double upper = successes == trials ? 1.0 : std::min(1.0, center + half);
  return {lower, upper};
}

CoverageReport coverage_experiment(const DataModel& model, const PriorSpec& prior, const CoverageSettings& settings) {
  if (settings.trials < 100) throw InvalidArgument("coverage needs at least 100 trials");
  if (settings.n < 1) throw InvalidArgument("n must be positive");
  validate(model);
  validate(prior);

  BoundSettings bound = settings.bound;
  if (bound.kind == BoundKind::thm4 && !bound.rho_n) bound.rho_n = rho_at(model, settings.n);
  if (!finiteness_check(prior, model, bound.lambda, bound.kind, bound.rho_star.value_or(0.0))) {
    throw DivergedError("Psi is infinite for this configuration: " +
                        finiteness_condition(prior, model, bound.lambda, bound.kind, bound.rho_star.value_or(0.0)));
  }
  const PsiEstimate psi = checked_psi(prior, model, settings.n, bound, settings.mc);

  CoverageReport report;
  report.trials = settings.trials;
  report.delta = bound.delta;
  report.kind = bound.kind;
  report.lambda = bound.lambda;
  report.n = settings.n;
  report.psi = psi;
  report.rows.resize(static_cast<std::size_t>(settings.trials));

  const SeedSpec data_root = settings.seed.child(1);
  const SeedSpec lhs_root = settings.seed.child(2);
  for_each_index(
      settings.trials,
      [&](Index t) {
        const Dataset data = sample_dataset(model, settings.n, data_root.child(static_cast<std::uint64_t>(t)));
        const CertifiedPosterior cp = certify_with_psi(prior, model, data, bound, psi, settings.fixed_posterior,
                                                       lhs_root.child(static_cast<std::uint64_t>(t)));
        CoverageTrial& row = report.rows[static_cast<std::size_t>(t)];
        row.trial = t;
        row.lhs = cp.lhs;
        row.rhs = cp.certificate.rhs;
        row.violation = cp.lhs > cp.certificate.rhs;
      },
      settings.exec);

  report.violations = static_cast<Index>(
      std::count_if(report.rows.begin(), report.rows.end(), [](const CoverageTrial& r) { return r.violation; }));
  report.rate = static_cast<double>(report.violations) / static_cast<double>(report.trials);
  std::tie(report.wilson_lower, report.wilson_upper) = wilson_interval(report.violations, report.trials);
  return report;
}

bool SweepTable::all_ok() const {
  return std::all_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.skipped || r.ok; });
}

SweepTable compare_bounds(const IIDIsotropic& model, const PriorSpec& prior, const CompareSettings& settings) {
  const DataModel dm{model};
  validate(dm);
  const double sigma_pi = require_thm2_prior(prior);
  if (prior.dim() != model.w_star.size()) throw DimensionMismatch("prior dimension does not match the data model");
  const double c = settings.c.value_or(thm2_min_c(sigma_pi, model));
  if (c < thm2_min_c(sigma_pi, model)) throw ConfigError("c must be at least 2 sigma_x^2 sigma_pi^2");

  std::vector<double> grid = settings.lambda_grid;
  std::sort(grid.begin(), grid.end());
  const Dataset data = sample_iid(model, settings.n, settings.seed.child(0));

  SweepTable table;
  table.kind = "compare";
  for (double lambda : grid) {
    SweepRow row;
    row.n = settings.n;
    row.lambda = lambda;
    if (!(lambda > 0.0) || !(lambda * c < 1.0)) {
      std::ostringstream why;
      why << "lambda outside (0, 1/c) = (0, " << 1.0 / c << ")";
      row.skipped = true;
      row.ok = false;
      row.note = why.str();
      table.rows.push_back(row);
      continue;
    }
    BoundSettings b3;
    b3.kind = BoundKind::thm3_exact;
    b3.lambda = lambda;
    b3.delta = settings.delta;
    const PsiEstimate psi3 = compute_psi(prior, dm, settings.n, b3, settings.mc);
    const CertifiedPosterior cert3 = certify_with_psi(prior, dm, data, b3, psi3);
    BoundSettings b2 = b3;
    b2.kind = BoundKind::thm2;
    b2.c = c;
    const PsiEstimate psi2 = compute_psi(prior, dm, settings.n, b2, settings.mc);
    const CertifiedPosterior cert2 = certify_with_psi(prior, dm, data, b2, psi2);

    row.psi_value = psi3.value;
    row.psi_se = psi3.std_error;
    row.lhs = cert3.certificate.rhs;
    row.rhs = cert2.certificate.rhs;
    row.gap = row.rhs - row.lhs;
    row.ok = psi3.finite() && row.lhs <= row.rhs + 3.0 * cert3.certificate.rhs_std_error;
    if (!psi3.finite()) row.note = psi3.note;
    table.rows.push_back(row);
  }
  return table;
}

double lambda_for(const LambdaSchedule& schedule, Index n, Index d, double delta) {
  if (n < 1) throw InvalidArgument("n must be positive");
  switch (schedule.rule) {
    case LambdaRule::fixed:
      return schedule.value;
    case LambdaRule::sqrt_n:
      return std::sqrt(static_cast<double>(n));
    case LambdaRule::n_pow_inv_d:
      if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("n_pow_inv_d needs delta in (0, 1)");
      return std::pow(static_cast<double>(n), 1.0 / static_cast<double>(d)) * std::log(1.0 / delta);
  }
  throw InvalidArgument("unknown lambda rule");
}

SweepTable convergence_sweep(const DataModel& model, const PriorSpec& prior, const SweepSettings& settings) {
  validate(model);
  validate(prior);
  if (settings.n_grid.empty()) throw InvalidArgument("n_grid is empty");
  if (settings.schedule.rule == LambdaRule::n_pow_inv_d && !prior.truncated()) {
    throw ConfigError(
        "lambda = n^{1/d} ln(1/delta) relies on the relaxed complexity term, which is infinite for an untruncated "
        "Gaussian prior; use a truncated prior");
  }
  std::vector<Index> grid = settings.n_grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (grid.front() < 1) throw InvalidArgument("n_grid entries must be positive");

  const Index d = dimension(model);
  const Dataset full = sample_dataset(model, grid.back(), settings.seed.child(0));

  SweepTable table;
  table.kind = "convergence";
  std::optional<double> previous_psi;
  for (Index n : grid) {
    BoundSettings bound;
    bound.kind = settings.kind;
    bound.lambda = lambda_for(settings.schedule, n, d, settings.delta);
    bound.delta = settings.delta;
    bound.loss_bound = settings.loss_bound;
    const PsiEstimate psi = compute_psi(prior, model, n, bound, settings.mc);

    SweepRow row;
    row.n = n;
    row.lambda = bound.lambda;
    row.psi_value = psi.value;
    row.psi_se = psi.std_error;
    if (!psi.finite()) {
      row.ok = false;
      row.note = psi.note;
      row.lhs = std::numeric_limits<double>::quiet_NaN();
      row.rhs = std::numeric_limits<double>::infinity();
      row.gap = std::numeric_limits<double>::infinity();
      table.rows.push_back(row);
      continue;
    }
    const Dataset data{full.x.topRows(n), full.y.head(n)};
    const CertifiedPosterior cp = certify_with_psi(prior, model, data, bound, psi, std::nullopt, settings.seed.child(2));
    row.lhs = cp.lhs;
    row.rhs = cp.certificate.rhs;
    row.gap = row.rhs - row.lhs;
    row.ok = row.gap >= 0.0;
    if (settings.schedule.rule == LambdaRule::fixed && previous_psi) row.ok = row.ok && psi.value <= *previous_psi;
    previous_psi = psi.value;
    table.rows.push_back(row);
  }
  return table;
}

SweepTable noniid_asymptote_sweep(const Arx& arx, const PriorSpec& prior, const AsymptoteSettings& settings) {
  const DataModel model{arx};
  validate(model);
  validate(prior);
  if (settings.n_grid.empty()) throw InvalidArgument("n_grid is empty");
  std::vector<Index> grid = settings.n_grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (grid.front() < 1) throw InvalidArgument("n_grid entries must be positive");

  std::vector<Index> sizes = grid;
  sizes.push_back(std::max<Index>(1, grid.back() / 2));
  const std::vector<double> rho = rho_at(model, sizes);
  const double rho_last = rho[grid.size() - 1];
  const double rho_ref = std::max(0.0, rho_last - (rho.back() - rho_last));
  const PsiEstimate limit = psi_cor6_limit(prior, model, settings.lambda, rho_ref, settings.mc);
  if (!limit.finite()) throw DivergedError("asymptote diverged: " + limit.note);

  SweepTable table;
  table.kind = "asymptote";
  std::optional<double> previous_gap;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Index n = grid[i];
    const double rho_n = rho[i];
    const PsiEstimate psi = psi_thm4(prior, model, settings.lambda, n, rho_n, settings.mc);
    if (!psi.finite()) throw DivergedError("thm4 Psi diverged at n = " + std::to_string(n) + ": " + psi.note);
    SweepRow row;
    row.n = n;
    row.lambda = settings.lambda;
    row.psi_value = psi.value;
    row.psi_se = psi.std_error;
    row.lhs = limit.value;
    row.rhs = psi.value;
    row.gap = psi.value - limit.value;
    row.ok = psi.value >= limit.value - 3.0 * psi.std_error;
    if (previous_gap) row.ok = row.ok && row.gap <= *previous_gap;
    previous_gap = row.gap;
    table.rows.push_back(row);
  }
  return table;
}

LossConvergenceTable empirical_loss_convergence(const Arx& arx, const WeightVector& w, std::vector<Index> n_grid,
                                                SeedSpec seed) {
  const DataModel model{arx};
  validate(model);
  if (n_grid.empty()) throw InvalidArgument("n_grid is empty");
  std::sort(n_grid.begin(), n_grid.end());
  n_grid.erase(std::unique(n_grid.begin(), n_grid.end()), n_grid.end());
  if (n_grid.front() < 1) throw InvalidArgument("n_grid entries must be positive");
  if (w.size() != dimension(model)) throw DimensionMismatch("w does not match the ARX regressor dimension");

  const Index n_max = n_grid.back();
  const Dataset data = sample_dataset(model, n_max, seed);
  const Vector residual = data.y - data.x * w;
  std::vector<double> losses(static_cast<std::size_t>(n_max));
  for (Index i = 0; i < n_max; ++i) losses[static_cast<std::size_t>(i)] = residual(i) * residual(i);
  const double truth = generalization_loss(w, model);

  LossConvergenceTable table;
  for (Index n : n_grid) {
    LossConvergenceRow row;
    row.n = n;
    row.empirical = pairwise_sum(std::span<const double>(losses.data(), static_cast<std::size_t>(n))) /
                    static_cast<double>(n);
    row.generalization = truth;
    row.abs_gap = std::abs(row.empirical - truth);
    table.rows.push_back(row);
  }

  // Batch means: batches of about sqrt(n_max) consecutive losses absorb the
  // serial correlation of the trajectory.
  const Index batch = std::max<Index>(1, static_cast<Index>(std::sqrt(static_cast<double>(n_max))));
  const Index batches = n_max / batch;
  if (batches >= 2) {
    std::vector<double> means(static_cast<std::size_t>(batches));
    for (Index b = 0; b < batches; ++b) {
      means[static_cast<std::size_t>(b)] =
          pairwise_sum(std::span<const double>(losses.data() + b * batch, static_cast<std::size_t>(batch))) /
          static_cast<double>(batch);
    }
    const double grand = pairwise_sum(means) / static_cast<double>(batches);
    double ss = 0.0;
    for (double m : means) ss += (m - grand) * (m - grand);
    table.long_run_variance = static_cast<double>(batch) * ss / static_cast<double>(batches - 1);
  }
  table.threshold = 5.0 * std::sqrt(table.long_run_variance / static_cast<double>(n_max));
  table.passed = batches >= 2 && table.rows.back().abs_gap < table.threshold;
  return table;
}

DvReport dv_markov_check(SeedSpec seed, Index cases) {
  if (cases < 1) throw InvalidArgument("cases must be positive");
  Engine eng = seed.engine();
  std::uniform_int_distribution<int> atoms_dist(2, 16);
  std::exponential_distribution<double> gamma1(1.0);
  std::normal_distribution<double> normal(0.0, 2.0);

  auto normalize = [](std::vector<double>& p) {
    const double s = std::accumulate(p.begin(), p.end(), 0.0);
    for (double& x : p) x /= s;
  };
  auto log_sum_exp = [](const std::vector<double>& logs) {
    const double m = *std::max_element(logs.begin(), logs.end());
    double s = 0.0;
    for (double l : logs) s += std::exp(l - m);
    return m + std::log(s);
  };
  auto kl = [](const std::vector<double>& rho, const std::vector<double>& pi) {
    double k = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) {
      if (rho[i] > 0.0) k += rho[i] * (std::log(rho[i]) - std::log(pi[i]));
    }
    return k;
  };

  DvReport report;
  report.cases = cases;
  report.max_violation = -std::numeric_limits<double>::infinity();
  report.min_strict_slack = std::numeric_limits<double>::infinity();
  for (Index c = 0; c < cases; ++c) {
    const auto m = static_cast<std::size_t>(atoms_dist(eng));
    std::vector<double> pi(m), rho(m), phi(m);
    for (auto& x : pi) x = gamma1(eng);
    for (auto& x : rho) x = gamma1(eng);
    for (auto& x : phi) x = normal(eng);
    normalize(pi);
    normalize(rho);

    std::vector<double> logs(m);
    for (std::size_t i = 0; i < m; ++i) logs[i] = std::log(pi[i]) + phi[i];
    const double log_mgf = log_sum_exp(logs);

    const double lhs = std::inner_product(rho.begin(), rho.end(), phi.begin(), 0.0);
    const double rhs = kl(rho, pi) + log_mgf;
    report.max_violation = std::max(report.max_violation, lhs - rhs);
    report.min_strict_slack = std::min(report.min_strict_slack, rhs - lhs);

    std::vector<double> tilted(m);
    for (std::size_t i = 0; i < m; ++i) tilted[i] = std::exp(logs[i] - log_mgf);
    const double t_lhs = std::inner_product(tilted.begin(), tilted.end(), phi.begin(), 0.0);
    const double t_rhs = kl(tilted, pi) + log_mgf;
    report.max_tilted_gap = std::max(report.max_tilted_gap, std::abs(t_lhs - t_rhs));
  }
  report.passed = report.max_violation <= 1e-12 && report.max_tilted_gap <= 1e-9;
  return report;
}

HoeffdingReport hoeffding_mgf_check(const HoeffdingSettings& s) {
  if (!(s.loss_bound > 0.0)) throw InvalidArgument("loss bound L must be positive");
  if (!(s.lambda >= 0.0)) throw InvalidArgument("lambda must be non-negative");
  if (s.n < 1 || s.trials < 2 || s.predictors < 1) throw InvalidArgument("n, trials and predictors must be positive");
  const DataModel dm{s.model};
  validate(dm);
  const Index d = s.model.w_star.size();
  const RegressionMoments mom = regression_moments(dm);

  std::vector<WeightVector> predictors(static_cast<std::size_t>(s.predictors), WeightVector(d));
  {
    Engine eng = s.seed.child(0).engine();
    std::normal_distribution<double> normal(0.0, s.predictor_sigma);
    for (auto& w : predictors) {
      for (Index j = 0; j < d; ++j) w(j) = normal(eng);
    }
  }

  const double bound = std::exp(s.lambda * s.lambda * s.loss_bound * s.loss_bound / (8.0 * static_cast<double>(s.n)));
  HoeffdingReport report;
  report.rows.resize(predictors.size());
  for_each_index(s.predictors, [&](Index j) {
    const WeightVector& w = predictors[static_cast<std::size_t>(j)];
    const double truth = clipped_square_moment(0.0, std::sqrt(mom.v(w)), s.loss_bound);
    Engine eng = s.seed.child(1 + static_cast<std::uint64_t>(j)).engine();
    std::normal_distribution<double> normal;
    LogExpAccumulator acc;
    Vector x(d);
    std::vector<double> losses(static_cast<std::size_t>(s.n));
    for (Index t = 0; t < s.trials; ++t) {
      for (auto& l : losses) {
        for (Index k = 0; k < d; ++k) x(k) = s.model.sigma_x * normal(eng);
        const double y = s.model.w_star.dot(x) + s.model.sigma_eps * normal(eng);
        const double r = y - w.dot(x);
        l = std::min(r * r, s.loss_bound);
      }
      const double emp = pairwise_sum(losses) / static_cast<double>(s.n);
      acc.add(s.lambda * (truth - emp));
    }
    HoeffdingRow& row = report.rows[static_cast<std::size_t>(j)];
    row.mgf = std::exp(acc.log_mean());
    row.se_rel = acc.log_mean_std_error();
    row.bound = bound;
    row.ok = row.mgf <= bound * (1.0 + 5.0 * row.se_rel);
  });
  report.passed = std::all_of(report.rows.begin(), report.rows.end(), [](const HoeffdingRow& r) { return r.ok; });
  return report;
}

}  // namespace pacb
