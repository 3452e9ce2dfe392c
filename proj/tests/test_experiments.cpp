#include "pacb/errors.hpp"
#include "pacb/experiments.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace pacb;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

const IIDIsotropic kIid{vec({0.5, -0.5}), 1.0, 0.5};

McSettings mc(Index samples, std::uint64_t seed = 1) { return {samples, {seed, 0}, Execution::parallel}; }

}  // namespace

TEST(Wilson, KnownValues) {
  const auto [lo0, hi0] = wilson_interval(0, 1000);
  EXPECT_EQ(lo0, 0.0);
  EXPECT_NEAR(hi0, 0.0038267584855551, 1e-12);
  const auto [lo, hi] = wilson_interval(50, 1000);
  // z = 1.96: (0.0381, 0.0653)
  EXPECT_NEAR(lo, 0.03813, 1e-4);
  EXPECT_NEAR(hi, 0.06531, 1e-4);
  EXPECT_THROW(wilson_interval(5, 0), InvalidArgument);
}

TEST(Certify, PipelineMatchesHandAssembly) {
  const DataModel m{kIid};
  const PriorSpec prior = PriorSpec::gaussian(2, 0.5);
  const Dataset data = sample_dataset(m, 50, {3, 0});
  BoundSettings b;
  b.lambda = 1.0;
  b.delta = 0.05;
  const CertifiedPosterior cp = certify(prior, m, data, b, mc(20000));
  const auto post = gibbs_posterior(prior.base, data, 1.0);
  const double kl = kl_gaussian(post, prior.base);
  const double emp = expected_empirical_loss(post, data);
  const double psi = cp.certificate.psi.value;
  EXPECT_NEAR(cp.certificate.rhs, emp + (kl + std::log(20.0) + psi) / 1.0, 1e-12);
  EXPECT_EQ(cp.certificate.n, 50);
  EXPECT_EQ(cp.certificate.d, 2);
  EXPECT_NEAR(cp.lhs, expected_generalization_loss(post, m), 1e-15);
}

TEST(Certify, TruncatedPriorAddsBallCorrection) {
  const DataModel m{kIid};
  const PriorSpec prior = PriorSpec::truncated_gaussian(2, 1.0);
  const Dataset data = sample_dataset(m, 50, {3, 0});
  BoundSettings b;
  b.lambda = std::sqrt(50.0);
  const CertifiedPosterior cp = certify(prior, m, data, b, mc(20000));
  const double kl = kl_gaussian(gibbs_posterior(prior.base, data, b.lambda), prior.base);
  EXPECT_NEAR(cp.certificate.kl, kl + log_ball_mass(prior), 1e-12);
  EXPECT_LT(log_ball_mass(prior), 0.0);

  const PriorSpec tight = PriorSpec::truncated_gaussian(2, 1.0, 0.3);
  EXPECT_THROW(certify(tight, m, data, b, mc(20000)), ConfigError);
}

TEST(Certify, Thm2NeedsIidAndPlainPrior) {
  const Dataset data = sample_dataset(DataModel{kIid}, 50, {3, 0});
  BoundSettings b;
  b.kind = BoundKind::thm2;
  b.lambda = 0.3;
  const CertifiedPosterior cp = certify(PriorSpec::gaussian(2, 1.0), kIid, data, b, mc(20000));
  EXPECT_EQ(cp.certificate.psi.method, PsiMethod::closed_form);
  EXPECT_NEAR(cp.certificate.psi.value, psi_thm2_term(1.0, kIid, 0.3, 2.0), 1e-15);
  b.lambda = 0.6;
  EXPECT_THROW(certify(PriorSpec::gaussian(2, 1.0), kIid, data, b, mc(20000)), DomainError);
  b.lambda = 0.3;
  EXPECT_THROW(certify(PriorSpec::truncated_gaussian(2, 1.0), kIid, data, b, mc(20000)), ConfigError);
}

TEST(Certify, BoundedLossUsesClippedLosses) {
  const DataModel m{kIid};
  const Dataset data = sample_dataset(m, 100, {5, 0});
  BoundSettings b;
  b.kind = BoundKind::bounded_loss;
  b.lambda = 10.0;
  b.loss_bound = 1.0;
  const CertifiedPosterior cp = certify(PriorSpec::gaussian(2, 1.0), m, data, b, mc(20000));
  EXPECT_DOUBLE_EQ(cp.certificate.psi.value, 100.0 / 800.0);
  EXPECT_LE(cp.certificate.expected_empirical, 1.0);
  EXPECT_LE(cp.lhs, 1.0);
  EXPECT_GT(cp.certificate.rhs, cp.lhs);
  EXPECT_THROW(certify(PriorSpec::gaussian(2, 1.0), DataModel{Arx{vec({0.5}), vec({0.3}), 0.5, 1.0}},
                       sample_dataset(DataModel{Arx{vec({0.5}), vec({0.3}), 0.5, 1.0}}, 20, {1, 0}), b, mc(20000)),
               ConfigError);
}

TEST(Coverage, SmallRunDeterministicAndBelowDelta) {
  CoverageSettings s;
  s.bound.lambda = 1.0;
  s.n = 30;
  s.trials = 200;
  s.seed = {11, 0};
  s.mc = mc(20000);
  const PriorSpec prior = PriorSpec::gaussian(2, 0.5);
  const CoverageReport a = coverage_experiment(kIid, prior, s);
  const CoverageReport b = coverage_experiment(kIid, prior, s);
  EXPECT_EQ(a.violations, b.violations);
  ASSERT_EQ(a.rows.size(), 200u);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].lhs, b.rows[i].lhs);
    EXPECT_EQ(a.rows[i].rhs, b.rows[i].rhs);
  }
  EXPECT_LE(a.rate, 0.05);
  EXPECT_EQ(a.rate, static_cast<double>(a.violations) / 200.0);
  EXPECT_LE(a.violations, a.trials);

  s.exec = Execution::serial;
  const CoverageReport c = coverage_experiment(kIid, prior, s);
  EXPECT_EQ(c.rows.back().rhs, a.rows.back().rhs);

  s.bound.delta = 1.0;
  EXPECT_NO_THROW(coverage_experiment(kIid, prior, s));
}

TEST(Coverage, FixedPosteriorMode) {
  CoverageSettings s;
  s.bound.lambda = 1.0;
  s.n = 30;
  s.trials = 100;
  s.mc = mc(20000);
  s.fixed_posterior = GaussianWeightMeasure::isotropic(2, 0.1, vec({0.5, -0.5}));
  const CoverageReport r = coverage_experiment(kIid, PriorSpec::gaussian(2, 0.5), s);
  for (const auto& row : r.rows) EXPECT_EQ(row.lhs, r.rows.front().lhs);
}

TEST(Coverage, Preconditions) {
  CoverageSettings s;
  s.bound.lambda = 1.0;
  s.trials = 0;
  EXPECT_THROW(coverage_experiment(kIid, PriorSpec::gaussian(2, 1.0), s), InvalidArgument);
  s.trials = 100;
  try {
    coverage_experiment(kIid, PriorSpec::gaussian(2, 1.0), s);
    FAIL() << "expected divergence";
  } catch (const DivergedError& e) {
    EXPECT_NE(std::string(e.what()).find("2 lambda sigma_x,max^2 sigma_pi^2 < 1"), std::string::npos);
  }
}

TEST(CompareBounds, GapsAndPole) {
  CompareSettings s;
  const double c = 2.0;
  for (int j = 1; j <= 20; ++j) s.lambda_grid.push_back((j / 21.0) / c);
  s.lambda_grid.push_back(0.7);
  s.lambda_grid.push_back(-0.1);
  s.mc = mc(50000);
  const SweepTable t = compare_bounds(kIid, PriorSpec::gaussian(2, 1.0), s);
  ASSERT_EQ(t.rows.size(), 22u);
  EXPECT_TRUE(t.rows.front().skipped);
  EXPECT_TRUE(t.rows.back().skipped);
  EXPECT_NE(t.rows.back().note.find("outside"), std::string::npos);
  for (const auto& r : t.rows) {
    if (r.skipped) continue;
    EXPECT_GE(r.gap, -3 * r.psi_se / r.lambda);
    EXPECT_TRUE(r.ok);
  }
  EXPECT_TRUE(std::is_sorted(t.rows.begin(), t.rows.end(),
                             [](const SweepRow& a, const SweepRow& b) { return a.lambda < b.lambda; }));
  const SweepRow& last = t.rows[20];
  EXPECT_GT(last.rhs / last.lhs, 2.0);
  EXPECT_TRUE(t.all_ok());

  SweepTable pole = compare_bounds(kIid, PriorSpec::gaussian(2, 1.0), {{0.4999}, 0.05, 50, std::nullopt, {1, 0}, mc(50000)});
  EXPECT_GT(pole.rows[0].rhs / pole.rows[0].lhs, 10.0);
}

TEST(ConvergenceSweep, FixedLambdaPsiDecays) {
  SweepSettings s;
  s.schedule = {LambdaRule::fixed, 1.0};
  s.n_grid = {10000, 100, 1000};
  s.mc = mc(100000);
  const SweepTable t = convergence_sweep(kIid, PriorSpec::gaussian(2, 0.5), s);
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_EQ(t.rows[0].n, 100);
  EXPECT_EQ(t.rows[2].n, 10000);
  EXPECT_LE(t.rows[1].psi_value, t.rows[0].psi_value);
  EXPECT_LE(t.rows[2].psi_value, t.rows[1].psi_value);
  EXPECT_LT(t.rows[2].psi_value, 0.01 * t.rows[0].psi_value + 3 * t.rows[2].psi_se);
  EXPECT_TRUE(t.all_ok());

  s.n_grid = {64};
  EXPECT_EQ(convergence_sweep(kIid, PriorSpec::gaussian(2, 0.5), s).rows.size(), 1u);
}

TEST(ConvergenceSweep, SqrtNBoundedLossPenaltyScaling) {
  SweepSettings s;
  s.schedule = {LambdaRule::sqrt_n, 0.0};
  s.kind = BoundKind::bounded_loss;
  s.n_grid = {100, 1000, 10000};
  s.mc = mc(20000);
  const SweepTable t = convergence_sweep(kIid, PriorSpec::gaussian(2, 1.0), s);
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    const double ratio = (t.rows[i].psi_value / t.rows[i].lambda) / (t.rows[i - 1].psi_value / t.rows[i - 1].lambda);
    EXPECT_NEAR(ratio, 1.0 / std::sqrt(10.0), 0.2 / std::sqrt(10.0));
  }
}

TEST(ConvergenceSweep, NPowInvDNeedsTruncation) {
  SweepSettings s;
  s.schedule = {LambdaRule::n_pow_inv_d, 0.0};
  s.kind = BoundKind::thm3_relaxed;
  s.n_grid = {100, 400};
  s.mc = mc(20000);
  EXPECT_THROW(convergence_sweep(kIid, PriorSpec::gaussian(2, 1.0), s), ConfigError);
  const SweepTable t = convergence_sweep(kIid, PriorSpec::truncated_gaussian(2, 1.0), s);
  EXPECT_NEAR(t.rows[0].lambda, 10.0 * std::log(20.0), 1e-12);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_NEAR(t.rows[1].lambda, 20.0 * std::log(20.0), 1e-12);
}

TEST(AsymptoteSweep, Ar1AndDegenerate) {
  AsymptoteSettings s{0.25, {8, 32, 128, 512}, mc(50000)};
  const SweepTable t = noniid_asymptote_sweep(Arx{vec({0.5}), vec({0.0}), 1.0, 1.0}, PriorSpec::gaussian(2, 1.0), s);
  EXPECT_TRUE(t.all_ok());
  EXPECT_LT(t.rows[3].gap, t.rows[1].gap);

  const SweepTable iid = noniid_asymptote_sweep(Arx{vec({0.0}), vec({0.0}), 1.0, 1.0}, PriorSpec::gaussian(2, 1.0), s);
  for (const auto& r : iid.rows) EXPECT_EQ(r.lhs, 0.0);
  EXPECT_LT(iid.rows.back().psi_value, iid.rows.front().psi_value);
}

TEST(EmpiricalLossConvergence, TrueWeightsGiveNoiseVariance) {
  const Arx arx{vec({0.5}), vec({0.3}), 0.5, 1.0};
  const LossConvergenceTable t =
      empirical_loss_convergence(arx, arx_true_weights(arx), {1000, 10000, 100000}, {2, 0});
  EXPECT_NEAR(t.rows.back().generalization, 0.25, 1e-15);
  EXPECT_TRUE(t.passed);
  const LossConvergenceTable again =
      empirical_loss_convergence(arx, arx_true_weights(arx), {1000, 10000, 100000}, {2, 0});
  EXPECT_EQ(again.rows.back().empirical, t.rows.back().empirical);
}

TEST(EmpiricalLossConvergence, CltRateOverSeeds) {
  // Median |gap| shrinks by about 1/sqrt(2) per doubling; fitted slope over
  // several doublings in log-log space is -1/2 within 30%.
  const Arx arx{vec({0.5}), vec({0.3}), 0.5, 1.0};
  const std::vector<Index> grid{2000, 4000, 8000, 16000, 32000, 64000};
  std::vector<std::vector<double>> gaps(grid.size());
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto t = empirical_loss_convergence(arx, vec({0.2, 0.1}), grid, {100 + seed, 0});
    for (std::size_t i = 0; i < grid.size(); ++i) gaps[i].push_back(t.rows[i].abs_gap);
  }
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::sort(gaps[i].begin(), gaps[i].end());
    lx.push_back(std::log(static_cast<double>(grid[i])));
    ly.push_back(std::log(0.5 * (gaps[i][9] + gaps[i][10])));
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  EXPECT_NEAR(sxy / sxx, -0.5, 0.15);
}

TEST(DvMarkov, ExactOnFiniteSpaces) {
  const DvReport r = dv_markov_check({1, 0}, 1000);
  EXPECT_TRUE(r.passed);
  EXPECT_LE(r.max_violation, 1e-12);
  EXPECT_LE(r.max_tilted_gap, 1e-9);
  EXPECT_GT(r.min_strict_slack, 0.0);
}

TEST(Hoeffding, MgfBelowBound) {
  HoeffdingSettings s;
  s.lambda = 10.0;
  s.n = 100;
  s.trials = 5000;
  s.seed = {3, 0};
  const HoeffdingReport r = hoeffding_mgf_check(s);
  EXPECT_EQ(r.rows.size(), 20u);
  EXPECT_TRUE(r.passed);

  s.lambda = 0.0;
  const HoeffdingReport zero = hoeffding_mgf_check(s);
  for (const auto& row : zero.rows) {
    EXPECT_EQ(row.mgf, 1.0);
    EXPECT_EQ(row.bound, 1.0);
    EXPECT_TRUE(row.ok);
  }
  // Tiny loss bound: the clipped loss is constant at L, MGF is 1.
  s.lambda = 10.0;
  s.loss_bound = 1e-12;
  s.trials = 200;
  const HoeffdingReport flat = hoeffding_mgf_check(s);
  for (const auto& row : flat.rows) EXPECT_LE(row.mgf, row.bound * (1 + 1e-12));
}
