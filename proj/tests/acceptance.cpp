// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include "pacb/bounds.hpp"
#include "pacb/datagen.hpp"
#include "pacb/errors.hpp"
#include "pacb/experiments.hpp"
#include "pacb/posterior.hpp"
#include "pacb/report.hpp"
#include "pacb/spectral.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace pacb;

namespace {

int failures = 0;

void report(int k, bool ok, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", k, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

void run(int k, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(k, false, std::string("threw: ") + e.what());
  }
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

McSettings mc(Index samples, std::uint64_t seed) { return {samples, {seed, 0}, Execution::parallel}; }

const IIDIsotropic kIid{vec({0.5, -0.5}), 1.0, 0.5};
const Arx kArx{vec({0.5}), vec({0.3}), 0.5, 1.0};

Arx random_stable_arx(std::mt19937_64& eng) {
  std::uniform_real_distribution<double> u(-0.9, 0.9), s(0.3, 2.0);
  std::uniform_int_distribution<int> order(1, 3);
  const int k = order(eng);
  Vector poly = Vector::Zero(k + 1);
  poly(0) = 1.0;
  for (int i = 0; i < k; ++i) {
    const double root = u(eng);
    Vector next = Vector::Zero(k + 1);
    for (int j = 0; j <= i; ++j) {
      next(j) += poly(j);
      next(j + 1) -= root * poly(j);
    }
    poly = next;
  }
  Arx arx;
  arx.a = -poly.tail(k);
  arx.b = Vector(k);
  for (int i = 0; i < k; ++i) arx.b(i) = u(eng);
  arx.sigma_e = s(eng);
  arx.sigma_u = s(eng);
  return arx;
}

void coverage_thm3() {
  const auto t0 = std::chrono::steady_clock::now();
  CoverageSettings s;
  s.bound.lambda = std::sqrt(50.0);
  s.n = 50;
  s.trials = 1000;
  s.seed = {2024, 0};
  s.mc = mc(100000, 7);
  // A plain Gaussian prior has no finite exponential moment at lambda = sqrt(n);
  // the bounded-support prior below keeps the certificate finite.
  const CoverageReport r = coverage_experiment(kIid, PriorSpec::truncated_gaussian(2, 1.0), s);
  const double secs = seconds_since(t0);
  report(1, r.rate <= 0.05 && secs < 60.0,
         fmt("violations %ld/%ld (rate %.4f, wilson [%.4f, %.4f]), psi %.4g, %.1f s", long(r.violations),
             long(r.trials), r.rate, r.wilson_lower, r.wilson_upper, r.psi.value, secs));
}

void coverage_thm4() {
  const auto t0 = std::chrono::steady_clock::now();
  CoverageSettings s;
  s.bound.kind = BoundKind::thm4;
  s.bound.lambda = 4.0;
  s.n = 64;
  s.trials = 500;
  s.seed = {2025, 0};
  s.mc = mc(100000, 8);
  const CoverageReport r = coverage_experiment(kArx, PriorSpec::gaussian(2, 0.2), s);
  const double secs = seconds_since(t0);
  report(2, r.rate <= 0.05 && secs < 120.0,
         fmt("violations %ld/%ld (rate %.4f), psi %.4g (ess %.0f), %.1f s", long(r.violations), long(r.trials), r.rate,
             r.psi.value, r.psi.ess, secs));
}

void tightness() {
  CompareSettings s;
  const double c = 2.0;  // 2 sigma_x^2 sigma_pi^2
  for (int j = 1; j <= 20; ++j) s.lambda_grid.push_back((j / 21.0) / c);
  s.c = c;
  s.seed = {31, 0};
  s.mc = mc(100000, 9);
  const SweepTable t = compare_bounds(kIid, PriorSpec::gaussian(2, 1.0), s);
  bool all = t.rows.size() == 20;
  double best = 0;
  for (const auto& r : t.rows) {
    all = all && !r.skipped && r.lhs <= r.rhs + 3 * r.psi_se / r.lambda;
    best = std::max(best, r.rhs / r.lhs);
  }
  report(3, all && best > 2.0, fmt("thm3 <= thm2 + 3 SE on %zu points, max ratio thm2/thm3 %.3f", t.rows.size(), best));
}

void convergence() {
  SweepSettings s;
  s.schedule = {LambdaRule::fixed, 1.0};
  s.n_grid = {100, 1000, 10000};
  s.seed = {41, 0};
  s.mc = mc(100000, 10);
  const SweepTable t = convergence_sweep(kIid, PriorSpec::gaussian(2, 0.5), s);
  const auto& r = t.rows;
  const bool mono = r[1].psi_value <= r[0].psi_value && r[2].psi_value <= r[1].psi_value;
  const bool decay = r[2].psi_value < 0.02 * r[0].psi_value + 3 * r[2].psi_se;
  report(4, mono && decay,
         fmt("psi(1e2) %.6g, psi(1e3) %.6g, psi(1e4) %.6g (se %.2g)", r[0].psi_value, r[1].psi_value, r[2].psi_value,
             r[2].psi_se));
}

void asymptote() {
  AsymptoteSettings s{0.25, {8, 32, 128, 512}, mc(100000, 11)};
  const SweepTable t = noniid_asymptote_sweep(Arx{vec({0.5}), vec({0.0}), 1.0, 1.0}, PriorSpec::gaussian(2, 1.0), s);
  bool above = true;
  for (const auto& r : t.rows) above = above && r.psi_value >= r.lhs - 3 * r.psi_se;
  const double g32 = t.rows[1].gap, g512 = t.rows[3].gap;
  const SweepTable iid = noniid_asymptote_sweep(Arx{vec({0.0}), vec({0.0}), 1.0, 1.0}, PriorSpec::gaussian(2, 1.0), s);
  const double limit0 = iid.rows.front().lhs;
  report(5, above && g512 < g32 && std::abs(limit0) <= 1e-12,
         fmt("psi >= limit - 3 SE, gap(32) %.4g > gap(512) %.4g, iid limit %.3g", g32, g512, limit0));
}

void oracles() {
  using boost::math::quadrature::gauss_kronrod;
  std::mt19937_64 eng(61);
  std::normal_distribution<double> g;

  // 1-D Gibbs posterior against brute-force grid moments
  double gibbs_err = 0;
  for (int rep = 0; rep < 3; ++rep) {
    Dataset s{Matrix(20, 1), Vector(20)};
    for (Index i = 0; i < 20; ++i) {
      s.x(i, 0) = g(eng);
      s.y(i) = 0.7 * s.x(i, 0) + 0.5 * g(eng);
    }
    const GaussianWeightMeasure prior{vec({0.3}), Matrix::Constant(1, 1, 0.64)};
    const double lambda = 0.5 + rep;
    const GaussianWeightMeasure post = gibbs_posterior(prior, s, lambda);
    const double h = 1e-4;
    double z = 0, m1 = 0, m2 = 0;
    for (double w = -10.0; w <= 10.0; w += h) {
      const double p = std::exp(log_density(prior, vec({w})) - lambda * empirical_loss(vec({w}), s));
      z += p;
      m1 += p * w;
      m2 += p * w * w;
    }
    const double mean = m1 / z, var = m2 / z - mean * mean;
    gibbs_err = std::max({gibbs_err, std::abs(post.mean(0) - mean) / std::abs(mean),
                          std::abs(post.cov(0, 0) - var) / var});
  }

  double kl_err = 0;
  for (int rep = 0; rep < 5; ++rep) {
    std::uniform_real_distribution<double> sd(0.3, 2.0);
    const double m1 = g(eng), s1 = sd(eng), m2 = g(eng), s2 = sd(eng);
    const GaussianWeightMeasure r{vec({m1}), Matrix::Constant(1, 1, s1 * s1)};
    const GaussianWeightMeasure p{vec({m2}), Matrix::Constant(1, 1, s2 * s2)};
    auto f = [&](double w) {
      const double lr = log_density(r, vec({w}));
      return std::exp(lr) * (lr - log_density(p, vec({w})));
    };
    const double q = gauss_kronrod<double, 61>::integrate(f, m1 - 15 * s1, m1 + 15 * s1, 20, 1e-15);
    kl_err = std::max(kl_err, std::abs(kl_gaussian(r, p) - q));
  }

  const StationaryCovariance st = arx_state_covariance(kArx);
  const Dataset sim = recast_arx(simulate_arx(kArx, 1000000, {62, 0}), 1);
  const Matrix emp = sim.x.transpose() * sim.x / static_cast<double>(sim.n());
  double lyap_z = 0;
  for (Index i = 0; i < 2; ++i) {
    for (Index j = 0; j < 2; ++j) {
      // serial correlation inflation for AR(1) with a = 0.5: sqrt((1 + a)/(1 - a))
      const double se = 1.8 * std::sqrt((st.q_x(i, i) * st.q_x(j, j) + st.q_x(i, j) * st.q_x(i, j)) /
                                        static_cast<double>(sim.n()));
      lyap_z = std::max(lyap_z, std::abs(emp(i, j) - st.q_x(i, j)) / se);
    }
  }

  double chi_z = 0;
  std::chi_squared_distribution<double> chi(6.0);
  for (double t : {-0.05, -0.2, -0.5, -1.0, -3.0}) {
    double s1 = 0, s2 = 0;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
      const double e = std::exp(t * chi(eng));
      s1 += e;
      s2 += e * e;
    }
    const double mean = s1 / draws, se = std::sqrt((s2 / draws - mean * mean) / draws);
    chi_z = std::max(chi_z, std::abs(mean - std::pow(1 - 2 * t, -3.0)) / se);
  }
  report(6, gibbs_err < 1e-6 && kl_err < 1e-8 && lyap_z <= 5 && chi_z <= 3,
         fmt("gibbs rel err %.2g, kl err %.2g, lyapunov %.2f SE, chi2 mgf %.2f SE", gibbs_err, kl_err, lyap_z, chi_z));
}

void spectral() {
  std::mt19937_64 eng(71);
  bool mono = true;
  for (int r = 0; r < 10; ++r) {
    const SpectralSummary s = rho_sequence(random_stable_arx(eng), 50);
    for (std::size_t i = 1; i < s.rho.size(); ++i) mono = mono && s.rho[i] <= s.rho[i - 1] + 1e-12;
  }
  bool iid_exact = true;
  for (double r : rho_sequence(IIDIsotropic{vec({1, 2}), 1.3, 0.5}, 50).rho) iid_exact = iid_exact && r == 1.3 * 1.3;

  const Matrix q = joint_covariance(kArx, 30);
  const double lo = min_eigenvalue(q);
  std::normal_distribution<double> g;
  bool rayleigh = true;
  for (int r = 0; r < 1000; ++r) {
    Vector v(q.rows());
    for (Index i = 0; i < v.size(); ++i) v(i) = g(eng);
    rayleigh = rayleigh && lo * v.squaredNorm() <= v.dot(q * v) * (1 + 1e-12);
  }
  report(7, mono && iid_exact && rayleigh,
         fmt("monotone %d, iid exact %d, rayleigh %d (rho_30 = %.6g)", mono, iid_exact, rayleigh, lo));
}

void appendix() {
  const DvReport dv = dv_markov_check({81, 0}, 1000);
  HoeffdingSettings hs;
  hs.seed = {82, 0};
  hs.trials = 20000;
  const HoeffdingReport hr = hoeffding_mgf_check(hs);
  std::mt19937_64 eng(83);
  std::uniform_real_distribution<double> u(-6.0, 6.0);
  bool denom = true;
  for (int i = 0; i < 10000; ++i) {
    const double a = std::exp(u(eng)), b = std::exp(u(eng));
    denom = denom && b * std::log1p(a / b) > a * b / (a + b);
  }
  const bool spot = 2.0 > std::exp(0.5) && std::abs(std::exp(0.5) - 1.64872) < 1e-5;
  report(8, dv.passed && hr.passed && hr.rows.size() == 20 && denom && spot,
         fmt("dv max violation %.2g, tilted gap %.2g; hoeffding %zu predictors ok %d; denominator %d, spot %d",
             dv.max_violation, dv.max_tilted_gap, hr.rows.size(), hr.passed, denom, spot));
}

void divergence() {
  const DataModel m{kIid};
  // reported as diverged, never a number
  const PsiEstimate relaxed = psi_thm3_relaxed(PriorSpec::gaussian(2, 1.0), m, std::sqrt(50.0), 50, mc(100000, 91));
  // the raw Monte Carlo estimate shows the ESS collapse
  const RegressionMoments mom = regression_moments(m);
  const double scale = 2.0 * 50.0 / 50.0;  // 2 lambda^2 / n
  const PsiEstimate raw = estimate_prior_log_mean_exp(
      PriorSpec::gaussian(2, 1.0), [&](const Vector& w) { return scale * mom.v(w) * mom.v(w); }, mc(1000000, 92));

  using boost::math::quadrature::gauss_kronrod;
  const DataModel one = IIDIsotropic{vec({0.0}), 1.0, 0.5};
  const PriorSpec prior = PriorSpec::gaussian(1, 1.0);
  auto box = [&](double lambda, double half) {
    auto f = [&](double w) {
      const double v = w * w + 0.25;
      return std::exp(lambda * v - 25.0 * std::log1p(lambda * v / 25.0) - 0.5 * w * w);
    };
    return gauss_kronrod<double, 61>::integrate(f, -half, half, 25, 1e-12);
  };
  bool agree = true;
  for (double lambda : {0.475, 0.525}) {  // 2 lambda sigma_x^2 sigma_pi^2 = 0.95 and 1.05
    const bool converges = box(lambda, 80.0) / box(lambda, 40.0) < 1.0 + 1e-6;
    agree = agree && converges == finiteness_check(prior, one, lambda, BoundKind::thm3_exact);
  }
  report(9, !relaxed.finite() && !raw.finite() && raw.ess < kMinEffectiveSamples && agree,
         fmt("relaxed untruncated reported %s; raw ess %.2f of 1e6; finiteness boundary agrees %d",
             std::string(to_string(relaxed.method)).c_str(), raw.ess, agree));
}

void reproducibility() {
  CoverageSettings s;
  s.bound.lambda = 1.0;
  s.n = 30;
  s.trials = 200;
  s.seed = {101, 0};
  s.mc = mc(20000, 102);
  const PriorSpec prior = PriorSpec::gaussian(2, 0.5);
  std::string reference;
  bool same = true;
  for (int threads : {1, 2, 4, 7}) {
    set_worker_threads(threads);
    for (Execution exec : {Execution::serial, Execution::parallel}) {
      s.exec = exec;
      s.mc.exec = exec;
      CoverageReport r = coverage_experiment(kIid, prior, s);
      std::ostringstream csv;
      write_coverage_csv(r, csv);
      SweepSettings sw;
      sw.n_grid = {100, 400};
      sw.mc = s.mc;
      const std::string doc = coverage_json(r) + csv.str() + sweep_json(convergence_sweep(kIid, prior, sw));
      if (reference.empty()) reference = doc;
      same = same && doc == reference;
    }
  }
  set_worker_threads(1);
  report(10, same, fmt("coverage json/csv and sweep json byte-identical across threads 1,2,4,7 serial+parallel (%zu bytes)",
                       reference.size()));
}

}  // namespace

int main() {
  run(1, coverage_thm3);
  run(2, coverage_thm4);
  run(3, tightness);
  run(4, convergence);
  run(5, asymptote);
  run(6, oracles);
  run(7, spectral);
  run(8, appendix);
  run(9, divergence);
  run(10, reproducibility);
  std::printf("%s: %d failing\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures == 0 ? 0 : 1;
}
