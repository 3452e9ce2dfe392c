#include "pacb/spectral.hpp"

#include "pacb/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

namespace pacb {
namespace {

constexpr long kMaxLyapunovIterations = 1'000'000;
constexpr double kLyapunovTolerance = 1e-12;

void check_symmetric(const Matrix& m) {
  if (m.rows() != m.cols()) throw InvalidArgument("matrix must be square");
  if (m.size() == 0) throw InvalidArgument("matrix must be non-empty");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (!(asym <= 1e-10 * scale)) {
    throw InvalidArgument("matrix is not symmetric (max asymmetry " + std::to_string(asym) + ")");
  }
}

bool is_diagonal(const Matrix& m) {
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) {
      if (i != j && m(i, j) != 0.0) return false;
    }
  }
  return true;
}

Vector symmetric_eigenvalues(const Matrix& m) {
  check_symmetric(m);
  if (is_diagonal(m)) {
    Vector ev = m.diagonal();
    std::sort(ev.data(), ev.data() + ev.size());
    return ev;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw Error("symmetric eigensolver did not converge");
  return es.eigenvalues();
}

void check_size(Index n, Index d, Index size_cap) {
  if (n < 1) throw InvalidArgument("n must be positive");
  if (n * d > size_cap) {
    throw ResourceError("joint covariance of size " + std::to_string(n * d) + " exceeds the size cap " +
                        std::to_string(size_cap));
  }
}

}  // namespace

StateSpaceForm arx_state_space(const Arx& model) {
  const Index k = model.order();
  if (k < 1 || model.b.size() != k) throw InvalidArgument("ARX model needs a and b of equal length k >= 1");
  const Index d = 2 * k;
  StateSpaceForm f{Matrix::Zero(d, d), Matrix::Zero(d, 2), Matrix::Zero(2, 2)};
  f.A.block(0, 0, 1, k) = model.a.transpose();
  f.A.block(0, k, 1, k) = model.b.transpose();
  for (Index i = 1; i < k; ++i) {
    f.A(i, i - 1) = 1.0;
    f.A(k + i, k + i - 1) = 1.0;
  }
  f.B(0, 0) = 1.0;
  f.B(k, 1) = 1.0;
  f.W(0, 0) = model.sigma_e * model.sigma_e;
  f.W(1, 1) = model.sigma_u * model.sigma_u;
  return f;
}

Matrix StationaryCovariance::cross_covariance(Index lag) const {
  if (lag < 0) throw InvalidArgument("lag must be non-negative");
  Matrix c = q_x;
  for (Index l = 0; l < lag; ++l) c = transition * c;
  return c;
}

StationaryCovariance arx_state_covariance(const Arx& model) {
  validate(DataModel{model});
  const StateSpaceForm f = arx_state_space(model);
  const Matrix noise = f.B * f.W * f.B.transpose();
  Matrix p = noise;
  for (long it = 1; it <= kMaxLyapunovIterations; ++it) {
    Matrix next = f.A * p * f.A.transpose() + noise;
    next = 0.5 * (next + next.transpose()).eval();
    const double step = (next - p).cwiseAbs().maxCoeff();
    p = std::move(next);
    const double scale = std::max(1.0, p.cwiseAbs().maxCoeff());
    if (step < kLyapunovTolerance * scale) {
      const double residual = (p - f.A * p * f.A.transpose() - noise).cwiseAbs().maxCoeff();
      return {p, f.A, it, residual};
    }
  }
  throw InstabilityError("stationary covariance iteration did not converge within 1e6 iterations");
}

std::shared_ptr<const JointCovarianceProvider> covariance_provider(const DataModel& model) {
  if (const auto* m = std::get_if<IIDIsotropic>(&model)) {
    const Index d = m->w_star.size();
    return std::make_shared<IndependentBlocks>(m->sigma_x * m->sigma_x * Matrix::Identity(d, d));
  }
  if (const auto* m = std::get_if<CorrelatedGaussian>(&model)) {
    if (!m->joint_cov_source) throw InvalidArgument("correlated model needs a covariance source");
    return m->joint_cov_source;
  }
  return std::make_shared<ArxRegressorCovariance>(std::get<Arx>(model));
}

Matrix joint_covariance(const JointCovarianceProvider& source, Index n, Index size_cap) {
  const Index d = source.dim();
  check_size(n, d, size_cap);
  std::vector<Matrix> lag(static_cast<std::size_t>(n));
  for (Index l = 0; l < n; ++l) lag[static_cast<std::size_t>(l)] = source.cross_covariance(l);
  Matrix q(n * d, n * d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < i; ++j) {
      const Matrix& c = lag[static_cast<std::size_t>(i - j)];
      q.block(i * d, j * d, d, d) = c;
      q.block(j * d, i * d, d, d) = c.transpose();
    }
    const Matrix& c0 = lag[0];
    for (Index r = 0; r < d; ++r) {
      for (Index s = 0; s <= r; ++s) {
        q(i * d + r, i * d + s) = c0(r, s);
        q(i * d + s, i * d + r) = c0(r, s);
      }
    }
  }
  return q;
}

Matrix joint_covariance(const DataModel& model, Index n, Index size_cap) {
  validate(model);
  check_size(n, dimension(model), size_cap);
  return joint_covariance(*covariance_provider(model), n, size_cap);
}

double min_eigenvalue(const Matrix& m) { return symmetric_eigenvalues(m)(0); }

namespace {
// Joint covariances are PSD by construction; stacked ARX regressors of order
// k >= 2 repeat coordinates, so the true minimum is 0 and roundoff goes negative.
double psd_floor(const Matrix& m) { return std::max(0.0, min_eigenvalue(m)); }
}  // namespace

double max_eigenvalue(const Matrix& m) {
  const Vector ev = symmetric_eigenvalues(m);
  return ev(ev.size() - 1);
}

Matrix inverse_sqrt_spd(const Matrix& m) {
  check_symmetric(m);
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  if (es.info() != Eigen::Success) throw Error("symmetric eigensolver did not converge");
  if (!(es.eigenvalues().minCoeff() > 0.0)) throw InvalidArgument("matrix is not positive definite");
  const Vector inv_sqrt = es.eigenvalues().array().rsqrt();
  return es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose();
}

SpectralSummary rho_sequence(const DataModel& model, Index n_max, Index size_cap) {
  validate(model);
  const Index d = dimension(model);
  check_size(n_max, d, size_cap);
  const auto source = covariance_provider(model);
  // Q_{X,n} is the leading nd x nd block of Q_{X,n_max}.
  const Matrix full = joint_covariance(*source, n_max, size_cap);

  SpectralSummary out;
  out.n_max = n_max;
  out.q_x = full.topLeftCorner(d, d);
  out.rho.assign(static_cast<std::size_t>(n_max), 0.0);
#pragma omp parallel for schedule(dynamic)
  for (Index n = 1; n <= n_max; ++n) {
    out.rho[static_cast<std::size_t>(n - 1)] = psd_floor(full.topLeftCorner(n * d, n * d));
  }
  const double slack = 1e-12 * std::max(1.0, out.rho.front());
  for (std::size_t i = 1; i < out.rho.size(); ++i) {
    if (out.rho[i] > out.rho[i - 1] + slack) {
      throw Error("rho_n increased at n = " + std::to_string(i + 1) + "; interlacing violated");
    }
  }
  const double last = out.rho.back();
  const double half = out.rho[static_cast<std::size_t>(std::max<Index>(1, n_max / 2) - 1)];
  out.rho_star_bracket = {std::max(0.0, last - (half - last)), last};
  return out;
}

double rho_at(const DataModel& model, Index n, Index size_cap) {
  return psd_floor(joint_covariance(model, n, size_cap));
}

std::vector<double> rho_at(const DataModel& model, const std::vector<Index>& ns, Index size_cap) {
  validate(model);
  if (ns.empty()) return {};
  const Index d = dimension(model);
  const Index n_max = *std::max_element(ns.begin(), ns.end());
  if (*std::min_element(ns.begin(), ns.end()) < 1) throw InvalidArgument("n must be positive");
  check_size(n_max, d, size_cap);
  const Matrix full = joint_covariance(*covariance_provider(model), n_max, size_cap);
  std::vector<double> out(ns.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < ns.size(); ++i) {
    out[i] = psd_floor(full.topLeftCorner(ns[i] * d, ns[i] * d));
  }
  return out;
}

RhoStarBracket rho_star_bracket(const DataModel& model, Index n_max, Index size_cap) {
  validate(model);
  const Index d = dimension(model);
  check_size(n_max, d, size_cap);
  const Matrix full = joint_covariance(*covariance_provider(model), n_max, size_cap);
  const Index half_n = std::max<Index>(1, n_max / 2);
  const double last = psd_floor(full);
  const double half = psd_floor(full.topLeftCorner(half_n * d, half_n * d));
  return {std::max(0.0, last - (half - last)), last};
}

Matrix prediction_error_covariance(const WeightVector& w, const DataModel& model, Index n, Index size_cap) {
  const Index d = dimension(model);
  if (w.size() != d) throw DimensionMismatch("weight vector dimension does not match the model");
  const Matrix qxn = joint_covariance(model, n, size_cap);
  const RegressionMoments mom = regression_moments(model);
  const Vector diff = w - mom.w_star;
  Matrix q(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j <= i; ++j) {
      const double v = diff.dot(qxn.block(i * d, j * d, d, d) * diff);
      q(i, j) = v;
      q(j, i) = v;
    }
  }
  q.diagonal().array() += mom.sigma_eps2;
  return q;
}

WhitenReport whiten_check(const WeightVector& w, const DataModel& model, Index n, SeedSpec seed, Index samples) {
  if (samples < 2) throw InvalidArgument("whiten_check needs at least two samples");
  const Index d = dimension(model);
  const Matrix qxn = joint_covariance(model, n);
  const Matrix qwn = prediction_error_covariance(w, model, n);
  const Matrix whitener = inverse_sqrt_spd(qwn);
  Eigen::LLT<Matrix> chol(qxn);
  if (chol.info() != Eigen::Success) throw InvalidArgument("joint covariance is not positive definite");
  const Matrix lower = chol.matrixL();
  const RegressionMoments mom = regression_moments(model);
  const Vector diff = mom.w_star - w;
  const double sigma_eps = std::sqrt(mom.sigma_eps2);

  Engine eng = seed.engine();
  std::normal_distribution<double> normal;
  Matrix second = Matrix::Zero(n, n);
  double q_sum = 0.0;
  double q_sq_sum = 0.0;
  Vector g(n * d);
  Vector z(n);
  for (Index s = 0; s < samples; ++s) {
    for (Index i = 0; i < g.size(); ++i) g(i) = normal(eng);
    const Vector x = lower * g;
    for (Index i = 0; i < n; ++i) z(i) = diff.dot(x.segment(i * d, d)) + sigma_eps * normal(eng);
    const Vector white = whitener * z;
    second.selfadjointView<Eigen::Lower>().rankUpdate(white);
    const double q = white.squaredNorm();
    q_sum += q;
    q_sq_sum += q * q;
  }
  const double m = static_cast<double>(samples);
  second = second.selfadjointView<Eigen::Lower>();
  second /= m;

  WhitenReport r;
  r.n = n;
  r.samples = samples;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j <= i; ++j) {
      const double target = i == j ? 1.0 : 0.0;
      const double se = std::sqrt((i == j ? 2.0 : 1.0) / m);
      r.max_cov_error_in_se = std::max(r.max_cov_error_in_se, std::abs(second(i, j) - target) / se);
    }
  }
  const double nn = static_cast<double>(n);
  r.chi2_mean = q_sum / m;
  r.chi2_var = (q_sq_sum - m * r.chi2_mean * r.chi2_mean) / (m - 1.0);
  r.chi2_mean_se = std::sqrt(2.0 * nn / m);
  r.chi2_var_se = std::sqrt((8.0 * nn * nn + 48.0 * nn) / m);
  r.passed = r.max_cov_error_in_se < 5.0 && std::abs(r.chi2_mean - nn) < 5.0 * r.chi2_mean_se &&
             std::abs(r.chi2_var - 2.0 * nn) < 5.0 * r.chi2_var_se;
  return r;
}

}  // namespace pacb
