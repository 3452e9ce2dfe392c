#include "pacb/config.hpp"

#include "pacb/errors.hpp"
#include "pacb/report.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>

namespace pacb {
namespace {

using nlohmann::json;

[[noreturn]] void fail(std::string_view key, std::string_view what) {
  throw ConfigError("config key '" + std::string(key) + "': " + std::string(what));
}

void reject_unknown(const json& obj, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) fail(where, "expected an object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (std::string_view a : allowed) known = known || item.key() == a;
    if (!known) fail(std::string(where) + "." + item.key(), "unknown key");
  }
}

double as_real(const json& v, std::string_view key) {
  double out = 0.0;
  if (v.is_number()) {
    out = v.get<double>();
  } else if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    const char* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, out);
    if (res.ec != std::errc() || res.ptr != end) fail(key, "'" + s + "' is not a decimal number");
  } else {
    fail(key, "expected a number");
  }
  if (!std::isfinite(out)) fail(key, "must be finite");
  return out;
}

std::uint64_t as_u64(const json& v, std::string_view key) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    const auto i = v.get<std::int64_t>();
    if (i < 0) fail(key, "must be non-negative");
    return static_cast<std::uint64_t>(i);
  }
  if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    std::uint64_t out = 0;
    const char* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, out);
    if (res.ec != std::errc() || res.ptr != end) fail(key, "'" + s + "' is not an unsigned integer");
    return out;
  }
  fail(key, "expected an unsigned integer");
}

Index as_index(const json& v, std::string_view key) {
  const std::uint64_t u = as_u64(v, key);
  if (u > static_cast<std::uint64_t>(std::numeric_limits<Index>::max())) fail(key, "too large");
  return static_cast<Index>(u);
}

Vector as_vector(const json& v, std::string_view key) {
  if (!v.is_array() || v.empty()) fail(key, "expected a non-empty array of numbers");
  Vector out(static_cast<Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Index>(i)) = as_real(v[i], key);
  return out;
}

Matrix as_matrix(const json& v, std::string_view key) {
  if (!v.is_array() || v.empty()) fail(key, "expected a non-empty array of rows");
  const auto rows = static_cast<Index>(v.size());
  Index cols = -1;
  Matrix out;
  for (Index r = 0; r < rows; ++r) {
    const Vector row = as_vector(v[static_cast<std::size_t>(r)], key);
    if (cols < 0) {
      cols = row.size();
      out.resize(rows, cols);
    } else if (row.size() != cols) {
      fail(key, "rows have different lengths");
    }
    out.row(r) = row.transpose();
  }
  return out;
}

DataModel parse_model(const json& m) {
  if (!m.is_object() || !m.contains("type")) fail("model", "needs a 'type' of iid, correlated or arx");
  const std::string type = m.at("type").is_string() ? m.at("type").get<std::string>() : "";
  if (type == "iid") {
    reject_unknown(m, "model", {"type", "w_star", "sigma_x", "sigma_eps"});
    IIDIsotropic iid;
    if (!m.contains("w_star")) fail("model.w_star", "required");
    iid.w_star = as_vector(m.at("w_star"), "model.w_star");
    if (m.contains("sigma_x")) iid.sigma_x = as_real(m.at("sigma_x"), "model.sigma_x");
    if (m.contains("sigma_eps")) iid.sigma_eps = as_real(m.at("sigma_eps"), "model.sigma_eps");
    return iid;
  }
  if (type == "arx") {
    reject_unknown(m, "model", {"type", "a", "b", "sigma_e", "sigma_u"});
    Arx arx;
    if (!m.contains("a") || !m.contains("b")) fail("model", "arx needs 'a' and 'b'");
    arx.a = as_vector(m.at("a"), "model.a");
    arx.b = as_vector(m.at("b"), "model.b");
    if (m.contains("sigma_e")) arx.sigma_e = as_real(m.at("sigma_e"), "model.sigma_e");
    if (m.contains("sigma_u")) arx.sigma_u = as_real(m.at("sigma_u"), "model.sigma_u");
    return arx;
  }
  if (type == "correlated") {
    reject_unknown(m, "model", {"type", "w_star", "lag_blocks", "sigma_eps"});
    if (!m.contains("w_star") || !m.contains("lag_blocks")) fail("model", "correlated needs 'w_star' and 'lag_blocks'");
    const json& blocks = m.at("lag_blocks");
    if (!blocks.is_array() || blocks.empty()) fail("model.lag_blocks", "expected a non-empty array of matrices");
    std::vector<Matrix> mats;
    for (const auto& b : blocks) mats.push_back(as_matrix(b, "model.lag_blocks"));
    double sigma_eps = 1.0;
    if (m.contains("sigma_eps")) sigma_eps = as_real(m.at("sigma_eps"), "model.sigma_eps");
    try {
      return make_correlated(as_vector(m.at("w_star"), "model.w_star"),
                             std::make_shared<LagBlocks>(std::move(mats)), sigma_eps);
    } catch (const Error& e) {
      fail("model", e.what());
    }
  }
  fail("model.type", "must be iid, correlated or arx");
}

PriorSpec parse_prior(const json& p, Index d) {
  reject_unknown(p, "prior", {"sigma_pi", "mean", "truncated", "truncation_radius"});
  const double sigma = p.contains("sigma_pi") ? as_real(p.at("sigma_pi"), "prior.sigma_pi") : 1.0;
  if (!(sigma > 0.0)) fail("prior.sigma_pi", "must be positive");
  WeightVector mean = WeightVector::Zero(d);
  if (p.contains("mean")) {
    mean = as_vector(p.at("mean"), "prior.mean");
    if (mean.size() != d) fail("prior.mean", "length does not match the model dimension");
  }
  PriorSpec prior{GaussianWeightMeasure::isotropic(d, sigma, mean), std::nullopt};
  bool truncated = false;
  if (p.contains("truncated")) {
    if (!p.at("truncated").is_boolean()) fail("prior.truncated", "expected true or false");
    truncated = p.at("truncated").get<bool>();
  }
  if (p.contains("truncation_radius")) {
    const double r = as_real(p.at("truncation_radius"), "prior.truncation_radius");
    if (!(r > 0.0)) fail("prior.truncation_radius", "must be positive");
    prior.truncation_radius = r;
  } else if (truncated) {
    prior.truncation_radius = 5.0 * sigma;
  }
  return prior;
}

}  // namespace

BoundSettings RunConfig::bound_settings(Index n_value) const {
  BoundSettings b;
  b.kind = bound;
  if (lambda.rule == LambdaRule::fixed && !lambda_given) throw ConfigError("config key 'lambda': required");
  b.lambda = lambda_for(lambda, n_value, dimension(model), delta);
  b.delta = delta;
  b.c = c;
  b.loss_bound = loss_bound;
  b.rho_n = rho_n;
  b.rho_star = rho_star;
  return b;
}

Index RunConfig::require_n() const {
  if (!n) throw ConfigError("config key 'n': required");
  return *n;
}

RunConfig parse_run_config(std::string_view json_text, std::optional<std::uint64_t> seed_override) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(root, "config",
                 {"model", "prior", "bound", "lambda", "lambda_rule", "delta", "n", "n_grid", "lambda_grid", "trials",
                  "mc_samples", "seed", "c", "loss_bound", "rho_n", "rho_star", "dataset", "posterior", "sweep", "out"});

  RunConfig cfg;
  if (!root.contains("model")) fail("model", "required");
  cfg.model = parse_model(root.at("model"));
  try {
    validate(cfg.model);
  } catch (const Error& e) {
    fail("model", e.what());
  }
  const Index d = dimension(cfg.model);
  cfg.prior = parse_prior(root.value("prior", json::object()), d);

  if (root.contains("bound")) {
    if (!root.at("bound").is_string()) fail("bound", "expected a string");
    cfg.bound = parse_bound_kind(root.at("bound").get<std::string>());
  }
  if (root.contains("lambda")) {
    cfg.lambda.value = as_real(root.at("lambda"), "lambda");
    if (!(cfg.lambda.value > 0.0)) fail("lambda", "must be positive");
    cfg.lambda_given = true;
  }
  if (root.contains("lambda_rule")) {
    const json& r = root.at("lambda_rule");
    const std::string rule = r.is_string() ? r.get<std::string>() : "";
    if (rule == "fixed") {
      cfg.lambda.rule = LambdaRule::fixed;
    } else if (rule == "sqrt_n") {
      cfg.lambda.rule = LambdaRule::sqrt_n;
    } else if (rule == "n_pow_inv_d") {
      cfg.lambda.rule = LambdaRule::n_pow_inv_d;
    } else {
      fail("lambda_rule", "must be fixed, sqrt_n or n_pow_inv_d");
    }
  }
  if (root.contains("delta")) {
    cfg.delta = as_real(root.at("delta"), "delta");
    if (!(cfg.delta > 0.0 && cfg.delta <= 1.0)) fail("delta", "must lie in (0, 1]");
  }
  if (root.contains("n")) {
    cfg.n = as_index(root.at("n"), "n");
    if (*cfg.n < 1) fail("n", "must be positive");
  }
  if (root.contains("n_grid")) {
    const json& g = root.at("n_grid");
    if (!g.is_array() || g.empty()) fail("n_grid", "expected a non-empty array");
    for (const auto& v : g) {
      cfg.n_grid.push_back(as_index(v, "n_grid"));
      if (cfg.n_grid.back() < 1) fail("n_grid", "entries must be positive");
    }
  }
  if (root.contains("lambda_grid")) {
    const json& g = root.at("lambda_grid");
    if (!g.is_array() || g.empty()) fail("lambda_grid", "expected a non-empty array");
    for (const auto& v : g) cfg.lambda_grid.push_back(as_real(v, "lambda_grid"));
  }
  if (root.contains("trials")) cfg.trials = as_index(root.at("trials"), "trials");
  if (root.contains("mc_samples")) {
    cfg.mc_samples = as_index(root.at("mc_samples"), "mc_samples");
    if (cfg.mc_samples < kMinPsiSamples) fail("mc_samples", "must be at least " + std::to_string(kMinPsiSamples));
  }
  if (seed_override) {
    root["seed"] = *seed_override;
  }
  if (root.contains("seed")) cfg.seed = as_u64(root.at("seed"), "seed");
  if (root.contains("c")) cfg.c = as_real(root.at("c"), "c");
  if (root.contains("loss_bound")) {
    cfg.loss_bound = as_real(root.at("loss_bound"), "loss_bound");
    if (!(cfg.loss_bound > 0.0)) fail("loss_bound", "must be positive");
  }
  if (root.contains("rho_n")) cfg.rho_n = as_real(root.at("rho_n"), "rho_n");
  if (root.contains("rho_star")) cfg.rho_star = as_real(root.at("rho_star"), "rho_star");
  if (root.contains("dataset")) {
    if (!root.at("dataset").is_string()) fail("dataset", "expected a path");
    cfg.dataset = root.at("dataset").get<std::string>();
  }
  if (root.contains("posterior")) {
    const json& p = root.at("posterior");
    reject_unknown(p, "posterior", {"mean", "cov"});
    if (!p.contains("mean") || !p.contains("cov")) fail("posterior", "needs 'mean' and 'cov'");
    GaussianWeightMeasure post{as_vector(p.at("mean"), "posterior.mean"), as_matrix(p.at("cov"), "posterior.cov")};
    try {
      validate(post);
    } catch (const Error& e) {
      fail("posterior", e.what());
    }
    if (post.dim() != d) fail("posterior", "dimension does not match the model");
    cfg.fixed_posterior = std::move(post);
  }
  if (root.contains("sweep")) {
    const std::string s = root.at("sweep").is_string() ? root.at("sweep").get<std::string>() : "";
    if (s == "convergence") {
      cfg.sweep = SweepKind::convergence;
    } else if (s == "asymptote") {
      cfg.sweep = SweepKind::asymptote;
    } else {
      fail("sweep", "must be convergence or asymptote");
    }
  }
  if (root.contains("out")) {
    if (!root.at("out").is_string()) fail("out", "expected a path");
    cfg.out = root.at("out").get<std::string>();
    root.erase("out");
  }
  try {
    validate(cfg.prior);
  } catch (const Error& e) {
    fail("prior", e.what());
  }

  cfg.canonical = root.dump();
  cfg.digest = fnv1a_hex(cfg.canonical);
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str(), seed_override);
}

}  // namespace pacb
