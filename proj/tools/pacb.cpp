// pacb: command-line front end for the certificate library.
//
//   pacb certify  --config run.json [--out DIR] [--seed U64] [--threads N] [--format json|csv]
//   pacb coverage | compare | sweep | spectrum | simulate  (same flags)
//
// Exit status: 0 success, 1 configuration or validation error, 2 diverged bound.

#include "pacb/config.hpp"
#include "pacb/datagen.hpp"
#include "pacb/errors.hpp"
#include "pacb/experiments.hpp"
#include "pacb/report.hpp"
#include "pacb/spectral.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace pacb;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitDiverged = 2;

struct GlobalOptions {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string format;
};

struct Context {
  RunConfig cfg;
  fs::path out_dir;
  std::string format;
  SeedSpec root;

  [[nodiscard]] McSettings mc() const { return {cfg.mc_samples, root.child(3), Execution::parallel}; }

  void write(const std::string& name, const std::string& text) const {
    fs::create_directories(out_dir);
    const fs::path path = out_dir / name;
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ResourceError("cannot write " + path.string());
    f << text;
    if (!f) throw ResourceError("failed writing " + path.string());
    std::cout << path.string() << '\n';
  }

  template <typename Fn>
  void write_csv(const std::string& name, Fn&& fn) const {
    std::ostringstream s;
    fn(s);
    write(name, s.str());
  }
};

void apply_threads(const std::optional<int>& flag) {
  std::optional<int> threads = flag;
  if (!threads) {
    if (const char* env = std::getenv("PACB_THREADS"); env != nullptr && *env != '\0') {
      int v = 0;
      const std::string s(env);
      const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw ConfigError("PACB_THREADS must be a positive integer, got '" + s + "'");
      }
      threads = v;
    }
  }
  if (threads) {
    if (*threads < 1) throw ConfigError("thread count must be positive");
    set_worker_threads(*threads);
  }
}

Context make_context(const GlobalOptions& g, std::string_view default_format) {
  Context ctx;
  ctx.cfg = load_run_config(g.config, g.seed);
  ctx.out_dir = !g.out.empty() ? fs::path(g.out) : ctx.cfg.out.value_or(fs::path("."));
  ctx.format = g.format.empty() ? std::string(default_format) : g.format;
  ctx.root = SeedSpec{ctx.cfg.seed, 0};
  return ctx;
}

Dataset obtain_dataset(const Context& ctx) {
  if (ctx.cfg.dataset) {
    Dataset data = load_dataset_csv(*ctx.cfg.dataset);
    if (data.d() != dimension(ctx.cfg.model)) throw ConfigError("dataset dimension does not match the model");
    return data;
  }
  return sample_dataset(ctx.cfg.model, ctx.cfg.require_n(), ctx.root.child(0));
}

int cmd_certify(const GlobalOptions& g) {
  const Context ctx = make_context(g, "json");
  const Dataset data = obtain_dataset(ctx);
  const BoundSettings bound = ctx.cfg.bound_settings(data.n());
  const PsiEstimate psi = compute_psi(ctx.cfg.prior, ctx.cfg.model, data.n(), bound, ctx.mc());
  BoundCertificate cert;
  if (psi.finite()) {
    cert = certify_with_psi(ctx.cfg.prior, ctx.cfg.model, data, bound, psi, ctx.cfg.fixed_posterior, ctx.root.child(4))
               .certificate;
  } else {
    cert.kind = bound.kind;
    cert.lambda = bound.lambda;
    cert.delta = bound.delta;
    cert.n = data.n();
    cert.d = data.d();
    cert.psi = psi;
    cert.rhs = std::numeric_limits<double>::infinity();
    cert.note = "diverged: " + psi.note;
  }
  cert.config_digest = ctx.cfg.digest;
  if (ctx.format == "csv") {
    ctx.write_csv("certificate.csv", [&](std::ostream& s) { write_certificate_csv(cert, s); });
  } else {
    ctx.write("certificate.json", certificate_json(cert));
  }
  if (!psi.finite()) {
    std::cerr << "pacb: complexity term diverged for " << to_string(bound.kind) << ": " << psi.note << '\n';
    return kExitDiverged;
  }
  return kExitOk;
}

int cmd_coverage(const GlobalOptions& g) {
  const Context ctx = make_context(g, "csv");
  if (!ctx.cfg.trials) throw ConfigError("config key 'trials': required");
  CoverageSettings s;
  s.n = ctx.cfg.require_n();
  s.bound = ctx.cfg.bound_settings(s.n);
  s.trials = *ctx.cfg.trials;
  s.seed = ctx.root.child(1);
  s.mc = ctx.mc();
  s.fixed_posterior = ctx.cfg.fixed_posterior;
  CoverageReport report = coverage_experiment(ctx.cfg.model, ctx.cfg.prior, s);
  report.config_digest = ctx.cfg.digest;
  if (ctx.format == "csv") ctx.write_csv("coverage.csv", [&](std::ostream& o) { write_coverage_csv(report, o); });
  ctx.write("coverage.json", coverage_json(report));
  return kExitOk;
}

void emit_table(const Context& ctx, const std::string& stem, SweepTable& table) {
  table.config_digest = ctx.cfg.digest;
  if (ctx.format == "csv") {
    ctx.write_csv(stem + ".csv", [&](std::ostream& o) { write_sweep_csv(table, o); });
  } else {
    ctx.write(stem + ".json", sweep_json(table));
  }
}

int cmd_compare(const GlobalOptions& g) {
  const Context ctx = make_context(g, "csv");
  const auto* iid = std::get_if<IIDIsotropic>(&ctx.cfg.model);
  if (iid == nullptr) throw ConfigError("compare needs an iid model");
  if (ctx.cfg.lambda_grid.empty()) throw ConfigError("config key 'lambda_grid': required");
  CompareSettings s;
  s.lambda_grid = ctx.cfg.lambda_grid;
  s.delta = ctx.cfg.delta;
  s.n = ctx.cfg.require_n();
  s.c = ctx.cfg.c;
  s.seed = ctx.root;
  s.mc = ctx.mc();
  SweepTable table = compare_bounds(*iid, ctx.cfg.prior, s);
  emit_table(ctx, "compare", table);
  return kExitOk;
}

int cmd_sweep(const GlobalOptions& g) {
  const Context ctx = make_context(g, "csv");
  if (ctx.cfg.n_grid.empty()) throw ConfigError("config key 'n_grid': required");
  SweepTable table;
  if (ctx.cfg.sweep == SweepKind::asymptote) {
    const auto* arx = std::get_if<Arx>(&ctx.cfg.model);
    if (arx == nullptr) throw ConfigError("the asymptote sweep needs an arx model");
    if (!ctx.cfg.lambda_given) throw ConfigError("config key 'lambda': required");
    AsymptoteSettings s{ctx.cfg.lambda.value, ctx.cfg.n_grid, ctx.mc()};
    table = noniid_asymptote_sweep(*arx, ctx.cfg.prior, s);
  } else {
    if (ctx.cfg.lambda.rule == LambdaRule::fixed && !ctx.cfg.lambda_given) {
      throw ConfigError("config key 'lambda': required for the fixed rule");
    }
    SweepSettings s;
    s.schedule = ctx.cfg.lambda;
    s.n_grid = ctx.cfg.n_grid;
    s.delta = ctx.cfg.delta;
    s.kind = ctx.cfg.bound;
    s.loss_bound = ctx.cfg.loss_bound;
    s.seed = ctx.root;
    s.mc = ctx.mc();
    table = convergence_sweep(ctx.cfg.model, ctx.cfg.prior, s);
  }
  emit_table(ctx, "sweep", table);
  return kExitOk;
}

int cmd_spectrum(const GlobalOptions& g) {
  const Context ctx = make_context(g, "csv");
  Index n_max = ctx.cfg.n.value_or(0);
  for (Index n : ctx.cfg.n_grid) n_max = std::max(n_max, n);
  if (n_max < 1) throw ConfigError("config key 'n' or 'n_grid': required");
  const SpectralSummary summary = rho_sequence(ctx.cfg.model, n_max);
  if (ctx.format == "csv") {
    ctx.write_csv("spectrum.csv", [&](std::ostream& o) { write_spectrum_csv(summary, o); });
  } else {
    ctx.write("spectrum.json", spectrum_json(summary, ctx.cfg.digest));
  }
  return kExitOk;
}

int cmd_simulate(const GlobalOptions& g) {
  const Context ctx = make_context(g, "csv");
  if (ctx.format != "csv") throw ConfigError("simulate writes CSV only");
  const Dataset data = sample_dataset(ctx.cfg.model, ctx.cfg.require_n(), ctx.root.child(0));
  ctx.write_csv("dataset.csv", [&](std::ostream& o) { write_dataset_csv(data, o); });
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PAC-Bayes generalization certificates for Bayesian linear regression"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--config", g.config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "Output directory (default: config 'out' or .)");
  app.add_option("--seed", g.seed, "Master seed, overrides the config");
  app.add_option("--threads", g.threads, "Worker threads (fallback: PACB_THREADS)")->check(CLI::PositiveNumber);
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"json", "csv"}));

  int (*command)(const GlobalOptions&) = nullptr;
  const std::pair<const char*, int (*)(const GlobalOptions&)> commands[] = {
      {"certify", cmd_certify},   {"coverage", cmd_coverage}, {"compare", cmd_compare},
      {"sweep", cmd_sweep},       {"spectrum", cmd_spectrum}, {"simulate", cmd_simulate},
  };
  const char* help[] = {"Certify the Gibbs posterior on one dataset", "Monte Carlo coverage of a bound",
                        "Older Gaussian bound vs the chi-square bound over a lambda grid",
                        "Convergence or non-iid asymptote sweep over n", "rho_n = lambda_min(Q_{X,n}) for n = 1..n",
                        "Write a sampled dataset as CSV"};
  for (std::size_t i = 0; i < std::size(commands); ++i) {
    auto* sub = app.add_subcommand(commands[i].first, help[i]);
    sub->fallthrough();
    sub->callback([&command, fn = commands[i].second] { command = fn; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    apply_threads(g.threads);
    return command(g);
  } catch (const DivergedError& e) {
    std::cerr << "pacb: diverged: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const Error& e) {
    std::cerr << "pacb: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "pacb: " << e.what() << '\n';
    return kExitConfig;
  }
}
