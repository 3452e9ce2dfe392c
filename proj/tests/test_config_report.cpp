#include "pacb/config.hpp"
#include "pacb/errors.hpp"
#include "pacb/report.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace pacb;

namespace {

const char* kMinimal = R"({"model": {"type": "iid", "w_star": [0.5, -0.5], "sigma_x": 1, "sigma_eps": "0.5"},
  "prior": {"sigma_pi": 0.5}, "lambda": 1, "n": 50, "seed": 18446744073709551615})";

}  // namespace

TEST(Config, ParsesMinimalIid) {
  const RunConfig cfg = parse_run_config(kMinimal);
  const auto& m = std::get<IIDIsotropic>(cfg.model);
  EXPECT_EQ(m.sigma_eps, 0.5);
  EXPECT_EQ(cfg.seed, 18446744073709551615ULL);
  EXPECT_EQ(cfg.bound, BoundKind::thm3_exact);
  EXPECT_EQ(cfg.require_n(), 50);
  EXPECT_EQ(cfg.bound_settings(50).lambda, 1.0);
  EXPECT_EQ(cfg.digest.size(), 16u);
  EXPECT_EQ(parse_run_config(kMinimal).digest, cfg.digest);
  EXPECT_NE(parse_run_config(kMinimal, 3).digest, cfg.digest);
  EXPECT_EQ(parse_run_config(kMinimal, 3).seed, 3u);
}

TEST(Config, ArxCorrelatedAndTruncated) {
  const RunConfig arx = parse_run_config(R"({"model": {"type": "arx", "a": [0.5], "b": [0.3], "sigma_e": 0.5,
      "sigma_u": 1}, "prior": {"sigma_pi": 1, "truncated": true}, "bound": "thm4", "lambda_rule": "sqrt_n", "n": 64})");
  EXPECT_EQ(*arx.prior.truncation_radius, 5.0);
  EXPECT_EQ(arx.bound_settings(64).lambda, 8.0);
  const RunConfig cor = parse_run_config(R"({"model": {"type": "correlated", "w_star": [1, 2],
      "lag_blocks": [[[1, 0], [0, 1]], [[0.3, 0], [0, 0.3]]], "sigma_eps": 0.5}, "n": 4, "lambda": 1})");
  EXPECT_EQ(dimension(cor.model), 2);
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse_run_config(R"({"model": {"type": "iid", "w_star": [1]}, "bogus": 1})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"model": {"type": "iid", "w_star": [1], "extra": 2}})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"model": {"type": "iid", "w_star": [1]}, "delta": "0.5x"})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"model": {"type": "iid", "w_star": [1]}, "seed": -4})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"model": {"type": "iid", "w_star": [1]}, "delta": 0})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"model": {"type": "arx", "a": [1.5], "b": [0]}})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"model": {"type": "iid", "w_star": [1]}, "bound": "thm9"})"), ConfigError);
  EXPECT_THROW(parse_run_config("{not json"), ConfigError);
  EXPECT_THROW((void)parse_run_config(R"({"model": {"type": "iid", "w_star": [1]}})").bound_settings(10), ConfigError);
}

TEST(Report, CertificateJsonFields) {
  BoundCertificate c = assemble_certificate(0.5, 1.0, PsiEstimate::closed_form(0.25), 2.0, 0.05);
  c.n = 50;
  c.d = 2;
  c.config_digest = "abc";
  const std::string j = certificate_json(c);
  for (const char* key : {"\"bound_kind\"", "\"lambda\"", "\"delta\"", "\"n\"", "\"d\"", "\"expected_empirical\"",
                          "\"kl\"", "\"psi\"", "\"value\"", "\"std_error\"", "\"method\"", "\"ess\"", "\"rhs\"",
                          "\"rhs_std_error\"", "\"config_digest\""}) {
    EXPECT_NE(j.find(key), std::string::npos) << key;
  }
  EXPECT_NE(j.find("\"thm3_exact\""), std::string::npos);
  const BoundCertificate div = assemble_certificate(0.5, 1.0, PsiEstimate::diverged("why"), 2.0, 0.05);
  EXPECT_NE(certificate_json(div).find("\"rhs\": null"), std::string::npos);
}

TEST(Report, CsvLayouts) {
  CoverageReport r;
  r.rows = {{0, 0.5, 1.5, false}, {1, 2.0, 1.5, true}};
  std::ostringstream cov;
  write_coverage_csv(r, cov);
  EXPECT_EQ(cov.str(), "trial,lhs,rhs,violation\n0,0.5,1.5,0\n1,2,1.5,1\n");

  SweepTable t;
  SweepRow row;
  row.n = 10;
  row.lambda = 0.5;
  row.psi_value = 0.1;
  t.rows.push_back(row);
  SweepRow skipped;
  skipped.skipped = true;
  t.rows.push_back(skipped);
  std::ostringstream sw;
  write_sweep_csv(t, sw);
  EXPECT_EQ(sw.str(), "n,lambda,psi,psi_se,lhs,rhs,gap\n10,0.5,0.1,0,0,0,0\n");
  EXPECT_NE(sweep_json(t).find("\"skipped\": true"), std::string::npos);
}

TEST(Report, DigestAndFormatting) {
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1.0 / 3.0), "0.3333333333333333");
  EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
}
