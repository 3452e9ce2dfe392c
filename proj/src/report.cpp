#include "pacb/report.hpp"

#include <json.hpp>

#include <array>
#include <charconv>
#include <cmath>
#include <ostream>

namespace pacb {
namespace {

using nlohmann::json;

json number(double x) {
  if (!std::isfinite(x)) return nullptr;
  return x;
}

std::string finish(const json& j) { return j.dump(2) + "\n"; }

json psi_json(const PsiEstimate& psi) {
  json j;
  j["value"] = number(psi.value);
  j["std_error"] = number(psi.std_error);
  j["method"] = std::string(to_string(psi.method));
  j["ess"] = number(psi.ess);
  if (psi.samples > 0) j["samples"] = psi.samples;
  if (!psi.note.empty()) j["note"] = psi.note;
  return j;
}

}  // namespace

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return {buf.data(), res.ptr};
}

std::string certificate_json(const BoundCertificate& cert) {
  json j;
  j["bound_kind"] = std::string(to_string(cert.kind));
  j["lambda"] = number(cert.lambda);
  j["delta"] = number(cert.delta);
  j["n"] = cert.n;
  j["d"] = cert.d;
  j["expected_empirical"] = number(cert.expected_empirical);
  j["kl"] = number(cert.kl);
  j["psi"] = psi_json(cert.psi);
  j["rhs"] = number(cert.rhs);
  j["rhs_std_error"] = number(cert.rhs_std_error);
  j["config_digest"] = cert.config_digest;
  if (!cert.note.empty()) j["note"] = cert.note;
  return finish(j);
}

std::string coverage_json(const CoverageReport& report) {
  json j;
  j["trials"] = report.trials;
  j["violations"] = report.violations;
  j["rate"] = number(report.rate);
  j["delta"] = number(report.delta);
  j["wilson_ci"] = json::array({number(report.wilson_lower), number(report.wilson_upper)});
  j["config_digest"] = report.config_digest;
  j["bound_kind"] = std::string(to_string(report.kind));
  j["lambda"] = number(report.lambda);
  j["n"] = report.n;
  j["psi"] = psi_json(report.psi);
  return finish(j);
}

std::string sweep_json(const SweepTable& table) {
  json rows = json::array();
  for (const SweepRow& r : table.rows) {
    json row;
    row["n"] = r.n;
    row["lambda"] = number(r.lambda);
    if (r.skipped) {
      row["skipped"] = true;
      row["reason"] = r.note;
    } else {
      row["psi"] = number(r.psi_value);
      row["psi_se"] = number(r.psi_se);
      row["lhs"] = number(r.lhs);
      row["rhs"] = number(r.rhs);
      row["gap"] = number(r.gap);
      row["ok"] = r.ok;
      if (!r.note.empty()) row["note"] = r.note;
    }
    rows.push_back(row);
  }
  json j;
  j["kind"] = table.kind;
  j["config_digest"] = table.config_digest;
  j["rows"] = rows;
  j["all_ok"] = table.all_ok();
  return finish(j);
}

std::string spectrum_json(const SpectralSummary& summary, std::string_view config_digest) {
  json rho = json::array();
  for (double r : summary.rho) rho.push_back(number(r));
  json j;
  j["n_max"] = summary.n_max;
  j["rho_n"] = rho;
  j["rho_star_bracket"] = json::array({number(summary.rho_star_bracket.lower), number(summary.rho_star_bracket.upper)});
  j["config_digest"] = std::string(config_digest);
  return finish(j);
}

void write_coverage_csv(const CoverageReport& report, std::ostream& out) {
  out << "trial,lhs,rhs,violation\n";
  for (const CoverageTrial& r : report.rows) {
    out << r.trial << ',' << format_double(r.lhs) << ',' << format_double(r.rhs) << ',' << (r.violation ? 1 : 0)
        << '\n';
  }
}

// Skipped rows appear in the JSON form only.
void write_sweep_csv(const SweepTable& table, std::ostream& out) {
  out << "n,lambda,psi,psi_se,lhs,rhs,gap\n";
  for (const SweepRow& r : table.rows) {
    if (r.skipped) continue;
    out << r.n << ',' << format_double(r.lambda) << ',' << format_double(r.psi_value) << ','
        << format_double(r.psi_se) << ',' << format_double(r.lhs) << ',' << format_double(r.rhs) << ','
        << format_double(r.gap) << '\n';
  }
}

void write_spectrum_csv(const SpectralSummary& summary, std::ostream& out) {
  out << "n,rho_n\n";
  for (std::size_t i = 0; i < summary.rho.size(); ++i) out << i + 1 << ',' << format_double(summary.rho[i]) << '\n';
}

void write_certificate_csv(const BoundCertificate& cert, std::ostream& out) {
  out << "bound_kind,lambda,delta,n,d,expected_empirical,kl,psi,psi_std_error,psi_method,psi_ess,rhs,rhs_std_error,"
         "config_digest\n";
  out << to_string(cert.kind) << ',' << format_double(cert.lambda) << ',' << format_double(cert.delta) << ','
      << cert.n << ',' << cert.d << ',' << format_double(cert.expected_empirical) << ',' << format_double(cert.kl)
      << ',' << format_double(cert.psi.value) << ',' << format_double(cert.psi.std_error) << ','
      << to_string(cert.psi.method) << ',' << format_double(cert.psi.ess) << ',' << format_double(cert.rhs) << ','
      << format_double(cert.rhs_std_error) << ',' << cert.config_digest << '\n';
}

}  // namespace pacb
