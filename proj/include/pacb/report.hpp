#pragma once

#include "pacb/experiments.hpp"
#include "pacb/spectral.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

namespace pacb {

// 64-bit FNV-1a of the bytes, as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

// Shortest decimal that round-trips; "inf", "-inf", "nan" for non-finite values.
std::string format_double(double x);

// JSON documents, pretty-printed with sorted keys and a trailing newline.
// Non-finite numbers are written as null.
std::string certificate_json(const BoundCertificate& cert);
std::string coverage_json(const CoverageReport& report);
std::string sweep_json(const SweepTable& table);
std::string spectrum_json(const SpectralSummary& summary, std::string_view config_digest);

// CSV tables with a header row.
void write_coverage_csv(const CoverageReport& report, std::ostream& out);    // trial,lhs,rhs,violation
void write_sweep_csv(const SweepTable& table, std::ostream& out);           // n,lambda,psi,psi_se,lhs,rhs,gap
void write_spectrum_csv(const SpectralSummary& summary, std::ostream& out);  // n,rho_n
void write_certificate_csv(const BoundCertificate& cert, std::ostream& out);

}  // namespace pacb
