#pragma once

#include "pacb/experiments.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pacb {

enum class SweepKind { convergence, asymptote };

// A run configuration as read from JSON. Real-valued fields accept numbers or
// decimal strings; seeds are unsigned 64-bit integers. Unknown keys are errors.
struct RunConfig {
  DataModel model;
  PriorSpec prior;
  BoundKind bound = BoundKind::thm3_exact;
  LambdaSchedule lambda;  // "lambda" and "lambda_rule"
  bool lambda_given = false;
  double delta = 0.05;
  std::optional<Index> n;
  std::vector<Index> n_grid;
  std::vector<double> lambda_grid;
  std::optional<Index> trials;
  Index mc_samples = 100000;
  std::uint64_t seed = 0;
  std::optional<double> c;
  double loss_bound = 1.0;
  std::optional<double> rho_n;
  std::optional<double> rho_star;
  std::optional<std::filesystem::path> dataset;
  std::optional<GaussianWeightMeasure> fixed_posterior;
  SweepKind sweep = SweepKind::convergence;
  std::optional<std::filesystem::path> out;

  std::string canonical;  // compact sorted-key JSON, without "out"
  std::string digest;     // fnv1a_hex(canonical)

  // Bound settings at sample size n (lambda rule resolved).
  [[nodiscard]] BoundSettings bound_settings(Index n_value) const;
  [[nodiscard]] Index require_n() const;
};

// Throws ConfigError with the offending key in the message.
RunConfig parse_run_config(std::string_view json_text, std::optional<std::uint64_t> seed_override = std::nullopt);
RunConfig load_run_config(const std::filesystem::path& path,
                          std::optional<std::uint64_t> seed_override = std::nullopt);

}  // namespace pacb
