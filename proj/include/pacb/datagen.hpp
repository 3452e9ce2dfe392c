#pragma once

#include "pacb/core_model.hpp"
#include "pacb/rng.hpp"

#include <filesystem>
#include <iosfwd>

namespace pacb {

struct TimeSeriesPair {
  Vector y;
  Vector u;
  Vector e;  // innovations e_t that produced y, kept for bookkeeping checks
  Index burn_in_used = 0;

  [[nodiscard]] Index length() const { return y.size(); }
};

// Rows are drawn one at a time (x_i then eps_i), so a dataset of n rows is a
// prefix of the dataset of n + 1 rows under the same seed.
Dataset sample_iid(const IIDIsotropic& model, Index n, SeedSpec seed);

// Stacked X_{1:n} ~ N(0, Q_{X,n}) through a Cholesky factor of Q_{X,n}.
Dataset sample_correlated(const CorrelatedGaussian& model, Index n, SeedSpec seed);

// ceil(ln(1e-8) / ln(r)) for the companion spectral radius r, at least 2k.
Index arx_burn_in(const Arx& model);

// Simulates T samples after discarding the burn-in; zero initial state.
TimeSeriesPair simulate_arx(const Arx& model, Index length, SeedSpec seed);

// Y_i = y_{i+k}, X_i = [y_{i+k-1} .. y_i, u_{i+k-1} .. u_i]; n = T - k rows.
Dataset recast_arx(const TimeSeriesPair& series, Index k);

// Dataset of n rows from any model (ARX: simulate n + k samples and recast).
Dataset sample_dataset(const DataModel& model, Index n, SeedSpec seed);

// CSV with header x1,...,xd,y. Values are written with 17 significant digits
// so a write/load cycle is exact.
void write_dataset_csv(const Dataset& data, std::ostream& out);
void write_dataset_csv(const Dataset& data, const std::filesystem::path& path);
Dataset read_dataset_csv(std::istream& in);
Dataset load_dataset_csv(const std::filesystem::path& path);

}  // namespace pacb
