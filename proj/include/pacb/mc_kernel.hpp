#pragma once

#include "pacb/prior.hpp"
#include "pacb/rng.hpp"

#include <functional>
#include <limits>

namespace pacb {

enum class Execution { serial, parallel };

// Running log-sum-exp of a stream of log-values l_i, kept relative to the
// running maximum: s1 = sum exp(l_i - max), s2 = sum exp(2 (l_i - max)).
struct LogExpAccumulator {
  double max = -std::numeric_limits<double>::infinity();
  double s1 = 0.0;
  double s2 = 0.0;
  Index count = 0;

  void add(double log_value);
  void merge(const LogExpAccumulator& other);

  // ln((1/count) sum exp(l_i))
  [[nodiscard]] double log_mean() const;
  // Delta-method standard error of log_mean().
  [[nodiscard]] double log_mean_std_error() const;
  // (sum e^l)^2 / sum e^{2l}
  [[nodiscard]] double effective_sample_size() const;
};

// Samples are processed in fixed chunks of this size, chunk c drawing from
// seed.child(c). Results therefore do not depend on the thread count.
inline constexpr Index kMonteCarloChunk = 2048;

// log integrand g(w); must be safe to call concurrently.
using LogIntegrand = std::function<double(const Vector&)>;

// Accumulates g(w) + log_weight(w) over `samples` prior draws.
// The serial version is the reference; the parallel one merges per-chunk
// partial sums in chunk order and is bitwise identical to it.
LogExpAccumulator prior_log_mean_exp_serial(const PriorSampler& sampler, Index samples, SeedSpec seed,
                                            const LogIntegrand& g);
LogExpAccumulator prior_log_mean_exp_parallel(const PriorSampler& sampler, Index samples, SeedSpec seed,
                                              const LogIntegrand& g);
LogExpAccumulator prior_log_mean_exp(const PriorSampler& sampler, Index samples, SeedSpec seed,
                                     const LogIntegrand& g, Execution exec = Execution::parallel);

// Runs job(i) for i in [0, count); parallel when exec says so. Jobs must
// write only to their own slot.
void for_each_index(Index count, const std::function<void(Index)>& job, Execution exec = Execution::parallel);

// Worker threads used by parallel kernels.
int worker_threads();
void set_worker_threads(int threads);

}  // namespace pacb
