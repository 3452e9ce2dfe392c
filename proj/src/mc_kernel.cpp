#include "pacb/mc_kernel.hpp"

#include "pacb/errors.hpp"

#include <cmath>
#include <exception>
#include <mutex>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pacb {

void LogExpAccumulator::add(double log_value) {
  ++count;
  if (log_value == -std::numeric_limits<double>::infinity()) return;
  if (log_value > max) {
    if (std::isinf(max)) {
      s1 = 0.0;
      s2 = 0.0;
    } else {
      const double scale = std::exp(max - log_value);
      s1 *= scale;
      s2 *= scale * scale;
    }
    max = log_value;
  }
  const double t = std::exp(log_value - max);
  s1 += t;
  s2 += t * t;
}

void LogExpAccumulator::merge(const LogExpAccumulator& other) {
  count += other.count;
  if (other.s1 == 0.0) return;
  if (s1 == 0.0) {
    max = other.max;
    s1 = other.s1;
    s2 = other.s2;
    return;
  }
  if (other.max > max) {
    const double scale = std::exp(max - other.max);
    s1 = s1 * scale + other.s1;
    s2 = s2 * scale * scale + other.s2;
    max = other.max;
  } else {
    const double scale = std::exp(other.max - max);
    s1 += other.s1 * scale;
    s2 += other.s2 * scale * scale;
  }
}

double LogExpAccumulator::log_mean() const {
  if (count == 0) throw InvalidArgument("empty accumulator");
  if (s1 == 0.0) return -std::numeric_limits<double>::infinity();
  return max + std::log(s1 / static_cast<double>(count));
}

double LogExpAccumulator::log_mean_std_error() const {
  if (count < 2 || s1 == 0.0) return 0.0;
  const double m = static_cast<double>(count);
  const double mean = s1 / m;
  const double var = std::max(0.0, (s2 / m - mean * mean) * m / (m - 1.0));
  return std::sqrt(var / m) / mean;
}

double LogExpAccumulator::effective_sample_size() const {
  if (s2 == 0.0) return 0.0;
  return s1 * s1 / s2;
}

namespace {

LogExpAccumulator run_chunk(const PriorSampler& sampler, Index begin, Index end, SeedSpec chunk_seed,
                            const LogIntegrand& g) {
  Engine eng = chunk_seed.engine();
  std::normal_distribution<double> normal;
  LogExpAccumulator acc;
  Vector w(sampler.dim());
  double log_weight = 0.0;
  for (Index i = begin; i < end; ++i) {
    sampler.draw(eng, normal, w, log_weight);
    acc.add(g(w) + log_weight);
  }
  return acc;
}

Index chunk_count(Index samples) { return (samples + kMonteCarloChunk - 1) / kMonteCarloChunk; }

}  // namespace

LogExpAccumulator prior_log_mean_exp_serial(const PriorSampler& sampler, Index samples, SeedSpec seed,
                                            const LogIntegrand& g) {
  if (samples < 1) throw InvalidArgument("need at least one sample");
  LogExpAccumulator total;
  const Index chunks = chunk_count(samples);
  for (Index c = 0; c < chunks; ++c) {
    const Index begin = c * kMonteCarloChunk;
    const Index end = std::min(samples, begin + kMonteCarloChunk);
    total.merge(run_chunk(sampler, begin, end, seed.child(static_cast<std::uint64_t>(c)), g));
  }
  return total;
}

LogExpAccumulator prior_log_mean_exp_parallel(const PriorSampler& sampler, Index samples, SeedSpec seed,
                                              const LogIntegrand& g) {
  if (samples < 1) throw InvalidArgument("need at least one sample");
  const Index chunks = chunk_count(samples);
  std::vector<LogExpAccumulator> partial(static_cast<std::size_t>(chunks));
  for_each_index(
      chunks,
      [&](Index c) {
        const Index begin = c * kMonteCarloChunk;
        const Index end = std::min(samples, begin + kMonteCarloChunk);
        partial[static_cast<std::size_t>(c)] =
            run_chunk(sampler, begin, end, seed.child(static_cast<std::uint64_t>(c)), g);
      },
      Execution::parallel);
  LogExpAccumulator total;
  for (const auto& p : partial) total.merge(p);
  return total;
}

LogExpAccumulator prior_log_mean_exp(const PriorSampler& sampler, Index samples, SeedSpec seed,
                                     const LogIntegrand& g, Execution exec) {
  return exec == Execution::serial ? prior_log_mean_exp_serial(sampler, samples, seed, g)
                                   : prior_log_mean_exp_parallel(sampler, samples, seed, g);
}

void for_each_index(Index count, const std::function<void(Index)>& job, Execution exec) {
  if (exec == Execution::serial) {
    for (Index i = 0; i < count; ++i) job(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
#pragma omp parallel for schedule(dynamic)
  for (Index i = 0; i < count; ++i) {
    try {
      job(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

int worker_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_worker_threads(int threads) {
  if (threads < 1) throw InvalidArgument("thread count must be positive");
#ifdef _OPENMP
  omp_set_num_threads(threads);
#endif
}

}  // namespace pacb
