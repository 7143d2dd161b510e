#pragma once

#include <cstdint>

#include <omp.h>

namespace cinn {

/// Execution policy for the data-parallel batch kernels. Every kernel has a
/// serial path that computes bit-identical results; the OpenMP path writes
/// per-index slots (or uses order-independent reductions) so the schedule
/// never changes the output.
enum class ExecMode { serial, openmp };

/// Thread budget for ExecMode::openmp. Reads CONTRACTIVE_INN_THREADS each call
/// (0 or unset means the OpenMP default).
int max_parallel_threads();

template <class F>
void parallel_for(std::int64_t n, ExecMode mode, F&& body) {
  if (mode == ExecMode::serial || n <= 1) {
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }
  const int threads = max_parallel_threads();
#pragma omp parallel for schedule(static) num_threads(threads)
  for (std::int64_t i = 0; i < n; ++i) body(i);
}

}  // namespace cinn
