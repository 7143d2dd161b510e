#include "cinn/parallel.hpp"

#include <cstdlib>

namespace cinn {

int max_parallel_threads() {
  const char* env = std::getenv("CONTRACTIVE_INN_THREADS");
  if (env != nullptr) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<int>(v);
  }
  return omp_get_max_threads();
}

}  // namespace cinn
